"""Weight checkpoints: a flat little-endian binary archive.

Each record is {name length u32, name utf-8, rank u32, dims u32 x rank,
float32 data}, written in the model's canonical parameter order. A plain-text
sidecar (<path>.txt) lists names and shapes for quick diffing.
"""

from __future__ import annotations

import struct

import numpy as np

from .tensor import Parameter


def save_checkpoint(params: list[Parameter], path) -> None:
    path = str(path)
    with open(path, "wb") as f:
        for p in params:
            name = p.name.encode("utf-8")
            f.write(struct.pack("<I", len(name)))
            f.write(name)
            dims = p.data.shape
            f.write(struct.pack("<I", len(dims)))
            f.write(struct.pack(f"<{len(dims)}I", *dims))
            f.write(np.ascontiguousarray(p.data, dtype="<f4").tobytes())
    with open(path + ".txt", "w") as f:
        for p in params:
            f.write(f"{p.name}\t{'x'.join(map(str, p.data.shape))}\n")


def load_checkpoint(path) -> dict[str, np.ndarray]:
    """Read an archive back as an ordered {name: float32 array} mapping."""
    out: dict[str, np.ndarray] = {}
    with open(path, "rb") as f:
        while True:
            head = f.read(4)
            if not head:
                break
            if len(head) < 4:
                raise ValueError(f"{path}: truncated record header")
            (name_len,) = struct.unpack("<I", head)
            name = f.read(name_len).decode("utf-8")
            (rank,) = struct.unpack("<I", f.read(4))
            dims = struct.unpack(f"<{rank}I", f.read(4 * rank)) if rank else ()
            count = int(np.prod(dims)) if dims else 1
            data = np.frombuffer(f.read(4 * count), dtype="<f4")
            if data.size != count:
                raise ValueError(f"{path}: truncated data for {name!r}")
            out[name] = data.reshape(dims).copy()
    return out


def restore_parameters(params: list[Parameter], loaded: dict[str, np.ndarray],
                       skip: tuple[str, ...] = ()) -> None:
    """Overwrite parameters from a loaded archive; strict on names and shapes.

    Names listed in `skip` are neither required nor loaded (backbone
    transplants exclude the classification head this way). All problems are
    gathered and reported together.
    """
    problems = []
    for p in params:
        if p.name in skip:
            continue
        if p.name not in loaded:
            problems.append(f"missing from checkpoint: {p.name}")
            continue
        src = loaded[p.name]
        if src.shape != p.data.shape:
            problems.append(
                f"shape mismatch for {p.name}: model {p.data.shape}, checkpoint {src.shape}")
            continue
        p.data[...] = src.astype(p.data.dtype)
    if problems:
        raise ValueError("checkpoint incompatible: " + "; ".join(problems))
