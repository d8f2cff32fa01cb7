"""HTTP recommender service: classify an uploaded clip, return the genre
distribution, the rendered mel image, and the five most similar catalog songs.

The model and catalog load once and are shared read-only; request handling is
pure, so concurrent identical uploads produce identical responses.
"""

from __future__ import annotations

import base64
import io
import os
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass

from fastapi import FastAPI, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .audio import (
    DEFAULT_SAMPLE_RATE,
    AudioClip,
    AudioDecodeError,
    AudioWindow,
    decode_wav_bytes,
    resample,
)
from .dataset import GENRES
from .features import FeatureExtractor
from .imaging import SpectroImage, save_png
from .models import build_model, load_weights, predict
from .recommend import CatalogEntry, load_catalog, recommend

SHORT_AUDIO_MESSAGE = "audio shorter than 3 seconds"


@dataclass
class ServiceConfig:
    checkpoint_path: str = ""
    catalog_path: str = ""
    arch: str = "hybrid"
    max_upload_bytes: int = 16 * 1024 * 1024
    similarity: str = "cosine"
    static_dir: str = ""

    @classmethod
    def from_env(cls) -> "ServiceConfig":
        return cls(
            checkpoint_path=os.environ.get("GENRECLF_CHECKPOINT", ""),
            catalog_path=os.environ.get("GENRECLF_CATALOG", ""),
            arch=os.environ.get("GENRECLF_ARCH", "hybrid"),
            max_upload_bytes=int(os.environ.get("GENRECLF_MAX_UPLOAD", 16 * 1024 * 1024)),
            similarity=os.environ.get("GENRECLF_SIMILARITY", "cosine"),
            static_dir=os.environ.get("GENRECLF_STATIC_DIR", ""),
        )


class InferenceContext:
    def __init__(self, config: ServiceConfig):
        self.model = build_model(config.arch)
        load_weights(self.model, config.checkpoint_path)
        self.catalog: list[CatalogEntry] = load_catalog(config.catalog_path)
        self.extractor = FeatureExtractor()
        self.similarity = config.similarity


def center_window(clip: AudioClip, seconds: float = 3.0) -> AudioWindow:
    length = int(round(seconds * clip.sample_rate))
    offset = (len(clip.samples) - length) // 2
    return AudioWindow(clip.samples[offset:offset + length], clip.sample_rate,
                       clip.source_id, offset)


def _png_bytes(image: SpectroImage) -> bytes:
    buf = io.BytesIO()
    save_png(image, buf)
    return buf.getvalue()


def create_app(config: ServiceConfig | None = None, defer_load: bool = False) -> FastAPI:
    config = config or ServiceConfig.from_env()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        if not defer_load:
            app.state.load_context()
        yield

    app = FastAPI(title="genreclf recommender", lifespan=lifespan)
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    app.state.config = config
    app.state.ctx = None

    def load_context():
        if app.state.ctx is None:
            app.state.ctx = InferenceContext(config)
        return app.state.ctx

    app.state.load_context = load_context

    @app.exception_handler(Exception)
    async def internal_error(request: Request, exc: Exception):
        return JSONResponse(status_code=500, content={
            "detail": "internal error", "id": uuid.uuid4().hex})

    @app.get("/health")
    def health():
        if app.state.ctx is None:
            return JSONResponse(status_code=503, content={"status": "loading"})
        return {"status": "ok", "catalog_size": len(app.state.ctx.catalog)}

    @app.get("/genres")
    def genres():
        return {"genres": list(GENRES)}

    @app.post("/classify")
    async def classify(file: UploadFile):
        if app.state.ctx is None:
            return JSONResponse(status_code=503, content={"detail": "model not loaded"})
        ctx: InferenceContext = app.state.ctx

        payload = await file.read()
        if len(payload) > config.max_upload_bytes:
            return JSONResponse(status_code=413, content={
                "detail": f"upload exceeds {config.max_upload_bytes} bytes"})

        try:
            clip = decode_wav_bytes(payload, label=file.filename or "upload")
        except AudioDecodeError as exc:
            return JSONResponse(status_code=400, content={"detail": str(exc)})
        if clip.sample_rate != DEFAULT_SAMPLE_RATE:
            clip = resample(clip, DEFAULT_SAMPLE_RATE)
        if clip.duration < 3.0:
            return JSONResponse(status_code=400, content={"detail": SHORT_AUDIO_MESSAGE})

        window = center_window(clip)
        image = ctx.extractor.image(window)
        dist, top_idx = predict(ctx.model, image.pixels.transpose(2, 0, 1))
        recs = recommend(dist, ctx.catalog, k=5, measure=ctx.similarity)
        return {
            "probs": dist.probs.tolist(),
            "top_genre": GENRES[top_idx],
            "recommendations": [
                {"song_id": r.song_id, "title": r.title, "similarity": r.similarity}
                for r in recs
            ],
            "spectrogram_png_base64": base64.b64encode(_png_bytes(image)).decode("ascii"),
        }

    if config.static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="ui")

    return app


def run(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn
    uvicorn.run(create_app(config), host=host, port=port)
