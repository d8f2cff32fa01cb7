"""Music genre classification toolkit.

Raw audio -> log-mel spectrogram images -> a ResNet18/Bi-GRU hybrid (built on
the in-repo NN engine) -> leakage-safe evaluation -> a genre-distribution
recommender service.
"""

from .audio import (
    AudioClip,
    AudioDecodeError,
    AudioWindow,
    EmptyAudioError,
    UnsupportedWavError,
    WindowingError,
    decode_wav,
    decode_wav_bytes,
    resample,
    sample_windows,
    write_wav,
)
from .baselines import (
    FeatureVector,
    KnnClassifier,
    LinearSvmClassifier,
    Standardizer,
    SvmConfig,
    featurize,
    knn_predict,
    svm_fit,
    svm_predict,
)
from .dataset import (
    GENRES,
    ArrayManifest,
    Manifest,
    ManifestEntry,
    SplitPlan,
    batch_iter,
    build_manifest,
    group_shuffle_split,
    naive_split,
    split_leakage,
)
from .dsp import (
    ComplexSpectrogram,
    FilterbankMatrix,
    LogMelSpectrogram,
    MelSpectrogram,
    StftParams,
    db_scale,
    hz_to_mel,
    log_compress,
    mel_filterbank,
    mel_spectrogram,
    mel_to_hz,
    power_spectrum,
    stft,
)
from .estimators import (
    NeuralGenreClassifier,
    SpectrogramImageTransformer,
    validate_images,
    validate_windows,
)
from .features import FeatureConfig, FeatureExtractor
from .imaging import SpectroImage, load_lmel, load_png, render_image, save_lmel, save_png
from .metrics import ConfusionMatrix, MetricsReport, confusion, weighted_metrics
from .models import (
    ARCHITECTURES,
    BiGruClassifier,
    CnnBaseline,
    GenreDistribution,
    HybridResNetBiGru,
    ResNet18,
    build_bigru_classifier,
    build_cnn_baseline,
    build_hybrid,
    build_model,
    build_resnet18,
    load_external_resnet_weights,
    load_weights,
    predict,
    predict_batch,
    save_model,
)
from .recommend import (
    CatalogEntry,
    Recommendation,
    build_catalog,
    cosine_similarity,
    load_catalog,
    recommend,
    save_catalog,
)
from .trainer import (
    EarlyStopper,
    TrainConfig,
    TrainReport,
    TrainingDivergedError,
    evaluate,
    export_curves,
    train,
)

__version__ = "0.1.0"
