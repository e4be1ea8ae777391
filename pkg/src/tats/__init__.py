"""Text-augmented time series modeling.

Paired per-timestamp texts often share the periodic structure of the
series they accompany. This package measures that alignment (spectral
analysis plus a 1-D transport distance) and exploits it by projecting
text embeddings into auxiliary channels of ordinary forecasting and
imputation models.
"""

from .data import (
    BinaryMask,
    EmbeddingSequence,
    MultimodalDataset,
    TimeSeries,
    WindowSample,
    chronological_split,
    generate_mask,
    make_imputation_windows,
    make_windows,
)
from .embedding_io import (
    hash_embed,
    hash_embed_texts,
    mean_center,
    pool_tokens,
    read_embeddings,
    write_embeddings,
)
from .estimators import (
    AugmentedForecaster,
    AugmentedImputer,
    MlpProjector,
    TatsForecaster,
    TatsImputer,
    TrainConfig,
    augment,
    project,
    train_forecast,
    train_impute,
)
from .experiment import ExperimentConfig, ResultsDocument, load_csv, run_experiment
from .metrics import EvalReport, evaluate, promotion
from .spectral import (
    CtrConfig,
    CtrReport,
    LagSimilarityCurve,
    Spectrum,
    analyze_ctr,
    difference,
    lag_similarity,
    magnitude_spectrum,
    nms,
    text_spectrum,
    top_frequencies,
)
from .synthetic import make_synthetic_hidden_driver
from .transport import (
    NormalizedSpectrum,
    TransportPlan,
    lp_oracle,
    normalize_spectrum,
    shuffle_ratio,
    tt_wasserstein,
    wasserstein_1d,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedForecaster",
    "AugmentedImputer",
    "BinaryMask",
    "CtrConfig",
    "CtrReport",
    "EmbeddingSequence",
    "EvalReport",
    "ExperimentConfig",
    "LagSimilarityCurve",
    "MlpProjector",
    "MultimodalDataset",
    "NormalizedSpectrum",
    "ResultsDocument",
    "Spectrum",
    "TatsForecaster",
    "TatsImputer",
    "TimeSeries",
    "TrainConfig",
    "TransportPlan",
    "WindowSample",
    "analyze_ctr",
    "augment",
    "chronological_split",
    "difference",
    "evaluate",
    "generate_mask",
    "hash_embed",
    "hash_embed_texts",
    "lag_similarity",
    "load_csv",
    "lp_oracle",
    "magnitude_spectrum",
    "make_imputation_windows",
    "make_synthetic_hidden_driver",
    "make_windows",
    "mean_center",
    "nms",
    "normalize_spectrum",
    "pool_tokens",
    "project",
    "promotion",
    "read_embeddings",
    "run_experiment",
    "shuffle_ratio",
    "text_spectrum",
    "top_frequencies",
    "train_forecast",
    "train_impute",
    "tt_wasserstein",
    "wasserstein_1d",
    "write_embeddings",
]
