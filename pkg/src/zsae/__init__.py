"""Zero-shot action recognition on precomputed embeddings.

Public surface: domain types and manifest I/O (data_model), the numeric
alignment kernel (alignment), contrastive training (trainer), zero-shot
evaluation and reporting (evaluator), synthetic datasets (synthetic),
and a CLI (``zsae``).
"""

from .alignment import (
    AlignmentModel,
    ClassPrototypeTable,
    aggregate_descriptions,
    build_prototypes,
    cosine_sim,
    embed_video,
    l2_normalize,
    pool_clips,
    project,
)
from .data_model import (
    ClassSemantics,
    DatasetManifest,
    SplitSpec,
    VideoSample,
    load_manifest,
    load_split,
    save_manifest,
    save_split,
    validate_split,
)
from .errors import DegenerateEmbeddingError, NumericalError, ValidationError
from .evaluator import (
    AggregateReport,
    EvalReport,
    Prediction,
    aggregate_splits,
    evaluate_split,
    format_mean_std,
    predict,
)
from .synthetic import SyntheticGroundTruth, SyntheticSpec, generate_synthetic
from .trainer import (
    Batch,
    GradientPair,
    TrainConfig,
    TrainLog,
    contrastive_loss,
    loss_gradients,
    sgd_step,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "AggregateReport",
    "AlignmentModel",
    "Batch",
    "ClassPrototypeTable",
    "ClassSemantics",
    "DatasetManifest",
    "DegenerateEmbeddingError",
    "EvalReport",
    "GradientPair",
    "NumericalError",
    "Prediction",
    "SplitSpec",
    "SyntheticGroundTruth",
    "SyntheticSpec",
    "TrainConfig",
    "TrainLog",
    "ValidationError",
    "VideoSample",
    "aggregate_descriptions",
    "aggregate_splits",
    "build_prototypes",
    "contrastive_loss",
    "cosine_sim",
    "embed_video",
    "evaluate_split",
    "format_mean_std",
    "generate_synthetic",
    "l2_normalize",
    "load_manifest",
    "load_split",
    "loss_gradients",
    "pool_clips",
    "predict",
    "project",
    "save_manifest",
    "save_split",
    "sgd_step",
    "train",
    "validate_split",
]
