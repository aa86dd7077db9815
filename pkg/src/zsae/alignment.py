"""Pure numerical kernel: pooling, semantic aggregation, projection,
normalization, and cosine similarity.

All operations are side-effect-free functions of immutable inputs and
accumulate in float64 regardless of storage precision.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import ClassSemantics, VideoSample
from .errors import DegenerateEmbeddingError, ValidationError

NORM_EPS = 1e-12


def _as_matrix(x, what: str) -> np.ndarray:
    try:
        arr = np.asarray(x, dtype=np.float64)
    except (ValueError, TypeError) as err:
        raise ValidationError(f"{what}: not a rectangular numeric array: {err}") from err
    if arr.ndim != 2:
        raise ValidationError(f"{what}: expected a 2-D array, got shape {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValidationError(f"{what}: empty")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{what}: contains NaN/Inf")
    return arr


def _frozen_matrix(x, what: str) -> np.ndarray:
    # Copy so freezing never flips flags on caller-owned memory.
    arr = _as_matrix(x, what).copy()
    arr.flags.writeable = False
    return arr


def _as_vector(x, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValidationError(f"{what}: expected a nonempty 1-D vector, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{what}: contains NaN/Inf")
    return arr


@dataclass(frozen=True, eq=False)
class AlignmentModel:
    """Linear cross-modal alignment: two projection matrices and a
    softmax temperature.

    ``w_v`` maps visual vectors (dim d_v) and ``w_t`` text vectors
    (dim d_t) into a shared space of dimension ``shared_dim``; there are
    no bias terms.
    """

    w_v: np.ndarray  # [shared_dim, d_v]
    w_t: np.ndarray  # [shared_dim, d_t]
    tau: float

    def __post_init__(self) -> None:
        w_v = _frozen_matrix(self.w_v, "w_v")
        w_t = _frozen_matrix(self.w_t, "w_t")
        object.__setattr__(self, "w_v", w_v)
        object.__setattr__(self, "w_t", w_t)
        if w_v.shape[0] != w_t.shape[0]:
            raise ValidationError(
                f"w_v and w_t disagree on shared_dim: {w_v.shape[0]} vs {w_t.shape[0]}"
            )
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValidationError(f"temperature must be positive and finite, got {self.tau}")

    @property
    def shared_dim(self) -> int:
        return self.w_v.shape[0]

    @property
    def visual_dim(self) -> int:
        return self.w_v.shape[1]

    @property
    def text_dim(self) -> int:
        return self.w_t.shape[1]


@dataclass(frozen=True, eq=False)
class ClassPrototypeTable:
    """Unit-norm class prototypes in the shared space, ordered
    lexicographically by class_id (ties in downstream argmaxes therefore
    resolve to the smallest id)."""

    class_ids: tuple[str, ...]
    prototypes: np.ndarray  # [K, shared_dim], unit rows

    def __post_init__(self) -> None:
        object.__setattr__(self, "class_ids", tuple(self.class_ids))
        protos = _frozen_matrix(self.prototypes, "prototypes")
        object.__setattr__(self, "prototypes", protos)
        if len(self.class_ids) != protos.shape[0]:
            raise ValidationError(
                f"{len(self.class_ids)} class_ids for {protos.shape[0]} prototypes"
            )
        if list(self.class_ids) != sorted(set(self.class_ids)):
            raise ValidationError("class_ids must be unique and lexicographically sorted")
        norms = np.linalg.norm(protos, axis=1)
        if np.abs(norms - 1.0).max() > 1e-9:
            raise ValidationError("prototypes must be unit-norm within 1e-9")

    def __len__(self) -> int:
        return len(self.class_ids)


def pool_clips(clips) -> np.ndarray:
    """Average-pool clip vectors into one video vector.

    Accepts an [N, d] array or a list of equal-length 1-D vectors, N >= 1.
    """
    try:
        arr = np.asarray(clips, dtype=np.float64)
    except (ValueError, TypeError) as err:
        raise ValidationError(f"clips: ragged or non-numeric input: {err}") from err
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValidationError(f"clips: expected nonempty [N, d] input, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError("clips: contains NaN/Inf")
    return arr.mean(axis=0)


def aggregate_descriptions(semantics: ClassSemantics) -> np.ndarray:
    """Mean of a class's description embeddings (its raw semantic vector)."""
    descs = semantics.descriptions
    if descs.shape[0] == 0:
        raise ValidationError(f"class {semantics.class_id!r}: no descriptions")
    return descs.astype(np.float64).mean(axis=0)


def project(model: AlignmentModel, vector, modality: str) -> np.ndarray:
    """Apply the modality's projection matrix (no bias)."""
    if modality == "visual":
        w = model.w_v
    elif modality == "text":
        w = model.w_t
    else:
        raise ValidationError(f"modality must be 'visual' or 'text', got {modality!r}")
    v = _as_vector(vector, "vector")
    if v.shape[0] != w.shape[1]:
        raise ValidationError(
            f"{modality} projection expects dim {w.shape[1]}, got {v.shape[0]}"
        )
    return w @ v


def l2_normalize(vector) -> np.ndarray:
    """Scale a vector to unit norm; raises DegenerateEmbeddingError when
    the norm is at or below the 1e-12 floor."""
    v = _as_vector(vector, "vector")
    norm = float(np.linalg.norm(v))
    if not norm > NORM_EPS:
        raise DegenerateEmbeddingError(
            f"cannot normalize: norm {norm:.3e} <= {NORM_EPS:.0e} "
            "(projection may have collapsed)"
        )
    return v / norm


def cosine_sim(a, b) -> float:
    u = _as_vector(a, "a")
    v = _as_vector(b, "b")
    if u.shape[0] != v.shape[0]:
        raise ValidationError(f"dim mismatch: {u.shape[0]} vs {v.shape[0]}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if not (nu > NORM_EPS and nv > NORM_EPS):
        raise DegenerateEmbeddingError("cosine similarity undefined for (near-)zero vectors")
    return float((u @ v) / (nu * nv))


def normalize_rows(matrix: np.ndarray, what: str = "rows") -> np.ndarray:
    """Unit-normalize each row; any (near-)zero row raises."""
    norms = np.linalg.norm(matrix, axis=1)
    bad = np.nonzero(~(norms > NORM_EPS))[0]
    if bad.size:
        raise DegenerateEmbeddingError(
            f"{what}: row {int(bad[0])} has norm {norms[bad[0]]:.3e} <= {NORM_EPS:.0e}"
        )
    return matrix / norms[:, None]


def embed_video(model: AlignmentModel, video: VideoSample) -> np.ndarray:
    """Pool, project, and normalize a video into the shared space."""
    pooled = pool_clips(video.clips)
    try:
        return l2_normalize(project(model, pooled, "visual"))
    except DegenerateEmbeddingError as err:
        raise DegenerateEmbeddingError(f"video {video.video_id!r}: {err}") from err


def build_prototypes(
    model: AlignmentModel, classes: list[ClassSemantics] | tuple[ClassSemantics, ...]
) -> ClassPrototypeTable:
    """Aggregate, project, and normalize each class into its prototype.

    The table is ordered lexicographically by class_id.
    """
    if not classes:
        raise ValidationError("no classes to build prototypes from")
    ordered = sorted(classes, key=lambda c: c.class_id)
    ids = [c.class_id for c in ordered]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate class_ids in prototype input")
    rows = []
    for cls in ordered:
        try:
            rows.append(l2_normalize(project(model, aggregate_descriptions(cls), "text")))
        except DegenerateEmbeddingError as err:
            raise DegenerateEmbeddingError(f"class {cls.class_id!r}: {err}") from err
    return ClassPrototypeTable(class_ids=tuple(ids), prototypes=np.stack(rows))
