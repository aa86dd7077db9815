"""Seeded synthetic datasets with a known latent structure.

Each class gets a unit-norm latent prototype; clip and description
vectors are linear images of that prototype (plus optional Gaussian
noise) under fixed full-column-rank maps. Because a linear projection
pair can align the two modalities perfectly, "training works" becomes a
checkable claim, and nearest-prototype classification in latent space
gives an independent accuracy ceiling.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .data_model import ClassSemantics, DatasetManifest, VideoSample
from .errors import ValidationError

# Pairwise |cosine| cap for latent prototypes: keeps every pair of class
# directions well separated (angle in [66, 114] degrees) so nearest-prototype
# classification has real margins.
MAX_PROTOTYPE_COS = 0.4

_MAX_SEED = 2**64


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the latent linear generative model."""

    num_classes: int
    videos_per_class: int
    descriptions_per_class: int
    latent_dim: int
    visual_dim: int
    text_dim: int
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        for name in (
            "num_classes",
            "videos_per_class",
            "descriptions_per_class",
            "latent_dim",
            "visual_dim",
            "text_dim",
        ):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if self.latent_dim > min(self.visual_dim, self.text_dim):
            raise ValidationError(
                f"latent_dim {self.latent_dim} exceeds min(visual_dim, text_dim) = "
                f"{min(self.visual_dim, self.text_dim)}"
            )
        if not (np.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValidationError(f"noise_sigma must be >= 0, got {self.noise_sigma!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < _MAX_SEED:
            raise ValidationError(f"seed must be a u64, got {self.seed!r}")


@dataclass(frozen=True, eq=False)
class SyntheticGroundTruth:
    """Generator-side truth: label table plus the latent model behind it.

    The latent parameters let an independent oracle classify videos by
    nearest latent prototype, without touching any trained model.
    """

    assignments: Mapping[str, str]  # video_id -> class_id
    class_ids: tuple[str, ...]  # row order of latent_prototypes
    latent_prototypes: np.ndarray  # [K, latent_dim], unit rows, float64
    visual_map: np.ndarray  # [d_v, latent_dim] float64
    text_map: np.ndarray  # [d_t, latent_dim] float64

    def __post_init__(self) -> None:
        object.__setattr__(self, "assignments", MappingProxyType(dict(self.assignments)))
        for name in ("latent_prototypes", "visual_map", "text_map"):
            arr = np.asarray(getattr(self, name), dtype=np.float64).copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def _full_column_rank_map(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    for _ in range(100):
        candidate = rng.standard_normal((rows, cols))
        if np.linalg.matrix_rank(candidate) == cols:
            return candidate
    raise ValidationError(f"could not draw a full-column-rank {rows}x{cols} map")


def _sample_prototypes(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    # Greedy rejection with full restarts: a bad early draw can make the
    # remaining slots unfillable, so give up on a sequence after enough
    # failed tries and start over.
    for _ in range(200):
        accepted: list[np.ndarray] = []
        while len(accepted) < count:
            for _ in range(500):
                raw = rng.standard_normal(dim)
                norm = np.linalg.norm(raw)
                if norm < 1e-12:
                    continue
                unit = raw / norm
                if all(abs(float(unit @ prev)) <= MAX_PROTOTYPE_COS for prev in accepted):
                    accepted.append(unit)
                    break
            else:
                break
        if len(accepted) == count:
            return np.stack(accepted)
    raise ValidationError(
        f"could not place {count} latent prototypes in {dim} dims with "
        f"pairwise |cosine| <= {MAX_PROTOTYPE_COS}; "
        "increase latent_dim or reduce num_classes"
    )


def generate_synthetic(spec: SyntheticSpec) -> tuple[DatasetManifest, SyntheticGroundTruth]:
    """Generate a dataset from *spec*; bitwise-deterministic per seed.

    Clip vectors of class y are ``A @ m_y + noise`` and description
    vectors ``B @ m_y + noise`` (noise std = spec.noise_sigma, drawn even
    when sigma is 0 so the stream layout does not depend on sigma).
    """
    rng = np.random.default_rng(spec.seed)
    visual_map = _full_column_rank_map(rng, spec.visual_dim, spec.latent_dim)
    text_map = _full_column_rank_map(rng, spec.text_dim, spec.latent_dim)
    prototypes = _sample_prototypes(rng, spec.num_classes, spec.latent_dim)
    class_ids = tuple(f"class_{i:03d}" for i in range(spec.num_classes))

    videos: list[VideoSample] = []
    assignments: dict[str, str] = {}
    serial = 0
    for ci, class_id in enumerate(class_ids):
        clean_clip = visual_map @ prototypes[ci]
        for _ in range(spec.videos_per_class):
            n_clips = int(rng.integers(2, 5))
            noise = rng.standard_normal((n_clips, spec.visual_dim)) * spec.noise_sigma
            video_id = f"video_{serial:05d}"
            serial += 1
            videos.append(VideoSample(video_id, class_id, clean_clip[None, :] + noise))
            assignments[video_id] = class_id

    classes: list[ClassSemantics] = []
    for ci, class_id in enumerate(class_ids):
        clean_desc = text_map @ prototypes[ci]
        noise = (
            rng.standard_normal((spec.descriptions_per_class, spec.text_dim))
            * spec.noise_sigma
        )
        classes.append(ClassSemantics(class_id, clean_desc[None, :] + noise))

    manifest = DatasetManifest(
        name="synthetic",
        visual_dim=spec.visual_dim,
        text_dim=spec.text_dim,
        videos=tuple(videos),
        classes=tuple(classes),
        encoder_provenance=(
            f"synthetic latent linear model (latent_dim={spec.latent_dim}, "
            f"noise_sigma={spec.noise_sigma}, seed={spec.seed})"
        ),
    )
    ground_truth = SyntheticGroundTruth(
        assignments=assignments,
        class_ids=class_ids,
        latent_prototypes=prototypes,
        visual_map=visual_map,
        text_map=text_map,
    )
    return manifest, ground_truth
