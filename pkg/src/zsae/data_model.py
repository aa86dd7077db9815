"""Domain types and the on-disk manifest format.

A dataset is a JSON index (``manifest.json``) plus one tensor file per
video (clip matrix, shape [N, visual_dim]) and per class (description
matrix, shape [M, text_dim]). All embedding payloads are float32; types
are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .tensor_io import read_tensor, write_tensor

MANIFEST_FORMAT = "zsae.manifest/v1"
MANIFEST_FILENAME = "manifest.json"
TENSOR_SUFFIX = ".zt"


def _freeze(array: np.ndarray) -> np.ndarray:
    arr = np.asarray(array, dtype=np.float32)
    if arr.base is not None or arr.flags.writeable:
        arr = arr.copy()
    arr.flags.writeable = False
    return arr


def _check_matrix(owner: str, name: str, arr: np.ndarray) -> None:
    if arr.ndim != 2:
        raise ValidationError(f"{owner}: {name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{owner}: {name} must be nonempty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValidationError(f"{owner}: {name} contains NaN/Inf")


@dataclass(frozen=True, eq=False)
class VideoSample:
    """One labeled video: a stack of clip-level embedding vectors."""

    video_id: str
    class_id: str
    clips: np.ndarray  # [N, d_v] float32, N >= 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "clips", _freeze(self.clips))
        _check_matrix(f"video {self.video_id!r}", "clips", self.clips)

    @property
    def num_clips(self) -> int:
        return self.clips.shape[0]

    @property
    def dim(self) -> int:
        return self.clips.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VideoSample):
            return NotImplemented
        return (
            self.video_id == other.video_id
            and self.class_id == other.class_id
            and np.array_equal(self.clips, other.clips)
        )


@dataclass(frozen=True, eq=False)
class ClassSemantics:
    """Per-class description embeddings plus optional source texts."""

    class_id: str
    descriptions: np.ndarray  # [M, d_t] float32, M >= 1
    description_texts: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "descriptions", _freeze(self.descriptions))
        _check_matrix(f"class {self.class_id!r}", "descriptions", self.descriptions)
        if self.description_texts is not None:
            texts = tuple(self.description_texts)
            if len(texts) != self.descriptions.shape[0]:
                raise ValidationError(
                    f"class {self.class_id!r}: {len(texts)} description texts for "
                    f"{self.descriptions.shape[0]} embeddings"
                )
            object.__setattr__(self, "description_texts", texts)

    @property
    def num_descriptions(self) -> int:
        return self.descriptions.shape[0]

    @property
    def dim(self) -> int:
        return self.descriptions.shape[1]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ClassSemantics):
            return NotImplemented
        return (
            self.class_id == other.class_id
            and np.array_equal(self.descriptions, other.descriptions)
            and self.description_texts == other.description_texts
        )


@dataclass(frozen=True, eq=False)
class DatasetManifest:
    """A full dataset: videos, class semantics, and encoder provenance."""

    name: str
    visual_dim: int
    text_dim: int
    videos: tuple[VideoSample, ...]
    classes: tuple[ClassSemantics, ...]
    encoder_provenance: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "videos", tuple(self.videos))
        object.__setattr__(self, "classes", tuple(self.classes))
        if self.visual_dim < 1 or self.text_dim < 1:
            raise ValidationError(
                f"manifest {self.name!r}: dims must be positive "
                f"(visual_dim={self.visual_dim}, text_dim={self.text_dim})"
            )

        class_ids = [c.class_id for c in self.classes]
        if len(set(class_ids)) != len(class_ids):
            dupes = sorted({c for c in class_ids if class_ids.count(c) > 1})
            raise ValidationError(f"manifest {self.name!r}: duplicate class_ids {dupes}")
        video_ids = [v.video_id for v in self.videos]
        if len(set(video_ids)) != len(video_ids):
            dupes = sorted({v for v in video_ids if video_ids.count(v) > 1})
            raise ValidationError(f"manifest {self.name!r}: duplicate video_ids {dupes}")

        for cls in self.classes:
            if cls.dim != self.text_dim:
                raise ValidationError(
                    f"manifest {self.name!r}: class {cls.class_id!r} has description "
                    f"dim {cls.dim}, manifest declares text_dim {self.text_dim}"
                )
        known = set(class_ids)
        for video in self.videos:
            if video.dim != self.visual_dim:
                raise ValidationError(
                    f"manifest {self.name!r}: video {video.video_id!r} has clip "
                    f"dim {video.dim}, manifest declares visual_dim {self.visual_dim}"
                )
            if video.class_id not in known:
                raise ValidationError(
                    f"manifest {self.name!r}: video {video.video_id!r} references "
                    f"unknown class {video.class_id!r}"
                )

    @property
    def class_ids(self) -> frozenset[str]:
        return frozenset(c.class_id for c in self.classes)

    def classes_by_id(self) -> dict[str, ClassSemantics]:
        return {c.class_id: c for c in self.classes}

    def videos_of(self, class_ids: set[str] | frozenset[str]) -> list[VideoSample]:
        return [v for v in self.videos if v.class_id in class_ids]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DatasetManifest):
            return NotImplemented
        return (
            self.name == other.name
            and self.visual_dim == other.visual_dim
            and self.text_dim == other.text_dim
            and self.encoder_provenance == other.encoder_provenance
            and self.videos == other.videos
            and self.classes == other.classes
        )


@dataclass(frozen=True)
class SplitSpec:
    """A seen/unseen class partition. Constructed leniently; checked by
    :func:`validate_split`."""

    split_id: str
    seen: frozenset[str]
    unseen: frozenset[str]

    def __post_init__(self) -> None:
        object.__setattr__(self, "seen", frozenset(self.seen))
        object.__setattr__(self, "unseen", frozenset(self.unseen))


def validate_split(split: SplitSpec, manifest: DatasetManifest) -> None:
    """Check a split against a manifest.

    Raises ValidationError unless both sides are nonempty, disjoint, and
    every referenced class exists in the manifest.
    """
    if not split.seen:
        raise ValidationError(f"split {split.split_id!r}: seen side is empty")
    if not split.unseen:
        raise ValidationError(f"split {split.split_id!r}: unseen side is empty")
    overlap = split.seen & split.unseen
    if overlap:
        raise ValidationError(
            f"split {split.split_id!r}: classes in both seen and unseen: "
            f"{sorted(overlap)}"
        )
    unknown = (split.seen | split.unseen) - manifest.class_ids
    if unknown:
        raise ValidationError(
            f"split {split.split_id!r}: unknown classes {sorted(unknown)}"
        )


def save_split(split: SplitSpec, path: str | Path) -> None:
    payload = {
        "split_id": split.split_id,
        "seen": sorted(split.seen),
        "unseen": sorted(split.unseen),
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_split(path: str | Path) -> SplitSpec:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: not valid JSON: {err}") from err
    try:
        return SplitSpec(
            split_id=str(payload["split_id"]),
            seen=frozenset(str(c) for c in payload["seen"]),
            unseen=frozenset(str(c) for c in payload["unseen"]),
        )
    except KeyError as err:
        raise ValidationError(f"{path}: missing split field {err}") from err


def _resolve_manifest_path(path: str | Path) -> Path:
    p = Path(path)
    if p.is_dir():
        p = p / MANIFEST_FILENAME
    if not p.exists():
        raise FileNotFoundError(f"manifest not found: {p}")
    return p


def save_manifest(manifest: DatasetManifest, path: str | Path) -> Path:
    """Write *manifest* under directory *path*; returns the JSON index path.

    Layout: ``<path>/manifest.json`` plus ``<path>/tensors/*.zt``. Tensor
    files are named by position so the layout is deterministic; saving the
    same manifest twice yields byte-identical trees.
    """
    root = Path(path)
    tensor_dir = root / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)

    video_records = []
    for i, video in enumerate(manifest.videos):
        rel = f"tensors/video_{i:05d}{TENSOR_SUFFIX}"
        write_tensor(root / rel, video.clips)
        video_records.append(
            {"video_id": video.video_id, "class_id": video.class_id, "clips": rel}
        )

    class_records = []
    for i, cls in enumerate(manifest.classes):
        rel = f"tensors/class_{i:05d}{TENSOR_SUFFIX}"
        write_tensor(root / rel, cls.descriptions)
        record: dict = {"class_id": cls.class_id, "descriptions": rel}
        if cls.description_texts is not None:
            record["description_texts"] = list(cls.description_texts)
        class_records.append(record)

    index = {
        "format": MANIFEST_FORMAT,
        "name": manifest.name,
        "visual_dim": manifest.visual_dim,
        "text_dim": manifest.text_dim,
        "encoder_provenance": manifest.encoder_provenance,
        "videos": video_records,
        "classes": class_records,
    }
    index_path = root / MANIFEST_FILENAME
    index_path.write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    return index_path


def load_manifest(path: str | Path) -> DatasetManifest:
    """Load and fully validate a manifest.

    *path* may be the dataset directory or the JSON index itself. Raises
    FileNotFoundError for missing files and ValidationError for malformed
    or inconsistent content.
    """
    index_path = _resolve_manifest_path(path)
    try:
        index = json.loads(index_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"{index_path}: not valid JSON: {err}") from err

    if not isinstance(index, dict) or index.get("format") != MANIFEST_FORMAT:
        raise ValidationError(
            f"{index_path}: missing or unsupported manifest format marker "
            f"(expected {MANIFEST_FORMAT!r})"
        )
    for key in ("name", "visual_dim", "text_dim", "videos", "classes"):
        if key not in index:
            raise ValidationError(f"{index_path}: missing field {key!r}")

    base = index_path.parent
    videos = []
    for record in index["videos"]:
        clips = read_tensor(base / record["clips"])
        videos.append(
            VideoSample(
                video_id=str(record["video_id"]),
                class_id=str(record["class_id"]),
                clips=clips,
            )
        )
    classes = []
    for record in index["classes"]:
        descriptions = read_tensor(base / record["descriptions"])
        texts = record.get("description_texts")
        classes.append(
            ClassSemantics(
                class_id=str(record["class_id"]),
                descriptions=descriptions,
                description_texts=tuple(texts) if texts is not None else None,
            )
        )

    return DatasetManifest(
        name=str(index["name"]),
        visual_dim=int(index["visual_dim"]),
        text_dim=int(index["text_dim"]),
        videos=tuple(videos),
        classes=tuple(classes),
        encoder_provenance=str(index.get("encoder_provenance", "")),
    )
