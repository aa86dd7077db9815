"""Extraction job description: what to encode and where to put it."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path


class JobError(ValueError):
    """Invalid job file or job contents."""


@dataclass(frozen=True)
class VideoEntry:
    path: Path
    class_id: str


@dataclass(frozen=True)
class ExtractionJob:
    videos: tuple[VideoEntry, ...]
    descriptions: dict[str, list[str]]  # class_id -> texts, each class >= 1
    visual_encoder: str
    text_encoder: str
    clip_len: int
    clip_stride: int
    num_clips: int | None  # None -> stride-based sampling
    output_dir: Path
    dataset_name: str = "extracted"

    def __post_init__(self) -> None:
        if not self.videos:
            raise JobError("job lists no videos")
        if self.clip_len < 1:
            raise JobError(f"clip_len must be >= 1, got {self.clip_len}")
        if self.clip_stride < 1:
            raise JobError(f"clip_stride must be >= 1, got {self.clip_stride}")
        if self.num_clips is not None and self.num_clips < 1:
            raise JobError(f"num_clips must be >= 1 or null, got {self.num_clips}")
        for class_id, texts in self.descriptions.items():
            if not texts:
                raise JobError(f"class {class_id!r} has an empty description list")
        missing = sorted(
            {v.class_id for v in self.videos} - set(self.descriptions)
        )
        if missing:
            raise JobError(f"videos reference classes without descriptions: {missing}")


def load_job(path: str | Path) -> ExtractionJob:
    """Parse a job JSON file; relative paths resolve against its directory."""
    job_path = Path(path)
    try:
        payload = json.loads(job_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise JobError(f"{job_path}: not valid JSON: {err}") from err
    if not isinstance(payload, dict):
        raise JobError(f"{job_path}: expected a JSON object")

    base = job_path.parent
    try:
        videos = tuple(
            VideoEntry(path=base / record["path"], class_id=str(record["class_id"]))
            for record in payload["videos"]
        )
        descriptions = {
            str(class_id): [str(t) for t in texts]
            for class_id, texts in payload["descriptions"].items()
        }
        output_dir = base / payload["output_dir"]
    except (KeyError, TypeError) as err:
        raise JobError(f"{job_path}: missing or malformed field: {err}") from err

    num_clips = payload.get("num_clips", 8)
    return ExtractionJob(
        videos=videos,
        descriptions=descriptions,
        visual_encoder=str(payload.get("visual_encoder", "frame-stats")),
        text_encoder=str(payload.get("text_encoder", "hashed-bow")),
        clip_len=int(payload.get("clip_len", 16)),
        clip_stride=int(payload.get("clip_stride", 16)),
        num_clips=None if num_clips is None else int(num_clips),
        output_dir=output_dir,
        dataset_name=str(payload.get("dataset_name", "extracted")),
    )
