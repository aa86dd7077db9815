"""The extraction pipeline: videos + description texts -> zsae manifest."""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .encoders import make_text_encoder, make_visual_encoder
from .job import ExtractionJob, JobError
from .manifest_writer import ClassRecord, VideoRecord, write_manifest
from .video import DecodeError, read_frames, sample_clips

log = logging.getLogger("zsae_extractor")


def _unique_video_id(stem: str, taken: set[str]) -> str:
    candidate = stem
    suffix = 1
    while candidate in taken:
        candidate = f"{stem}_{suffix}"
        suffix += 1
    taken.add(candidate)
    return candidate


def extract(job: ExtractionJob) -> Path:
    """Run *job*; returns the path of the written manifest.json.

    Undecodable or missing videos are skipped with a warning; an empty
    description list or zero surviving videos is a hard error.
    """
    visual = make_visual_encoder(job.visual_encoder)
    text = make_text_encoder(job.text_encoder)

    classes = []
    for class_id in sorted(job.descriptions):
        texts = job.descriptions[class_id]
        embeddings = np.stack([text.encode_text(t) for t in texts])
        classes.append(
            ClassRecord(class_id=class_id, descriptions=embeddings, description_texts=texts)
        )

    videos = []
    taken: set[str] = set()
    skipped = 0
    for entry in job.videos:
        try:
            frames = read_frames(entry.path)
        except DecodeError as err:
            skipped += 1
            log.warning("skipping video: %s", err)
            continue
        clips = sample_clips(frames, job.clip_len, job.clip_stride, job.num_clips)
        features = np.stack([visual.encode_clip(clip) for clip in clips])
        videos.append(
            VideoRecord(
                video_id=_unique_video_id(Path(entry.path).stem, taken),
                class_id=entry.class_id,
                clips=features,
            )
        )
    if not videos:
        raise JobError(f"no decodable videos ({skipped} skipped); nothing to write")
    if skipped:
        log.warning("%d of %d videos skipped", skipped, len(job.videos))

    sampling = (
        f"num_clips={job.num_clips}" if job.num_clips is not None
        else f"clip_stride={job.clip_stride}"
    )
    provenance = (
        f"visual={visual.describe()}; text={text.describe()}; "
        f"clip_len={job.clip_len}; {sampling}"
    )
    return write_manifest(
        out_dir=job.output_dir,
        name=job.dataset_name,
        videos=videos,
        classes=classes,
        encoder_provenance=provenance,
    )
