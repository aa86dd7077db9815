"""Writer for the zsae dataset format (JSON index + binary tensor files).

The layout is produced independently here, from the documented format:
tensor files carry magic ``ZSAE``, format version u32 LE (1),
dtype code u32 LE (1 = float32), rank u32 LE, rank x u64 LE extents, then
the row-major float32 payload. The index is ``manifest.json`` with format
marker ``zsae.manifest/v1``. Conformance is checked against the core
loader in the test suite, never by importing it.
"""

from __future__ import annotations

import json
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"ZSAE"
FORMAT_VERSION = 1
DTYPE_F32 = 1
MANIFEST_FORMAT = "zsae.manifest/v1"


def write_tensor_atomic(path: Path, array: np.ndarray) -> None:
    arr = np.ascontiguousarray(array, dtype=np.float32)
    if arr.size == 0 or not np.isfinite(arr).all():
        raise ValueError(f"refusing to write empty or non-finite tensor to {path}")
    blob = (
        struct.pack("<4sIII", MAGIC, FORMAT_VERSION, DTYPE_F32, arr.ndim)
        + struct.pack(f"<{arr.ndim}Q", *arr.shape)
        + arr.tobytes(order="C")
    )
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(blob)
    os.replace(tmp, path)


@dataclass
class VideoRecord:
    video_id: str
    class_id: str
    clips: np.ndarray  # [N, d_v]


@dataclass
class ClassRecord:
    class_id: str
    descriptions: np.ndarray  # [M, d_t]
    description_texts: list[str]


def write_manifest(
    out_dir: Path,
    name: str,
    videos: list[VideoRecord],
    classes: list[ClassRecord],
    encoder_provenance: str,
) -> Path:
    visual_dim = int(videos[0].clips.shape[1])
    text_dim = int(classes[0].descriptions.shape[1])

    tensor_dir = out_dir / "tensors"
    tensor_dir.mkdir(parents=True, exist_ok=True)

    video_index = []
    for i, record in enumerate(videos):
        rel = f"tensors/video_{i:05d}.zt"
        write_tensor_atomic(out_dir / rel, record.clips)
        video_index.append(
            {"video_id": record.video_id, "class_id": record.class_id, "clips": rel}
        )

    class_index = []
    for i, record in enumerate(classes):
        rel = f"tensors/class_{i:05d}.zt"
        write_tensor_atomic(out_dir / rel, record.descriptions)
        class_index.append(
            {
                "class_id": record.class_id,
                "descriptions": rel,
                "description_texts": list(record.description_texts),
            }
        )

    index = {
        "format": MANIFEST_FORMAT,
        "name": name,
        "visual_dim": visual_dim,
        "text_dim": text_dim,
        "encoder_provenance": encoder_provenance,
        "videos": video_index,
        "classes": class_index,
    }
    index_path = out_dir / "manifest.json"
    tmp = index_path.with_name(index_path.name + ".tmp")
    tmp.write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, index_path)
    return index_path
