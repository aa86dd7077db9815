import json

import cv2
import numpy as np
import pytest


def write_toy_video(path, n_frames=24, size=32, motion="horizontal", seed=0):
    """Deterministic little MJPG clip: a colored blob moving over a
    textured background."""
    rng = np.random.default_rng(seed)
    background = rng.integers(0, 60, (size, size, 3), dtype=np.uint8)
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"MJPG"), 10.0, (size, size)
    )
    if not writer.isOpened():
        pytest.skip("cv2 cannot open an MJPG writer in this environment")
    for t in range(n_frames):
        frame = background.copy()
        if motion == "horizontal":
            center = (4 + (t * 24) // n_frames, size // 2)
        else:
            center = (size // 2, 4 + (t * 24) // n_frames)
        cv2.circle(frame, center, 5, (20, 220, 40), -1)
        writer.write(frame)
    writer.release()
    return path


@pytest.fixture
def toy_job_dir(tmp_path):
    """Two videos, two classes, plus a ready-to-run job file."""
    write_toy_video(tmp_path / "wave_01.avi", motion="horizontal", seed=1)
    write_toy_video(tmp_path / "jump_01.avi", motion="vertical", seed=2)
    job = {
        "videos": [
            {"path": "wave_01.avi", "class_id": "wave"},
            {"path": "jump_01.avi", "class_id": "jump"},
        ],
        "descriptions": {
            "wave": ["a person waves one hand from side to side"],
            "jump": ["a person jumps straight up and lands", "both feet leave the ground"],
        },
        "visual_encoder": "frame-stats",
        "text_encoder": "hashed-bow",
        "clip_len": 4,
        "clip_stride": 4,
        "num_clips": 4,
        "output_dir": "out_ds",
        "dataset_name": "toy",
    }
    job_path = tmp_path / "job.json"
    job_path.write_text(json.dumps(job, indent=2))
    return tmp_path, job_path
