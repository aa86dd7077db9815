"""Video decoding and clip sampling."""

from __future__ import annotations

from pathlib import Path

import cv2
import numpy as np


class DecodeError(RuntimeError):
    """Video file missing or not decodable."""


def read_frames(path: str | Path) -> np.ndarray:
    """Decode every frame of a video as an [T, H, W, 3] uint8 array."""
    path = Path(path)
    if not path.exists():
        raise DecodeError(f"video not found: {path}")
    capture = cv2.VideoCapture(str(path))
    if not capture.isOpened():
        raise DecodeError(f"could not open video: {path}")
    frames = []
    while True:
        ok, frame = capture.read()
        if not ok:
            break
        frames.append(frame)
    capture.release()
    if not frames:
        raise DecodeError(f"no decodable frames in: {path}")
    return np.stack(frames)


def sample_clips(
    frames: np.ndarray,
    clip_len: int,
    clip_stride: int,
    num_clips: int | None,
) -> np.ndarray:
    """Cut [T, H, W, 3] frames into [N, clip_len, H, W, 3] clips.

    Videos shorter than clip_len are padded by repeating the last frame.
    With num_clips set, N start positions are spaced uniformly over the
    video (clips may overlap or repeat for short inputs); otherwise
    consecutive starts advance by clip_stride.
    """
    total = frames.shape[0]
    if total < clip_len:
        pad = np.repeat(frames[-1:], clip_len - total, axis=0)
        frames = np.concatenate([frames, pad], axis=0)
        total = clip_len

    last_start = total - clip_len
    if num_clips is not None:
        starts = np.round(np.linspace(0, last_start, num_clips)).astype(int)
    else:
        starts = np.arange(0, last_start + 1, clip_stride)
    return np.stack([frames[s : s + clip_len] for s in starts])
