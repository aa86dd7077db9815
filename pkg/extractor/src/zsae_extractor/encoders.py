"""Pluggable visual and text encoders.

The builtin pair (``frame-stats``, ``hashed-bow``) is fully deterministic
and dependency-light, which makes format-conformance runs reproducible on
any machine. Pretrained-model adapters import their backends lazily and
fail with a clear message when those are absent.
"""

from __future__ import annotations

import hashlib
import re

import cv2
import numpy as np

from .job import JobError


class VisualEncoder:
    """Maps one clip [L, H, W, 3] uint8 to a feature vector [dim]."""

    name: str
    dim: int

    def encode_clip(self, clip: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return f"{self.name} (dim={self.dim})"


class TextEncoder:
    """Maps one description string to a feature vector [dim]."""

    name: str
    dim: int

    def encode_text(self, text: str) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        return f"{self.name} (dim={self.dim})"


class FrameStatsEncoder(VisualEncoder):
    """Handcrafted 64-dim clip descriptor: a 6x6 average-brightness grid,
    per-channel intensity statistics, a 4x4 temporal-motion grid, and
    global gradient/motion summaries. No learned weights."""

    name = "frame-stats"
    dim = 64

    def encode_clip(self, clip: np.ndarray) -> np.ndarray:
        if clip.ndim != 4 or clip.shape[3] != 3:
            raise JobError(f"expected clip shaped [L, H, W, 3], got {clip.shape}")
        frames = clip.astype(np.float64) / 255.0
        gray = frames.mean(axis=3)  # [L, H, W]

        mean_img = gray.mean(axis=0)
        grid = cv2.resize(mean_img, (6, 6), interpolation=cv2.INTER_AREA).ravel()

        channel_means = frames.mean(axis=(0, 1, 2))
        channel_stds = frames.std(axis=(0, 1, 2))

        if gray.shape[0] > 1:
            motion = np.abs(np.diff(gray, axis=0)).mean(axis=0)
        else:
            motion = np.zeros_like(mean_img)
        motion_grid = cv2.resize(motion, (4, 4), interpolation=cv2.INTER_AREA).ravel()

        dx = np.abs(np.diff(mean_img, axis=1)).mean()
        dy = np.abs(np.diff(mean_img, axis=0)).mean()

        features = np.concatenate(
            [
                grid,  # 36
                channel_means,  # 3
                channel_stds,  # 3
                motion_grid,  # 16
                [motion.mean(), motion.std()],  # 2
                [dx, dy],  # 2
                [mean_img.min(), mean_img.max()],  # 2
            ]
        )
        assert features.shape == (self.dim,)
        return features.astype(np.float32)


_TOKEN_RE = re.compile(r"[a-z0-9']+")


class HashedBowEncoder(TextEncoder):
    """Signed hashed bag-of-words: each token lands in a sha1-derived
    bucket with a sha1-derived sign; the count vector is l2-normalized.
    Stable across processes (no PYTHONHASHSEED dependence)."""

    name = "hashed-bow"
    dim = 256

    def encode_text(self, text: str) -> np.ndarray:
        tokens = _TOKEN_RE.findall(text.lower())
        if not tokens:
            raise JobError(f"description has no tokens: {text!r}")
        vec = np.zeros(self.dim, dtype=np.float64)
        for token in tokens:
            digest = hashlib.sha1(token.encode("utf-8")).digest()
            bucket = int.from_bytes(digest[:8], "little") % self.dim
            sign = 1.0 if digest[8] % 2 == 0 else -1.0
            vec[bucket] += sign
        norm = np.linalg.norm(vec)
        if norm == 0.0:  # all buckets cancelled; keep direction-free marker
            vec[0] = 1.0
            norm = 1.0
        return (vec / norm).astype(np.float32)


class TorchvisionR3DEncoder(VisualEncoder):
    """Adapter for torchvision's r3d_18 video backbone (512-dim,
    classifier head removed). Requires torchvision with local weights."""

    name = "torchvision-r3d18"
    dim = 512

    def __init__(self) -> None:
        try:
            import torch
            import torchvision
        except ImportError as err:
            raise JobError(f"{self.name} needs torch and torchvision installed: {err}") from err
        self._torch = torch
        model = torchvision.models.video.r3d_18(weights="KINETICS400_V1")
        model.fc = torch.nn.Identity()
        model.eval()
        self._model = model

    def encode_clip(self, clip: np.ndarray) -> np.ndarray:
        torch = self._torch
        frames = clip[..., ::-1].astype(np.float32) / 255.0  # BGR -> RGB
        mean = np.array([0.43216, 0.394666, 0.37645], dtype=np.float32)
        std = np.array([0.22803, 0.22145, 0.216989], dtype=np.float32)
        frames = (frames - mean) / std
        tensor = torch.from_numpy(frames.transpose(3, 0, 1, 2).copy())[None]
        with torch.no_grad():
            out = self._model(tensor)
        return out[0].numpy().astype(np.float32)


class SentenceTransformerEncoder(TextEncoder):
    """Adapter for a sentence-transformers model (name or local path)."""

    def __init__(self, model_name: str) -> None:
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as err:
            raise JobError(f"sentence-transformers is not installed: {err}") from err
        self.name = f"sentence-transformer:{model_name}"
        self._model = SentenceTransformer(model_name)
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode_text(self, text: str) -> np.ndarray:
        return np.asarray(self._model.encode(text), dtype=np.float32)


def make_visual_encoder(name: str) -> VisualEncoder:
    if name == FrameStatsEncoder.name:
        return FrameStatsEncoder()
    if name == TorchvisionR3DEncoder.name:
        return TorchvisionR3DEncoder()
    raise JobError(
        f"unknown visual encoder {name!r}; available: "
        f"{FrameStatsEncoder.name}, {TorchvisionR3DEncoder.name}"
    )


def make_text_encoder(name: str) -> TextEncoder:
    if name == HashedBowEncoder.name:
        return HashedBowEncoder()
    if name.startswith("sentence-transformer:"):
        return SentenceTransformerEncoder(name.split(":", 1)[1])
    raise JobError(
        f"unknown text encoder {name!r}; available: "
        f"{HashedBowEncoder.name}, sentence-transformer:<model>"
    )
