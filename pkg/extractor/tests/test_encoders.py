import numpy as np
import pytest

from zsae_extractor.encoders import (
    FrameStatsEncoder,
    HashedBowEncoder,
    make_text_encoder,
    make_visual_encoder,
)
from zsae_extractor.job import JobError


def test_registry_resolves_builtins():
    assert isinstance(make_visual_encoder("frame-stats"), FrameStatsEncoder)
    assert isinstance(make_text_encoder("hashed-bow"), HashedBowEncoder)


def test_registry_rejects_unknown_names():
    with pytest.raises(JobError, match="unknown visual"):
        make_visual_encoder("resnet-9000")
    with pytest.raises(JobError, match="unknown text"):
        make_text_encoder("word2vec")


def test_frame_stats_shape_and_determinism():
    rng = np.random.default_rng(3)
    clip = rng.integers(0, 255, (8, 24, 24, 3), dtype=np.uint8)
    encoder = FrameStatsEncoder()
    a = encoder.encode_clip(clip)
    b = encoder.encode_clip(clip.copy())
    assert a.shape == (encoder.dim,)
    assert a.dtype == np.float32
    assert np.isfinite(a).all()
    assert np.array_equal(a, b)


def test_frame_stats_single_frame_clip_has_zero_motion():
    clip = np.full((1, 16, 16, 3), 128, dtype=np.uint8)
    features = FrameStatsEncoder().encode_clip(clip)
    motion_grid = features[42:58]  # after 36 grid + 3 means + 3 stds
    assert np.array_equal(motion_grid, np.zeros(16, dtype=np.float32))


def test_frame_stats_sees_motion():
    still = np.full((6, 16, 16, 3), 100, dtype=np.uint8)
    moving = still.copy()
    for t in range(6):
        moving[t, :, t : t + 4] = 250
    enc = FrameStatsEncoder()
    assert enc.encode_clip(moving)[58] > enc.encode_clip(still)[58]  # motion mean


def test_frame_stats_rejects_bad_shape():
    with pytest.raises(JobError, match="L, H, W, 3"):
        FrameStatsEncoder().encode_clip(np.zeros((4, 16, 16), dtype=np.uint8))


def test_hashed_bow_deterministic_and_unit_norm():
    encoder = HashedBowEncoder()
    a = encoder.encode_text("A person waves their hand")
    b = encoder.encode_text("a person waves their hand!")  # case/punct-insensitive
    assert np.array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1.0) < 1e-6


def test_hashed_bow_separates_different_texts():
    encoder = HashedBowEncoder()
    a = encoder.encode_text("swimming in a pool")
    b = encoder.encode_text("climbing a steep rock face")
    assert float(a @ b) < 0.9


def test_hashed_bow_rejects_empty_text():
    with pytest.raises(JobError, match="no tokens"):
        HashedBowEncoder().encode_text("  ... ")
