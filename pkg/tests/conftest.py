import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # make `oracles` importable

from zsae import ClassSemantics, DatasetManifest, SplitSpec, VideoSample


def make_manifest(name="toy", visual_dim=4, text_dim=3, n_classes=3, videos_per_class=2, seed=0):
    """Small random-but-seeded manifest for structural tests."""
    rng = np.random.default_rng(seed)
    classes = []
    videos = []
    for ci in range(n_classes):
        class_id = f"c{ci}"
        classes.append(
            ClassSemantics(class_id, rng.standard_normal((2, text_dim)).astype(np.float32))
        )
        for vi in range(videos_per_class):
            videos.append(
                VideoSample(
                    f"{class_id}_v{vi}",
                    class_id,
                    rng.standard_normal((3, visual_dim)).astype(np.float32),
                )
            )
    return DatasetManifest(
        name=name,
        visual_dim=visual_dim,
        text_dim=text_dim,
        videos=tuple(videos),
        classes=tuple(classes),
        encoder_provenance="test fixture",
    )


@pytest.fixture
def toy_manifest():
    return make_manifest()


@pytest.fixture
def toy_split(toy_manifest):
    return SplitSpec("toy_split", seen=frozenset({"c0", "c1"}), unseen=frozenset({"c2"}))
