import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import write_toy_video
from zsae_extractor import JobError, extract, load_job
from zsae_extractor.cli import main as cli_main


def tensor_hashes(out_dir):
    return {
        p.name: hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted((out_dir / "tensors").iterdir())
    }


def core_validate(manifest_dir):
    """Run the core CLI's `ingest --validate` on an extracted manifest."""
    return subprocess.run(
        [sys.executable, "-m", "zsae", "ingest", "--manifest", str(manifest_dir), "--validate"],
        capture_output=True,
        text=True,
    )


def test_job_parsing_resolves_relative_paths(toy_job_dir):
    root, job_path = toy_job_dir
    job = load_job(job_path)
    assert job.videos[0].path == root / "wave_01.avi"
    assert job.output_dir == root / "out_ds"
    assert job.num_clips == 4


def test_job_rejects_empty_description_list(tmp_path):
    job_path = tmp_path / "job.json"
    job_path.write_text(json.dumps({
        "videos": [{"path": "v.avi", "class_id": "wave"}],
        "descriptions": {"wave": []},
        "output_dir": "out",
    }))
    with pytest.raises(JobError, match="empty description list"):
        load_job(job_path)


def test_job_rejects_videos_without_descriptions(tmp_path):
    job_path = tmp_path / "job.json"
    job_path.write_text(json.dumps({
        "videos": [{"path": "v.avi", "class_id": "mystery"}],
        "descriptions": {"wave": ["hello"]},
        "output_dir": "out",
    }))
    with pytest.raises(JobError, match="mystery"):
        load_job(job_path)


def test_extracted_manifest_passes_core_validation(toy_job_dir):
    root, job_path = toy_job_dir
    manifest_path = extract(load_job(job_path))
    assert manifest_path == root / "out_ds" / "manifest.json"
    proc = core_validate(root / "out_ds")
    assert proc.returncode == 0, proc.stderr
    assert "valid: yes" in proc.stdout
    assert "classes:            2" in proc.stdout
    assert "videos:             2" in proc.stdout


def test_repeated_extraction_is_hash_identical(toy_job_dir, tmp_path):
    root, job_path = toy_job_dir
    extract(load_job(job_path))
    first = tensor_hashes(root / "out_ds")
    manifest_first = (root / "out_ds" / "manifest.json").read_bytes()

    # second run into the same tree (files are replaced atomically)
    extract(load_job(job_path))
    assert tensor_hashes(root / "out_ds") == first
    assert (root / "out_ds" / "manifest.json").read_bytes() == manifest_first


def test_manifest_contents_round_trip_through_core_loader(toy_job_dir):
    root, job_path = toy_job_dir
    extract(load_job(job_path))
    from zsae import load_manifest  # test-only: conformance oracle

    manifest = load_manifest(root / "out_ds")
    assert manifest.name == "toy"
    assert {v.video_id for v in manifest.videos} == {"wave_01", "jump_01"}
    assert manifest.visual_dim == 64 and manifest.text_dim == 256
    wave = manifest.classes_by_id()["wave"]
    assert wave.description_texts == ("a person waves one hand from side to side",)
    for video in manifest.videos:
        assert video.clips.shape == (4, 64)  # num_clips x frame-stats dim
        assert np.isfinite(video.clips).all()
    assert "frame-stats" in manifest.encoder_provenance
    assert "hashed-bow" in manifest.encoder_provenance


def test_undecodable_video_is_skipped_with_warning(toy_job_dir, caplog):
    root, job_path = toy_job_dir
    (root / "broken.avi").write_bytes(b"not a video")
    job = json.loads(job_path.read_text())
    job["videos"].append({"path": "broken.avi", "class_id": "wave"})
    job_path.write_text(json.dumps(job))
    with caplog.at_level("WARNING", logger="zsae_extractor"):
        extract(load_job(job_path))
    assert any("skipping video" in r.message for r in caplog.records)
    proc = core_validate(root / "out_ds")
    assert proc.returncode == 0
    assert "videos:             2" in proc.stdout


def test_all_videos_undecodable_is_hard_error(tmp_path):
    (tmp_path / "broken.avi").write_bytes(b"nope")
    job_path = tmp_path / "job.json"
    job_path.write_text(json.dumps({
        "videos": [{"path": "broken.avi", "class_id": "wave"}],
        "descriptions": {"wave": ["a wave"]},
        "output_dir": "out",
    }))
    with pytest.raises(JobError, match="no decodable videos"):
        extract(load_job(job_path))


def test_duplicate_video_stems_get_unique_ids(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    write_toy_video(tmp_path / "a" / "clip.avi", seed=1)
    write_toy_video(tmp_path / "b" / "clip.avi", seed=2)
    job_path = tmp_path / "job.json"
    job_path.write_text(json.dumps({
        "videos": [
            {"path": "a/clip.avi", "class_id": "wave"},
            {"path": "b/clip.avi", "class_id": "wave"},
        ],
        "descriptions": {"wave": ["a wave"]},
        "clip_len": 4, "num_clips": 2,
        "output_dir": "out",
    }))
    extract(load_job(job_path))
    index = json.loads((tmp_path / "out" / "manifest.json").read_text())
    ids = [v["video_id"] for v in index["videos"]]
    assert len(set(ids)) == 2


def test_cli_runs_job_end_to_end(toy_job_dir, capsys):
    root, job_path = toy_job_dir
    assert cli_main(["--job", str(job_path)]) == 0
    assert "manifest.json" in capsys.readouterr().out
    assert core_validate(root / "out_ds").returncode == 0


def test_cli_reports_job_errors(tmp_path, capsys):
    job_path = tmp_path / "job.json"
    job_path.write_text(json.dumps({
        "videos": [{"path": "v.avi", "class_id": "x"}],
        "descriptions": {"x": []},
        "output_dir": "out",
    }))
    assert cli_main(["--job", str(job_path)]) == 1
    assert "empty description list" in capsys.readouterr().err
