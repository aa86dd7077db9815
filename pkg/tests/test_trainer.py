import math

import numpy as np
import pytest

from oracles import brute_force_loss, finite_diff_grad
from zsae import (
    AlignmentModel,
    Batch,
    ClassSemantics,
    GradientPair,
    SplitSpec,
    SyntheticSpec,
    TrainConfig,
    ValidationError,
    contrastive_loss,
    generate_synthetic,
    loss_gradients,
    sgd_step,
    train,
)
from zsae import trainer as trainer_mod


def random_problem(rng, n=6, k=10, dv=8, dt=8, shared=8, tau=0.07):
    model = AlignmentModel(
        w_v=rng.uniform(-0.25, 0.25, (shared, dv)),
        w_t=rng.uniform(-0.25, 0.25, (shared, dt)),
        tau=tau,
    )
    batch = Batch(
        pooled=rng.standard_normal((n, dv)),
        labels=rng.integers(0, k, n),
    )
    classes = [
        ClassSemantics(f"c{i:02d}", rng.standard_normal((2, dt)).astype(np.float32))
        for i in range(k)
    ]
    return model, batch, classes


# -- contrastive_loss ------------------------------------------------------


def test_loss_single_class_is_exactly_zero():
    rng = np.random.default_rng(0)
    model, batch, classes = random_problem(rng, k=1)
    batch = Batch(pooled=batch.pooled, labels=np.zeros(len(batch), dtype=np.int64))
    loss, probs = contrastive_loss(model, batch, classes[:1])
    assert loss == 0.0
    assert np.array_equal(probs, np.ones((len(batch), 1)))


def test_loss_identical_prototypes_is_ln_k():
    rng = np.random.default_rng(1)
    descs = rng.standard_normal((3, 6)).astype(np.float32)
    classes = [ClassSemantics(f"c{i}", descs) for i in range(4)]
    model = AlignmentModel(
        w_v=rng.standard_normal((5, 7)), w_t=rng.standard_normal((5, 6)), tau=0.07
    )
    batch = Batch(pooled=rng.standard_normal((6, 7)), labels=rng.integers(0, 4, 6))
    loss, probs = contrastive_loss(model, batch, classes)
    assert loss == pytest.approx(math.log(4), abs=1e-9)
    assert np.abs(probs - 0.25).max() < 1e-9


def test_loss_matches_brute_force_oracle():
    rng = np.random.default_rng(2)
    model, batch, classes = random_problem(rng, n=6, k=10, dv=8, dt=8)
    loss, probs = contrastive_loss(model, batch, classes)
    agg = np.stack([c.descriptions.astype(np.float64).mean(axis=0) for c in classes])
    expected = brute_force_loss(model.w_v, model.w_t, model.tau, batch.pooled, batch.labels, agg)
    assert loss == pytest.approx(expected, abs=1e-10)
    assert np.abs(probs.sum(axis=1) - 1).max() < 1e-9


def test_loss_is_nonnegative_and_flattens_at_huge_tau():
    rng = np.random.default_rng(3)
    for k in (2, 5, 9):
        model, batch, classes = random_problem(rng, k=k, tau=1e6)
        loss, _ = contrastive_loss(model, batch, classes)
        assert loss >= 0
        assert loss == pytest.approx(math.log(k), abs=1e-4)


def test_loss_rejects_out_of_range_labels():
    rng = np.random.default_rng(4)
    model, batch, classes = random_problem(rng, k=3)
    bad = Batch(pooled=batch.pooled, labels=np.full(len(batch), 7))
    with pytest.raises(ValidationError, match="out of range"):
        contrastive_loss(model, bad, classes[:3])


# -- loss_gradients ---------------------------------------------------------


def test_gradients_single_class_are_zero():
    rng = np.random.default_rng(5)
    model, batch, classes = random_problem(rng, k=1)
    batch = Batch(pooled=batch.pooled, labels=np.zeros(len(batch), dtype=np.int64))
    grads = loss_gradients(model, batch, classes[:1])
    assert np.array_equal(grads.dw_v, np.zeros_like(model.w_v))
    assert np.array_equal(grads.dw_t, np.zeros_like(model.w_t))


def test_gradients_invariant_under_batch_permutation():
    rng = np.random.default_rng(6)
    model, batch, classes = random_problem(rng, n=8, k=5)
    perm = rng.permutation(len(batch))
    shuffled = Batch(pooled=batch.pooled[perm], labels=batch.labels[perm])
    g1 = loss_gradients(model, batch, classes[:5])
    g2 = loss_gradients(model, shuffled, classes[:5])
    l1, _ = contrastive_loss(model, batch, classes[:5])
    l2, _ = contrastive_loss(model, shuffled, classes[:5])
    assert abs(l1 - l2) < 1e-12
    assert np.abs(g1.dw_v - g2.dw_v).max() < 1e-12
    assert np.abs(g1.dw_t - g2.dw_t).max() < 1e-12


def test_gradients_match_finite_differences_sampled():
    # compact version of the acceptance sweep: 10 random configurations
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10):
        dv = int(rng.integers(2, 17))
        dt = int(rng.integers(2, 17))
        shared = int(rng.integers(2, min(dv, dt) + 1))
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, 11))
        tau = float(rng.choice([0.05, 0.5, 5.0]))
        model, _, _ = random_problem(rng, n=n, k=k, dv=dv, dt=dt, shared=shared, tau=tau)
        batch = Batch(pooled=rng.standard_normal((n, dv)), labels=rng.integers(0, k, n))
        classes = [
            ClassSemantics(f"c{i:02d}", rng.standard_normal((2, dt)).astype(np.float32))
            for i in range(k)
        ]
        grads = loss_gradients(model, batch, classes)

        def loss_wv(w):
            m = AlignmentModel(w_v=w, w_t=model.w_t, tau=model.tau)
            return contrastive_loss(m, batch, classes)[0]

        def loss_wt(w):
            m = AlignmentModel(w_v=model.w_v, w_t=w, tau=model.tau)
            return contrastive_loss(m, batch, classes)[0]

        fd_v = finite_diff_grad(loss_wv, model.w_v)
        fd_t = finite_diff_grad(loss_wt, model.w_t)
        for analytic, fd in ((grads.dw_v, fd_v), (grads.dw_t, fd_t)):
            scale = max(float(np.abs(fd).max()), 1e-6)
            worst = max(worst, float(np.abs(analytic - fd).max() / scale))
    assert worst < 1e-4


def test_gradients_match_fd_of_bruteforce_loss():
    # finite differences over the independent loop-based loss oracle
    rng = np.random.default_rng(8)
    model, batch, classes = random_problem(rng, n=3, k=4, dv=5, dt=4, shared=3, tau=0.5)
    agg = np.stack([c.descriptions.astype(np.float64).mean(axis=0) for c in classes])
    grads = loss_gradients(model, batch, classes)
    fd_v = finite_diff_grad(
        lambda w: brute_force_loss(w, model.w_t, model.tau, batch.pooled, batch.labels, agg),
        model.w_v,
    )
    fd_t = finite_diff_grad(
        lambda w: brute_force_loss(model.w_v, w, model.tau, batch.pooled, batch.labels, agg),
        model.w_t,
    )
    for analytic, fd in ((grads.dw_v, fd_v), (grads.dw_t, fd_t)):
        rel = np.abs(analytic - fd) / np.maximum(np.abs(fd), 1e-6)
        assert rel.max() < 1e-4


# -- sgd_step -----------------------------------------------------------------


def test_sgd_zero_gradients_leave_model_unchanged():
    model = AlignmentModel(w_v=np.eye(2), w_t=np.eye(2), tau=0.1)
    grads = GradientPair(np.zeros((2, 2)), np.zeros((2, 2)))
    stepped = sgd_step(model, grads, 0.5)
    assert np.array_equal(stepped.w_v, model.w_v)
    assert np.array_equal(stepped.w_t, model.w_t)


def test_sgd_zero_learning_rate_leaves_model_unchanged():
    model = AlignmentModel(w_v=np.eye(2), w_t=np.eye(2), tau=0.1)
    grads = GradientPair(np.ones((2, 2)), np.ones((2, 2)))
    stepped = sgd_step(model, grads, 0.0)
    assert np.array_equal(stepped.w_v, model.w_v)


def test_sgd_scalar_arithmetic():
    model = AlignmentModel(w_v=np.array([[2.0]]), w_t=np.array([[2.0]]), tau=1.0)
    grads = GradientPair(np.array([[0.5]]), np.array([[0.0]]))
    stepped = sgd_step(model, grads, 0.1)
    assert stepped.w_v[0, 0] == pytest.approx(1.95)
    assert stepped.tau == model.tau


def test_sgd_rejects_shape_mismatch():
    model = AlignmentModel(w_v=np.eye(2), w_t=np.eye(2), tau=0.1)
    with pytest.raises(ValidationError, match="shape"):
        sgd_step(model, GradientPair(np.zeros((3, 2)), np.zeros((2, 2))), 0.1)


def test_gradient_pair_rejects_nonfinite():
    with pytest.raises(Exception, match="NaN"):
        GradientPair(np.array([[np.nan]]), np.array([[0.0]]))


# -- train ---------------------------------------------------------------------


def acceptance_dataset(noise=0.0):
    spec = SyntheticSpec(10, 20, 3, 8, 16, 16, noise_sigma=noise, seed=7)
    manifest, gt = generate_synthetic(spec)
    ids = sorted(manifest.class_ids)
    split = SplitSpec("s0", seen=frozenset(ids[:7]), unseen=frozenset(ids[7:]))
    return manifest, split, gt


def test_train_zero_epochs_returns_initialized_model():
    manifest, split, _ = acceptance_dataset()
    config = TrainConfig(max_epochs=0)
    model, log = train(manifest, split, config)
    expected = trainer_mod.initialize_model(config, manifest.visual_dim, manifest.text_dim)
    assert np.array_equal(model.w_v, expected.w_v)
    assert np.array_equal(model.w_t, expected.w_t)
    assert log.records == ()
    assert log.best_epoch == 0 and log.stopping_epoch == 0


def test_train_is_bitwise_deterministic():
    manifest, split, _ = acceptance_dataset()
    config = TrainConfig(max_epochs=4, patience=4)
    m1, log1 = train(manifest, split, config)
    m2, log2 = train(manifest, split, config)
    assert m1.w_v.tobytes() == m2.w_v.tobytes()
    assert m1.w_t.tobytes() == m2.w_t.tobytes()
    assert log1 == log2


def test_train_reaches_perfect_seen_validation():
    # noiseless synthetic task: seen validation accuracy must hit 100%
    # and the best epoch's training loss must undercut epoch 1's
    manifest, split, _ = acceptance_dataset()
    model, log = train(manifest, split, TrainConfig())
    best = [r for r in log.records if r.epoch == log.best_epoch][0]
    assert best.val_acc == 1.0
    assert best.train_loss < log.records[0].train_loss
    assert log.best_epoch <= log.stopping_epoch <= 50


def test_train_early_stopping_semantics():
    manifest, split, _ = acceptance_dataset()
    config = TrainConfig(patience=3, max_epochs=40)
    _, log = train(manifest, split, config)
    accs = [r.val_acc for r in log.records]
    best = max(accs)
    assert log.best_epoch == accs.index(best) + 1  # earliest argmax epoch
    if log.stopping_epoch < config.max_epochs:
        # stopped by patience: no improvement in the last `patience` epochs
        assert all(a <= best for a in accs[log.best_epoch :])
        assert len(accs) - log.best_epoch >= config.patience


def test_train_rejects_seen_class_without_videos():
    manifest, split, _ = acceptance_dataset()
    # manufacture a split where a seen class has no videos by pointing at
    # a class whose videos were filtered out; simplest: restrict videos
    from zsae import DatasetManifest

    keep = [v for v in manifest.videos if v.class_id != "class_000"]
    pruned = DatasetManifest(
        name=manifest.name,
        visual_dim=manifest.visual_dim,
        text_dim=manifest.text_dim,
        videos=tuple(keep),
        classes=manifest.classes,
        encoder_provenance=manifest.encoder_provenance,
    )
    with pytest.raises(ValidationError, match="class_000"):
        train(pruned, split, TrainConfig(max_epochs=1))


def test_train_invalid_split_rejected():
    manifest, split, _ = acceptance_dataset()
    bad = SplitSpec("bad", seen=split.seen, unseen=split.seen)
    with pytest.raises(ValidationError):
        train(manifest, bad, TrainConfig(max_epochs=1))


# -- config files and logs -------------------------------------------------------


def test_config_round_trip(tmp_path):
    config = TrainConfig(learning_rate=5e-4, batch_size=16, max_epochs=7, tau=0.2,
                         patience=2, validation_fraction=0.25, seed=123,
                         init_scheme="identity-padded", shared_dim=6)
    path = tmp_path / "train.cfg"
    trainer_mod.save_config(config, path)
    assert trainer_mod.load_config(path) == config


def test_config_defaults_round_trip(tmp_path):
    path = tmp_path / "train.cfg"
    trainer_mod.save_config(TrainConfig(), path)
    assert trainer_mod.load_config(path) == TrainConfig()


def test_config_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("momentum = 0.9\n")
    with pytest.raises(ValidationError, match="momentum"):
        trainer_mod.load_config(path)


def test_config_file_tolerates_comments_and_blanks(tmp_path):
    path = tmp_path / "ok.cfg"
    path.write_text("# comment\n\nlearning_rate = 0.01\nseed = 4\n")
    config = trainer_mod.load_config(path)
    assert config.learning_rate == 0.01 and config.seed == 4


def test_log_csv_round_trips_floats(tmp_path):
    manifest, split, _ = acceptance_dataset()
    _, log = train(manifest, split, TrainConfig(max_epochs=3, patience=3))
    path = tmp_path / "log.csv"
    trainer_mod.write_log_csv(log, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "epoch,train_loss,val_acc"
    assert len(lines) == len(log.records) + 1
    for line, record in zip(lines[1:], log.records):
        epoch, loss, acc = line.split(",")
        assert int(epoch) == record.epoch
        assert float(loss) == record.train_loss
        assert float(acc) == record.val_acc


# -- model files -------------------------------------------------------------------


def test_model_file_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    model = AlignmentModel(
        w_v=rng.standard_normal((4, 6)).astype(np.float32),
        w_t=rng.standard_normal((4, 5)).astype(np.float32),
        tau=0.07,
    )
    path = tmp_path / "model.json"
    trainer_mod.save_model(model, path, config_hash="abc123")
    loaded, meta = trainer_mod.load_model(path)
    assert np.array_equal(loaded.w_v, model.w_v)
    assert np.array_equal(loaded.w_t, model.w_t)
    assert loaded.tau == model.tau
    assert meta["config_hash"] == "abc123"
    assert meta["visual_dim"] == 6 and meta["text_dim"] == 5


def test_model_file_rejects_tampered_dims(tmp_path):
    import json

    model = AlignmentModel(w_v=np.eye(3), w_t=np.eye(3), tau=0.1)
    path = tmp_path / "model.json"
    trainer_mod.save_model(model, path)
    index = json.loads(path.read_text())
    index["visual_dim"] = 99
    path.write_text(json.dumps(index))
    with pytest.raises(ValidationError, match="visual_dim"):
        trainer_mod.load_model(path)
