"""Contrastive alignment training.

The objective is softmax cross-entropy over seen-class similarities at
temperature tau, averaged over the batch. Gradients are analytic
(including the normalization Jacobian) and the whole run is a
deterministic function of (manifest, split, config).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import alignment
from .alignment import AlignmentModel
from .data_model import DatasetManifest, SplitSpec, validate_split
from .errors import DegenerateEmbeddingError, NumericalError, ValidationError
from .tensor_io import read_tensor, write_tensor

INIT_SCHEMES = ("seeded-uniform", "identity-padded")

MODEL_FORMAT = "zsae.model/v1"


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; defaults follow the SGD recipe this package targets
    (lr 1e-3, batch 32, up to 50 epochs, early stopping on seen-class
    validation accuracy)."""

    learning_rate: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    tau: float = 0.07
    patience: int = 5
    validation_fraction: float = 0.1
    seed: int = 2
    init_scheme: str = "seeded-uniform"
    shared_dim: int | None = None  # None -> min(visual_dim, text_dim)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate!r}")
        for name in ("batch_size", "max_epochs", "patience"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                if name == "max_epochs" and value == 0:
                    continue  # 0 epochs = return the initialized model
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ValidationError(f"tau must be > 0, got {self.tau!r}")
        if not 0 < self.validation_fraction < 1:
            raise ValidationError(
                f"validation_fraction must lie in (0, 1), got {self.validation_fraction!r}"
            )
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValidationError(f"seed must be a u64, got {self.seed!r}")
        if self.init_scheme not in INIT_SCHEMES:
            raise ValidationError(
                f"init_scheme must be one of {INIT_SCHEMES}, got {self.init_scheme!r}"
            )
        if self.shared_dim is not None and (
            not isinstance(self.shared_dim, int) or self.shared_dim < 1
        ):
            raise ValidationError(f"shared_dim must be a positive integer or None, got {self.shared_dim!r}")


@dataclass(frozen=True, eq=False)
class Batch:
    """Pooled video vectors with class indices into the lexicographic
    seen-class ordering."""

    pooled: np.ndarray  # [N_b, d_v] float64
    labels: np.ndarray  # [N_b] int

    def __post_init__(self) -> None:
        pooled = np.asarray(self.pooled, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if pooled.ndim != 2 or pooled.shape[0] == 0:
            raise ValidationError(f"batch pooled must be nonempty [N, d], got {pooled.shape}")
        if labels.shape != (pooled.shape[0],):
            raise ValidationError(
                f"batch labels shape {labels.shape} does not match {pooled.shape[0]} videos"
            )
        if not np.isfinite(pooled).all():
            raise ValidationError("batch pooled contains NaN/Inf")
        object.__setattr__(self, "pooled", pooled)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.pooled.shape[0]


@dataclass(frozen=True, eq=False)
class GradientPair:
    dw_v: np.ndarray
    dw_t: np.ndarray

    def __post_init__(self) -> None:
        for name in ("dw_v", "dw_t"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.isfinite(arr).all():
                raise NumericalError(f"{name} contains NaN/Inf")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_acc: float


@dataclass(frozen=True)
class TrainLog:
    records: tuple[EpochRecord, ...]
    stopping_epoch: int
    best_epoch: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "records", tuple(self.records))
        epochs = [r.epoch for r in self.records]
        if epochs != sorted(epochs) or len(set(epochs)) != len(epochs):
            raise ValidationError("epoch indices must be strictly increasing")
        if self.best_epoch > self.stopping_epoch:
            raise ValidationError(
                f"best_epoch {self.best_epoch} > stopping_epoch {self.stopping_epoch}"
            )


def _seen_table(seen_classes) -> tuple[tuple[str, ...], np.ndarray]:
    """Lexicographically ordered class ids and their aggregated
    description vectors [K, d_t] (float64)."""
    ordered = sorted(seen_classes, key=lambda c: c.class_id)
    ids = tuple(c.class_id for c in ordered)
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate class_ids among seen classes")
    if not ordered:
        raise ValidationError("no seen classes")
    return ids, np.stack([alignment.aggregate_descriptions(c) for c in ordered])


def _forward(w_v, w_t, tau, pooled, labels, agg_descs, class_ids=None):
    """Shared forward pass. Returns (loss, probs, cache-for-backward)."""
    n, k = pooled.shape[0], agg_descs.shape[0]
    if labels.min() < 0 or labels.max() >= k:
        raise ValidationError(
            f"batch labels out of range [0, {k}) for the seen-class ordering"
        )
    if pooled.shape[1] != w_v.shape[1]:
        raise ValidationError(
            f"pooled dim {pooled.shape[1]} does not match w_v input dim {w_v.shape[1]}"
        )
    if agg_descs.shape[1] != w_t.shape[1]:
        raise ValidationError(
            f"description dim {agg_descs.shape[1]} does not match w_t input dim {w_t.shape[1]}"
        )

    proj_v = pooled @ w_v.T  # [N, m]
    norms_v = np.linalg.norm(proj_v, axis=1)
    if not (norms_v > alignment.NORM_EPS).all():
        i = int(np.nonzero(~(norms_v > alignment.NORM_EPS))[0][0])
        raise DegenerateEmbeddingError(f"batch video {i}: projected norm {norms_v[i]:.3e}")
    unit_v = proj_v / norms_v[:, None]

    proj_t = agg_descs @ w_t.T  # [K, m]
    norms_t = np.linalg.norm(proj_t, axis=1)
    if not (norms_t > alignment.NORM_EPS).all():
        j = int(np.nonzero(~(norms_t > alignment.NORM_EPS))[0][0])
        which = class_ids[j] if class_ids else str(j)
        raise DegenerateEmbeddingError(f"class {which!r}: projected norm {norms_t[j]:.3e}")
    unit_t = proj_t / norms_t[:, None]

    logits = (unit_v @ unit_t.T) / tau  # [N, K]
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    denom = exp.sum(axis=1, keepdims=True)
    probs = exp / denom
    log_probs = shifted - np.log(denom)
    loss = float(-log_probs[np.arange(n), labels].mean())
    if not math.isfinite(loss):
        raise NumericalError(f"loss is not finite: {loss}")
    cache = (pooled, agg_descs, unit_v, unit_t, norms_v, norms_t)
    return loss, probs, cache


def _backward(tau, labels, probs, cache):
    pooled, agg_descs, unit_v, unit_t, norms_v, norms_t = cache
    n, k = probs.shape
    grad_logits = probs.copy()
    grad_logits[np.arange(n), labels] -= 1.0
    grad_logits /= n  # dL/dlogits

    grad_unit_v = (grad_logits @ unit_t) / tau  # [N, m]
    grad_unit_t = (grad_logits.T @ unit_v) / tau  # [K, m]

    # Normalization Jacobian: (I - uu^T)/||x|| applied row-wise.
    grad_proj_v = (
        grad_unit_v - unit_v * (grad_unit_v * unit_v).sum(axis=1, keepdims=True)
    ) / norms_v[:, None]
    grad_proj_t = (
        grad_unit_t - unit_t * (grad_unit_t * unit_t).sum(axis=1, keepdims=True)
    ) / norms_t[:, None]

    dw_v = grad_proj_v.T @ pooled  # [m, d_v]
    dw_t = grad_proj_t.T @ agg_descs  # [m, d_t]
    return dw_v, dw_t


def contrastive_loss(
    model: AlignmentModel, batch: Batch, seen_classes
) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy over seen classes (log-sum-exp shifted).

    Returns (loss, per-sample probabilities [N_b, |seen|]); probability
    columns follow the lexicographic seen-class ordering.
    """
    ids, agg = _seen_table(seen_classes)
    loss, probs, _ = _forward(
        model.w_v, model.w_t, model.tau, batch.pooled, batch.labels, agg, ids
    )
    return loss, probs


def loss_gradients(model: AlignmentModel, batch: Batch, seen_classes) -> GradientPair:
    """Analytic gradients of :func:`contrastive_loss` w.r.t. w_v and w_t."""
    ids, agg = _seen_table(seen_classes)
    _, probs, cache = _forward(
        model.w_v, model.w_t, model.tau, batch.pooled, batch.labels, agg, ids
    )
    dw_v, dw_t = _backward(model.tau, batch.labels, probs, cache)
    return GradientPair(dw_v=dw_v, dw_t=dw_t)


def sgd_step(model: AlignmentModel, grads: GradientPair, learning_rate: float) -> AlignmentModel:
    """One plain SGD update; temperature is not a trained parameter."""
    if not (math.isfinite(learning_rate) and learning_rate >= 0):
        raise ValidationError(f"learning_rate must be finite and >= 0, got {learning_rate!r}")
    if grads.dw_v.shape != model.w_v.shape or grads.dw_t.shape != model.w_t.shape:
        raise ValidationError(
            f"gradient shapes {grads.dw_v.shape}/{grads.dw_t.shape} do not match "
            f"model shapes {model.w_v.shape}/{model.w_t.shape}"
        )
    return AlignmentModel(
        w_v=model.w_v - learning_rate * grads.dw_v,
        w_t=model.w_t - learning_rate * grads.dw_t,
        tau=model.tau,
    )


def _init_matrix(scheme: str, rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    if scheme == "seeded-uniform":
        bound = 1.0 / math.sqrt(cols)
        return rng.uniform(-bound, bound, size=(rows, cols))
    # identity-padded: identity block, zero padding for rectangular shapes
    out = np.zeros((rows, cols))
    np.fill_diagonal(out, 1.0)
    return out


def initialize_model(config: TrainConfig, visual_dim: int, text_dim: int) -> AlignmentModel:
    """Seeded parameter init; w_v is drawn before w_t from a dedicated
    child stream of config.seed."""
    shared = config.shared_dim or min(visual_dim, text_dim)
    init_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(3)[0])
    w_v = _init_matrix(config.init_scheme, init_rng, shared, visual_dim)
    w_t = _init_matrix(config.init_scheme, init_rng, shared, text_dim)
    return AlignmentModel(w_v=w_v, w_t=w_t, tau=config.tau)


def _stratified_holdout(
    labels: np.ndarray, fraction: float, rng: np.random.Generator
) -> np.ndarray:
    """Boolean mask of validation rows: per class, floor(fraction * n)
    videos but at least 1 and at most n - 1; classes with a single video
    keep it for training."""
    mask = np.zeros(labels.shape[0], dtype=bool)
    for label in np.unique(labels):
        rows = np.nonzero(labels == label)[0]
        n = rows.shape[0]
        if n < 2:
            continue
        n_val = min(max(1, int(fraction * n)), n - 1)
        chosen = rng.permutation(n)[:n_val]
        mask[rows[chosen]] = True
    return mask


def train(
    manifest: DatasetManifest, split: SplitSpec, config: TrainConfig
) -> tuple[AlignmentModel, TrainLog]:
    """Mini-batch SGD on seen classes with early stopping.

    Per epoch: seeded shuffle, fixed-size batches (last kept if smaller),
    analytic gradients + SGD step, then seen-class top-1 on a stratified
    holdout. Returns the model of the best-validation epoch (ties go to
    the earliest). Deterministic for fixed (manifest, split, config).
    """
    validate_split(split, manifest)
    by_id = manifest.classes_by_id()
    seen_classes = [by_id[c] for c in sorted(split.seen)]
    class_index = {c.class_id: i for i, c in enumerate(seen_classes)}

    seen_videos = manifest.videos_of(split.seen)
    counts = {c: 0 for c in split.seen}
    for video in seen_videos:
        counts[video.class_id] += 1
    empty = sorted(c for c, n in counts.items() if n == 0)
    if empty:
        raise ValidationError(f"seen classes with no videos: {empty}")

    pooled = np.stack([alignment.pool_clips(v.clips) for v in seen_videos])
    labels = np.array([class_index[v.class_id] for v in seen_videos], dtype=np.int64)
    ids, agg = _seen_table(seen_classes)

    seed_children = np.random.SeedSequence(config.seed).spawn(3)
    model = initialize_model(config, manifest.visual_dim, manifest.text_dim)
    holdout_rng = np.random.default_rng(seed_children[1])
    shuffle_rng = np.random.default_rng(seed_children[2])

    val_mask = _stratified_holdout(labels, config.validation_fraction, holdout_rng)
    train_idx = np.nonzero(~val_mask)[0]
    val_idx = np.nonzero(val_mask)[0]

    def val_accuracy(m: AlignmentModel) -> float:
        if val_idx.size == 0:
            return 0.0  # degenerate holdout (all classes singletons)
        unit_v = alignment.normalize_rows(pooled[val_idx] @ m.w_v.T, "validation videos")
        unit_t = alignment.normalize_rows(agg @ m.w_t.T, "seen prototypes")
        preds = np.argmax(unit_v @ unit_t.T, axis=1)
        return float((preds == labels[val_idx]).mean())

    records: list[EpochRecord] = []
    best_model = model
    best_acc = -math.inf
    best_epoch = 0
    epochs_since_improve = 0
    stopping_epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(train_idx.shape[0])
        shuffled = train_idx[order]
        total_nll = 0.0
        for start in range(0, shuffled.shape[0], config.batch_size):
            chunk = shuffled[start : start + config.batch_size]
            try:
                loss, probs, cache = _forward(
                    model.w_v, model.w_t, model.tau, pooled[chunk], labels[chunk], agg, ids
                )
                dw_v, dw_t = _backward(model.tau, labels[chunk], probs, cache)
            except (DegenerateEmbeddingError, NumericalError) as err:
                kind = type(err)
                raise kind(
                    f"epoch {epoch}, batch {start // config.batch_size}: {err}"
                ) from err
            model = sgd_step(model, GradientPair(dw_v, dw_t), config.learning_rate)
            total_nll += loss * chunk.shape[0]
        train_loss = total_nll / shuffled.shape[0]
        acc = val_accuracy(model)
        records.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_acc=acc))
        stopping_epoch = epoch

        if acc > best_acc:
            best_acc = acc
            best_model = model
            best_epoch = epoch
            epochs_since_improve = 0
        else:
            epochs_since_improve += 1
            if epochs_since_improve >= config.patience:
                break

    log = TrainLog(
        records=tuple(records), stopping_epoch=stopping_epoch, best_epoch=best_epoch
    )
    return best_model, log


# -- config file (key = value) ----------------------------------------

_CONFIG_FIELDS = {f.name: f for f in fields(TrainConfig)}


def config_to_text(config: TrainConfig) -> str:
    lines = []
    for name in _CONFIG_FIELDS:
        value = getattr(config, name)
        lines.append(f"{name} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> TrainConfig:
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"config line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _CONFIG_FIELDS:
            raise ValidationError(f"config line {lineno}: unknown key {key!r}")
        if key in ("batch_size", "max_epochs", "patience", "seed"):
            values[key] = int(value)
        elif key in ("learning_rate", "tau", "validation_fraction"):
            values[key] = float(value)
        elif key == "shared_dim":
            values[key] = None if value.lower() == "none" else int(value)
        else:
            values[key] = value
    try:
        return TrainConfig(**values)
    except TypeError as err:
        raise ValidationError(f"bad config: {err}") from err


def save_config(config: TrainConfig, path: str | Path) -> None:
    Path(path).write_text(config_to_text(config), encoding="utf-8")


def load_config(path: str | Path) -> TrainConfig:
    try:
        return config_from_text(Path(path).read_text(encoding="utf-8"))
    except ValueError as err:
        if isinstance(err, ValidationError):
            raise
        raise ValidationError(f"{path}: {err}") from err


def config_digest(config: TrainConfig) -> str:
    return hashlib.sha256(config_to_text(config).encode("utf-8")).hexdigest()


def write_log_csv(log: TrainLog, path: str | Path) -> None:
    lines = ["epoch,train_loss,val_acc"]
    for r in log.records:
        lines.append(f"{r.epoch},{r.train_loss!r},{r.val_acc!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# -- model files (JSON index + tensor container files) -----------------


def save_model(model: AlignmentModel, path: str | Path, config_hash: str = "") -> None:
    """Write a model as ``<path>`` (JSON index) plus sibling ``.zt``
    tensor files holding w_v and w_t (float32)."""
    index_path = Path(path)
    index_path.parent.mkdir(parents=True, exist_ok=True)
    stem = index_path.name
    wv_rel, wt_rel = f"{stem}.w_v.zt", f"{stem}.w_t.zt"
    write_tensor(index_path.parent / wv_rel, model.w_v)
    write_tensor(index_path.parent / wt_rel, model.w_t)
    index = {
        "format": MODEL_FORMAT,
        "tau": model.tau,
        "shared_dim": model.shared_dim,
        "visual_dim": model.visual_dim,
        "text_dim": model.text_dim,
        "config_hash": config_hash,
        "tensors": {"w_v": wv_rel, "w_t": wt_rel},
    }
    index_path.write_text(json.dumps(index, indent=2) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> tuple[AlignmentModel, dict]:
    """Load a model file; returns (model, index metadata)."""
    index_path = Path(path)
    if not index_path.exists():
        raise FileNotFoundError(f"model file not found: {index_path}")
    try:
        index = json.loads(index_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"{index_path}: not valid JSON: {err}") from err
    if not isinstance(index, dict) or index.get("format") != MODEL_FORMAT:
        raise ValidationError(f"{index_path}: not a model file (format marker missing)")
    try:
        w_v = read_tensor(index_path.parent / index["tensors"]["w_v"])
        w_t = read_tensor(index_path.parent / index["tensors"]["w_t"])
        model = AlignmentModel(w_v=w_v, w_t=w_t, tau=float(index["tau"]))
    except KeyError as err:
        raise ValidationError(f"{index_path}: missing model field {err}") from err
    for key in ("shared_dim", "visual_dim", "text_dim"):
        declared = int(index.get(key, -1))
        actual = getattr(model, key)
        if declared != actual:
            raise ValidationError(
                f"{index_path}: declared {key} {declared} but tensors imply {actual}"
            )
    return model, index
