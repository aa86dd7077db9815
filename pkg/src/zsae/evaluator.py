"""Zero-shot inference and multi-split reporting.

Candidates are restricted to one side of the split by construction, so
prototype leakage across sides is impossible. Aggregates use the
population standard deviation over splits and render on a percent scale
with one decimal ("53.9 ± 2.3").
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import alignment
from .alignment import AlignmentModel, ClassPrototypeTable
from .data_model import DatasetManifest, SplitSpec, VideoSample, validate_split
from .errors import ValidationError

REPORT_FORMAT = "zsae.report/v1"

SIDES = ("seen", "unseen")


@dataclass(frozen=True)
class Prediction:
    video_id: str
    predicted_class: str
    similarity_scores: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        scores = tuple((str(c), float(s)) for c, s in self.similarity_scores)
        object.__setattr__(self, "similarity_scores", scores)
        if not scores:
            raise ValidationError("prediction has no candidate scores")
        best = max(s for _, s in scores)
        by_id = dict(scores)
        if self.predicted_class not in by_id or by_id[self.predicted_class] != best:
            raise ValidationError(
                f"predicted class {self.predicted_class!r} does not attain the "
                f"maximum score {best}"
            )
        if any(abs(s) > 1.0 for _, s in scores):
            raise ValidationError("similarity scores must lie in [-1, 1]")


@dataclass(frozen=True)
class EvalReport:
    """Top-1 accuracy of one split side; per-class breakdown included."""

    dataset: str
    split_id: str
    num_videos: int
    top1_accuracy: float
    per_class_accuracy: dict[str, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_class_accuracy", dict(self.per_class_accuracy))
        if self.num_videos < 1:
            raise ValidationError("report must cover at least one video")
        if not 0.0 <= self.top1_accuracy <= 1.0:
            raise ValidationError(f"top1_accuracy out of [0,1]: {self.top1_accuracy}")
        for class_id, acc in self.per_class_accuracy.items():
            if not 0.0 <= acc <= 1.0:
                raise ValidationError(f"per-class accuracy out of [0,1] for {class_id!r}")


@dataclass(frozen=True)
class AggregateReport:
    dataset: str
    reports: tuple[EvalReport, ...]
    mean: float
    std: float  # population std over splits

    def __post_init__(self) -> None:
        object.__setattr__(self, "reports", tuple(self.reports))
        if not self.reports:
            raise ValidationError("aggregate needs at least one report")
        values = [r.top1_accuracy for r in self.reports]
        if not (min(values) - 1e-12 <= self.mean <= max(values) + 1e-12):
            raise ValidationError("aggregate mean outside the range of split accuracies")
        if self.std < 0:
            raise ValidationError("std must be nonnegative")


def predict(
    model: AlignmentModel, video: VideoSample, candidates: ClassPrototypeTable
) -> Prediction:
    """Score *video* against every candidate prototype by cosine
    similarity; argmax with ties going to the lexicographically smallest
    class_id (the table order)."""
    if len(candidates) == 0:
        raise ValidationError("empty candidate table")
    embedded = alignment.embed_video(model, video)
    norms = np.linalg.norm(candidates.prototypes, axis=1) * np.linalg.norm(embedded)
    scores = np.clip((candidates.prototypes @ embedded) / norms, -1.0, 1.0)
    winner = int(np.argmax(scores))
    return Prediction(
        video_id=video.video_id,
        predicted_class=candidates.class_ids[winner],
        similarity_scores=tuple(zip(candidates.class_ids, scores.tolist())),
    )


def evaluate_split(
    model: AlignmentModel, manifest: DatasetManifest, split: SplitSpec, side: str
) -> EvalReport:
    """Top-1 accuracy over one side's videos, with candidates built only
    from that side's classes."""
    if side not in SIDES:
        raise ValidationError(f"side must be one of {SIDES}, got {side!r}")
    validate_split(split, manifest)
    side_ids = split.seen if side == "seen" else split.unseen

    by_id = manifest.classes_by_id()
    candidates = alignment.build_prototypes(model, [by_id[c] for c in sorted(side_ids)])

    videos = manifest.videos_of(side_ids)
    if not videos:
        raise ValidationError(f"no videos on the {side!r} side of split {split.split_id!r}")

    correct_total = 0
    per_class_correct: dict[str, int] = {}
    per_class_total: dict[str, int] = {}
    for video in videos:
        prediction = predict(model, video, candidates)
        hit = prediction.predicted_class == video.class_id
        correct_total += hit
        per_class_correct[video.class_id] = per_class_correct.get(video.class_id, 0) + hit
        per_class_total[video.class_id] = per_class_total.get(video.class_id, 0) + 1

    per_class = {
        class_id: per_class_correct[class_id] / per_class_total[class_id]
        for class_id in sorted(per_class_total)
    }
    return EvalReport(
        dataset=manifest.name,
        split_id=split.split_id,
        num_videos=len(videos),
        top1_accuracy=correct_total / len(videos),
        per_class_accuracy=per_class,
    )


def aggregate_splits(reports) -> AggregateReport:
    """Mean and population std of top-1 accuracy over splits."""
    reports = tuple(reports)
    if not reports:
        raise ValidationError("no reports to aggregate")
    datasets = {r.dataset for r in reports}
    if len(datasets) > 1:
        raise ValidationError(f"reports mix datasets: {sorted(datasets)}")
    values = np.array([r.top1_accuracy for r in reports], dtype=np.float64)
    return AggregateReport(
        dataset=reports[0].dataset,
        reports=reports,
        mean=float(values.mean()),
        std=float(values.std()),  # ddof=0: population std
    )


def format_mean_std(mean: float, std: float) -> str:
    """Percent scale, one decimal: 0.539/0.023 -> '53.9 ± 2.3'."""
    return f"{mean * 100:.1f} ± {std * 100:.1f}"


def render_aggregate_table(aggregates) -> str:
    """Human-readable table, one line per dataset."""
    aggregates = list(aggregates)
    width = max([len(a.dataset) for a in aggregates] + [len("dataset")])
    lines = [
        f"{'dataset':<{width}}  splits  top-1 % (mean ± population std)",
    ]
    for agg in aggregates:
        lines.append(
            f"{agg.dataset:<{width}}  {len(agg.reports):>6}  {format_mean_std(agg.mean, agg.std)}"
        )
    return "\n".join(lines)


# -- serialization ------------------------------------------------------


def save_report(report: EvalReport, path: str | Path) -> None:
    payload = {
        "format": REPORT_FORMAT,
        "dataset": report.dataset,
        "split_id": report.split_id,
        "num_videos": report.num_videos,
        "top1_accuracy": report.top1_accuracy,
        "per_class_accuracy": {k: report.per_class_accuracy[k] for k in sorted(report.per_class_accuracy)},
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_report(path: str | Path) -> EvalReport:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise ValidationError(f"{path}: not valid JSON: {err}") from err
    if not isinstance(payload, dict) or payload.get("format") != REPORT_FORMAT:
        raise ValidationError(f"{path}: not an evaluation report")
    try:
        return EvalReport(
            dataset=str(payload["dataset"]),
            split_id=str(payload["split_id"]),
            num_videos=int(payload["num_videos"]),
            top1_accuracy=float(payload["top1_accuracy"]),
            per_class_accuracy={
                str(k): float(v) for k, v in payload["per_class_accuracy"].items()
            },
        )
    except KeyError as err:
        raise ValidationError(f"{path}: missing report field {err}") from err


def save_aggregate(aggregate: AggregateReport, path: str | Path) -> None:
    payload = {
        "format": "zsae.aggregate/v1",
        "dataset": aggregate.dataset,
        "num_splits": len(aggregate.reports),
        "mean": aggregate.mean,
        "std": aggregate.std,
        "std_kind": "population",
        "rendered": format_mean_std(aggregate.mean, aggregate.std),
        "splits": [
            {"split_id": r.split_id, "top1_accuracy": r.top1_accuracy}
            for r in aggregate.reports
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def write_per_class_csv(report: EvalReport, path: str | Path) -> None:
    lines = ["class_id,accuracy"]
    for class_id in sorted(report.per_class_accuracy):
        lines.append(f"{class_id},{report.per_class_accuracy[class_id]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
