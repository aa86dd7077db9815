"""Command-line surface: synth, ingest, split, train, eval, report.

Exit codes are stable: 0 success, 1 validation error, 2 I/O error,
3 numerical failure (degenerate embedding / non-finite loss).
"""

from __future__ import annotations

import argparse
import glob
import json
import sys
from pathlib import Path

import numpy as np

from . import evaluator, trainer
from .data_model import (
    SplitSpec,
    load_manifest,
    load_split,
    save_manifest,
    save_split,
    validate_split,
)
from .errors import DegenerateEmbeddingError, NumericalError, ValidationError
from .synthetic import SyntheticSpec, generate_synthetic

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3

GROUND_TRUTH_FILENAME = "ground_truth.json"


class _Parser(argparse.ArgumentParser):
    # Flag misuse is a validation error (exit 1), not argparse's default 2.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _cmd_synth(args) -> int:
    spec = SyntheticSpec(
        num_classes=args.classes,
        videos_per_class=args.videos_per_class,
        descriptions_per_class=args.descs_per_class,
        latent_dim=args.latent_dim,
        visual_dim=args.visual_dim,
        text_dim=args.text_dim,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    manifest, ground_truth = generate_synthetic(spec)
    out = Path(args.out)
    save_manifest(manifest, out)
    payload = {
        "format": "zsae.ground_truth/v1",
        "assignments": {k: ground_truth.assignments[k] for k in sorted(ground_truth.assignments)},
    }
    (out / GROUND_TRUTH_FILENAME).write_text(
        json.dumps(payload, indent=2) + "\n", encoding="utf-8"
    )
    print(
        f"wrote {len(manifest.videos)} videos / {len(manifest.classes)} classes to {out}"
    )
    return EXIT_OK


def _cmd_ingest(args) -> int:
    manifest = load_manifest(args.manifest)
    clip_counts = [v.num_clips for v in manifest.videos]
    desc_counts = [c.num_descriptions for c in manifest.classes]
    print(f"name:               {manifest.name}")
    print(f"classes:            {len(manifest.classes)}")
    print(f"videos:             {len(manifest.videos)}")
    print(f"visual_dim:         {manifest.visual_dim}")
    print(f"text_dim:           {manifest.text_dim}")
    if clip_counts:
        print(f"clips/video:        {min(clip_counts)}..{max(clip_counts)}")
    if desc_counts:
        print(f"descriptions/class: {min(desc_counts)}..{max(desc_counts)}")
    if manifest.encoder_provenance:
        print(f"encoders:           {manifest.encoder_provenance}")
    print("valid: yes")
    return EXIT_OK


def _cmd_split(args) -> int:
    manifest = load_manifest(args.manifest)
    class_ids = sorted(manifest.class_ids)
    if len(class_ids) < 2:
        raise ValidationError("need at least 2 classes to build a seen/unseen split")
    if not 0 < args.unseen_fraction < 1:
        raise ValidationError(
            f"--unseen-fraction must lie in (0, 1), got {args.unseen_fraction}"
        )
    if args.count < 1:
        raise ValidationError(f"--count must be positive, got {args.count}")
    n_unseen = min(max(1, round(args.unseen_fraction * len(class_ids))), len(class_ids) - 1)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        order = rng.permutation(len(class_ids))
        unseen = frozenset(class_ids[j] for j in order[:n_unseen])
        seen = frozenset(class_ids[j] for j in order[n_unseen:])
        split = SplitSpec(split_id=f"split_{i:02d}", seen=seen, unseen=unseen)
        validate_split(split, manifest)
        save_split(split, out_dir / f"split_{i:02d}.json")
    print(f"wrote {args.count} splits ({n_unseen} unseen / {len(class_ids) - n_unseen} seen) to {out_dir}")
    return EXIT_OK


def _cmd_train(args) -> int:
    manifest = load_manifest(args.manifest)
    split = load_split(args.split)
    config = trainer.load_config(args.config) if args.config else trainer.TrainConfig()
    model, log = trainer.train(manifest, split, config)
    trainer.save_model(model, args.out_model, config_hash=trainer.config_digest(config))
    if args.log:
        trainer.write_log_csv(log, args.log)
    best = next((r for r in log.records if r.epoch == log.best_epoch), None)
    if best is None:
        print(f"trained 0 epochs (initialized model saved to {args.out_model})")
    else:
        print(
            f"stopped at epoch {log.stopping_epoch}, best epoch {log.best_epoch} "
            f"(val acc {best.val_acc:.4f}); model saved to {args.out_model}"
        )
    return EXIT_OK


def _cmd_eval(args) -> int:
    manifest = load_manifest(args.manifest)
    split = load_split(args.split)
    model, meta = trainer.load_model(args.model)
    if model.visual_dim != manifest.visual_dim or model.text_dim != manifest.text_dim:
        raise ValidationError(
            f"model dims ({model.visual_dim} visual / {model.text_dim} text) do not "
            f"match manifest ({manifest.visual_dim} / {manifest.text_dim})"
        )
    report = evaluator.evaluate_split(model, manifest, split, args.side)
    evaluator.save_report(report, args.out_report)
    print(
        f"{report.dataset} {report.split_id} [{args.side}]: "
        f"top-1 {report.top1_accuracy:.4f} over {report.num_videos} videos"
    )
    return EXIT_OK


def _cmd_report(args) -> int:
    paths = sorted(glob.glob(args.reports))
    if not paths:
        raise ValidationError(f"no report files match {args.reports!r}")
    by_dataset: dict[str, list] = {}
    for path in paths:
        report = evaluator.load_report(path)
        by_dataset.setdefault(report.dataset, []).append(report)
    aggregates = []
    for dataset in sorted(by_dataset):
        reports = sorted(by_dataset[dataset], key=lambda r: r.split_id)
        aggregates.append(evaluator.aggregate_splits(reports))
    print(evaluator.render_aggregate_table(aggregates))
    if args.out:
        if len(aggregates) != 1:
            raise ValidationError(
                "--out expects reports from exactly one dataset, got "
                f"{len(aggregates)}"
            )
        evaluator.save_aggregate(aggregates[0], args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zsae", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--videos-per-class", type=int, default=20)
    p.add_argument("--descs-per-class", type=int, default=3)
    p.add_argument("--latent-dim", type=int, default=8)
    p.add_argument("--visual-dim", type=int, default=16)
    p.add_argument("--text-dim", type=int, default=16)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="load a manifest and print dataset stats")
    p.add_argument("--manifest", required=True)
    p.add_argument("--validate", action="store_true", help="validation always runs; kept for explicitness")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", help="generate seeded seen/unseen class splits")
    p.add_argument("--manifest", required=True)
    p.add_argument("--unseen-fraction", type=float, default=0.3)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("train", help="train projections on the seen side of a split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True, help="split JSON file")
    p.add_argument("--config", help="key = value config file (defaults if omitted)")
    p.add_argument("--out-model", required=True)
    p.add_argument("--log", help="write per-epoch CSV log here")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="zero-shot evaluation of one split side")
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--side", choices=evaluator.SIDES, default="unseen")
    p.add_argument("--out-report", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("report", help="aggregate report files into mean ± std per dataset")
    p.add_argument("--reports", required=True, help="glob over report JSON files")
    p.add_argument("--out", help="also write the aggregate JSON here (single dataset)")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help exits 0, usage errors exit 1
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DegenerateEmbeddingError, NumericalError) as err:
        print(f"numerical error: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
