"""Command-line entry point.

Subcommands: `synth` generates synthetic datasets, `validate` checks a
dataset on disk, `run` executes the continual active-learning protocol,
`sweep` repeats it across parameter values, `inspect` summarizes a
checkpoint, and `serve` starts the HTTP service. Exit codes: 0 success,
1 usage error, 2 data error, 3 interactive abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .classifier import TrainConfig
from .datasets import generate_synthetic, load_dataset, validate_dataset, write_dataset
from .errors import DataError, InteractiveAbort, UsageError
from .protocol import (
    MetricsWriter,
    ProtocolConfig,
    increments_to_all_classes,
    run,
    sweep,
    write_run_manifest,
)
from .state import checkpoint_summary, save_checkpoint

# short CLI spellings for the acquisition modes
ACQUISITION_CHOICES = {
    "combined": "combined",
    "entropy": "entropy_only",
    "consistency": "consistency_only",
    "random": "random",
}


def _ensure_absent(path: Path, force: bool) -> None:
    if path.exists() and not force:
        raise UsageError(f"{path} already exists (use --force to overwrite)")


def _add_protocol_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pool-size", type=int, default=5, metavar="M")
    parser.add_argument("--label-budget", type=int, default=1, metavar="K")
    parser.add_argument("--prob-threshold", type=float, default=0.2, metavar="P")
    parser.add_argument("--variance-floor", type=float, default=1e-4, metavar="EPS")
    parser.add_argument("--delta", type=float, default=0.7)
    parser.add_argument("--acquisition", choices=sorted(ACQUISITION_CHOICES),
                        default="combined")
    parser.add_argument("--seed", type=int, default=0, metavar="N")
    parser.add_argument("--epochs", type=int, default=25)
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--momentum", type=float, default=0.9)
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--max-increments", type=int, default=100, metavar="N")
    parser.add_argument("--eval-every", type=int, default=1, metavar="N")
    parser.add_argument("--oracle", choices=["simulated", "interactive"],
                        default="simulated")
    parser.add_argument("--deterministic", action="store_true",
                        help="single-threaded, byte-reproducible output")
    parser.add_argument("--workers", type=int, default=None, metavar="N")


def _protocol_config(args) -> ProtocolConfig:
    return ProtocolConfig(
        pool_size=args.pool_size,
        label_budget=args.label_budget,
        prob_threshold=args.prob_threshold,
        variance_floor=args.variance_floor,
        delta=args.delta,
        acquisition=ACQUISITION_CHOICES[args.acquisition],
        train=TrainConfig(
            epochs=args.epochs,
            learning_rate=args.lr,
            momentum=args.momentum,
            batch_size=args.batch_size,
        ),
        max_increments=args.max_increments,
        eval_every=args.eval_every,
        master_seed=args.seed,
        oracle=args.oracle,
        deterministic=args.deterministic,
        workers=args.workers,
    )


def _cmd_synth(args) -> int:
    out = Path(args.out)
    _ensure_absent(out, args.force)
    dataset = generate_synthetic(
        num_classes=args.classes,
        objects_per_class=args.objects_per_class,
        views_per_object=args.views,
        dim=args.dim,
        class_spread=args.class_spread,
        view_jitter=args.view_jitter,
        seed=args.seed,
        test_objects_per_class=args.test_objects_per_class,
        name=args.name,
    )
    manifest, blob = write_dataset(dataset, out)
    print(f"wrote {manifest} and {blob}")
    print(
        f"{dataset.name}: {len(dataset.objects)} objects "
        f"({len(dataset.train_objects)} train / {len(dataset.test_objects)} test), "
        f"dim {dataset.feature_dim}, {len(dataset.labels)} labels"
    )
    return 0


def _cmd_validate(args) -> int:
    try:
        summary = validate_dataset(args.manifest)
    except DataError as exc:
        if args.json:
            print(json.dumps({"valid": False, "error": str(exc)}, indent=1))
        else:
            print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        print(json.dumps(summary, indent=1))
    else:
        print(
            f"OK {summary['name']}: {summary['objects']} objects "
            f"({summary['train_objects']} train / {summary['test_objects']} test), "
            f"dim {summary['feature_dim']}, {summary['total_vectors']} vectors, "
            f"{summary['labels']} labels"
        )
    return 0


def _cmd_run(args) -> int:
    cfg = _protocol_config(args)
    out = Path(args.out)
    _ensure_absent(out, args.force)
    if args.save_state:
        _ensure_absent(Path(args.save_state), args.force)
    dataset = load_dataset(args.dataset)
    write_run_manifest(out, cfg, dataset.name)
    with MetricsWriter(out) as metrics:
        result = run(dataset, cfg, metrics=metrics)

    records = result.records
    total_classes = len({o.label for o in dataset.train_objects})
    reached = increments_to_all_classes(records, total_classes)
    evaluated = [r.test_accuracy for r in records if r.test_accuracy is not None]
    footprint = result.bank.footprint()
    print(f"increments: {len(records)}")
    print(
        f"learned classes: {len(result.bank)}/{total_classes}"
        + (f" (all by increment {reached})" if reached else "")
    )
    if evaluated:
        print(f"final test accuracy: {evaluated[-1]:.4f}")
        last = records[-1].avg_incremental_accuracy
        print(f"avg incremental accuracy: {last:.4f}")
    print(
        f"memory: {footprint.component_count} components, "
        f"{footprint.stored_vectors} stored vectors, "
        f"{footprint.megabytes:.2f} MB"
    )
    print(f"metrics: {out}")
    if args.save_state:
        state_path, _ = save_checkpoint(Path(args.save_state), result.bank, result.head)
        print(f"state: {state_path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _protocol_config(args)
    values = [float(v) for v in args.values.split(",") if v.strip() != ""]
    out = Path(args.out) if args.out else None
    if out:
        _ensure_absent(out, args.force)
    dataset = load_dataset(args.dataset)
    points = sweep(dataset, cfg, args.param, values)

    header = ["parameter", "value", "increments", "final_accuracy",
              "avg_incremental_accuracy", "component_count", "learned_classes"]
    rows = [
        [p.parameter, p.value, p.increments,
         "" if p.final_accuracy is None else repr(p.final_accuracy),
         "" if p.avg_incremental_accuracy is None else repr(p.avg_incremental_accuracy),
         p.component_count, p.learned_classes]
        for p in points
    ]
    print("  ".join(header))
    for row in rows:
        print("  ".join(str(c) for c in row))
    if out:
        import csv

        with open(out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        print(f"sweep table: {out}")
    return 0


def _cmd_inspect(args) -> int:
    summary = checkpoint_summary(args.checkpoint)
    if args.json:
        print(json.dumps(summary, indent=1))
        return 0
    print(f"feature_dim: {summary['feature_dim']}")
    print(f"prob_threshold: {summary['prob_threshold']}")
    print(f"variance_floor: {summary['variance_floor']}")
    print(f"classes: {summary['classes']}")
    print(f"components: {summary['components']}")
    print(f"ingested vectors: {summary['ingested_vectors']}")
    print(f"stored vectors: {summary['stored_vectors']} (2 per component)")
    print(
        f"memory: {summary['memory_bytes']} bytes "
        f"({summary['memory_mb']:.2f} MB)"
    )
    per_class = " ".join(f"{k}={v}" for k, v in summary["per_class"].items())
    print(f"per class: {per_class or '(empty)'}")
    print(f"classifier labels: {summary['classifier_labels']}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="focal",
        description="continual active learning over multi-view feature datasets",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="generate a synthetic dataset")
    synth.add_argument("--classes", type=int, default=10)
    synth.add_argument("--objects-per-class", type=int, default=40)
    synth.add_argument("--views", type=int, default=8)
    synth.add_argument("--dim", type=int, default=64)
    synth.add_argument("--class-spread", type=float, default=0.25)
    synth.add_argument("--view-jitter", type=float, default=0.05)
    synth.add_argument("--test-objects-per-class", type=int, default=None)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--name", default="synthetic")
    synth.add_argument("--out", required=True, metavar="MANIFEST")
    synth.add_argument("--force", action="store_true")
    synth.set_defaults(handler=_cmd_synth)

    validate = sub.add_parser("validate", help="check a dataset manifest + blob")
    validate.add_argument("manifest")
    validate.add_argument("--json", action="store_true")
    validate.set_defaults(handler=_cmd_validate)

    runp = sub.add_parser("run", help="run the continual active-learning protocol")
    runp.add_argument("--dataset", required=True, metavar="MANIFEST")
    runp.add_argument("--out", required=True, metavar="CSV")
    runp.add_argument("--save-state", default=None, metavar="CHECKPOINT")
    runp.add_argument("--force", action="store_true")
    _add_protocol_flags(runp)
    runp.set_defaults(handler=_cmd_run)

    sweepp = sub.add_parser("sweep", help="run the protocol across parameter values")
    sweepp.add_argument("--dataset", required=True, metavar="MANIFEST")
    sweepp.add_argument("--param", choices=["delta", "P"], required=True)
    sweepp.add_argument("--values", required=True, metavar="A,B,C")
    sweepp.add_argument("--out", default=None, metavar="CSV")
    sweepp.add_argument("--force", action="store_true")
    _add_protocol_flags(sweepp)
    sweepp.set_defaults(handler=_cmd_sweep)

    inspect = sub.add_parser("inspect", help="summarize a saved checkpoint")
    inspect.add_argument("checkpoint")
    inspect.add_argument("--json", action="store_true")
    inspect.set_defaults(handler=_cmd_inspect)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(handler=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InteractiveAbort as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
