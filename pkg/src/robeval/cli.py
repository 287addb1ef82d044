"""Command-line surface: evaluate, calibrate, generate, synth-fixture,
report.

Every subcommand is deterministic given its inputs and seed flags; all
randomness funnels through explicit --seed. Exit status is 0 only when
a report, threshold or dataset was fully produced.
"""

from __future__ import annotations

import argparse
import sys

from . import bench, fixture, imagegen
from .datamodel import (
    MACRO,
    POOLED,
    SCORE_METHODS,
    EvalConfig,
    load_manifest,
)

_EXACT = bench._exact


def _parse_shape(text: str) -> tuple[int, int, int]:
    parts = text.lower().split("x")
    if len(parts) != 3:
        raise ValueError(f"shape must look like HxWxC, got {text!r}")
    try:
        h, w, c = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"shape must look like HxWxC, got {text!r}") from None
    return h, w, c


def _config_from(args) -> EvalConfig:
    return EvalConfig(
        score_method=args.score,
        accept_rate=args.accept_rate,
        pooling=getattr(args, "pooling", POOLED),
        gen_gamma=getattr(args, "gen_gamma", 0.1),
        gen_top_m=getattr(args, "gen_top_m", None),
    )


def _write_or_print(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {out}")
    else:
        print(text, end="")


def cmd_evaluate(args) -> int:
    manifest = load_manifest(args.manifest)
    report = bench.evaluate(
        manifest,
        _config_from(args),
        legacy=args.legacy,
        allow_partial=args.allow_partial,
        warn=lambda msg: print(f"warning: {msg}", file=sys.stderr),
    )
    print(bench.render_report(report, "markdown"), end="")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(bench.render_report(report, args.format))
        print(f"wrote {args.out}")
    return 0


def cmd_calibrate(args) -> int:
    manifest = load_manifest(args.manifest)
    t = bench.calibrate(manifest, _config_from(args))
    print(f"threshold={_EXACT(t.value)}")
    print(f"n_calibration={t.n_calibration}")
    print(f"target_accept_rate={_EXACT(t.accept_rate_target)}")
    print(f"achieved_accept_rate={_EXACT(t.achieved_accept_rate)}")
    return 0


def cmd_generate(args) -> int:
    shape = _parse_shape(args.shape) if args.shape else None
    fragment = imagegen.generate_dataset(
        kind=args.kind,
        out_dir=args.out,
        seed=args.seed,
        source_dir=args.src,
        shape=shape,
        count=args.count,
        name=args.name,
    )
    print(f"wrote {fragment['count']} images to {args.out} ({fragment['name']}, unrecognisable)")
    return 0


def cmd_synth_fixture(args) -> int:
    per_type = {}
    for key in fixture.TYPE_KEYS:
        value = getattr(args, f"n_{key}".replace("-", "_"))
        if value is not None:
            per_type[key] = value
    manifest_path = fixture.build_fixture(
        out_dir=args.out,
        seed=args.seed,
        n=args.n,
        n_train_free=args.n_train_free,
        num_classes=args.classes,
        dim=args.dim,
        per_type=per_type,
    )
    print(f"wrote {manifest_path}")
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.reports:
        with open(path, encoding="utf-8") as fh:
            reports.append(bench.parse_report(fh.read()))
    if args.aggregate:
        rendered = bench.render_report(bench.aggregate_trials(reports), args.format)
    else:
        if len(reports) != 1:
            raise ValueError("pass exactly one report, or --aggregate for several")
        rendered = bench.render_report(reports[0], args.format)
    _write_or_print(rendered, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robeval",
        description="Fixed-threshold rejection benchmark over five data types.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="run the benchmark for one manifest")
    p.add_argument("manifest")
    p.add_argument("--score", choices=SCORE_METHODS, default="msp")
    p.add_argument("--accept-rate", type=float, default=0.95,
                   help="fraction of correctly classified clean samples to accept")
    p.add_argument("--pooling", choices=(POOLED, MACRO), default=POOLED)
    p.add_argument("--legacy", action="store_true",
                   help="also compute AUROC/AUPR/FPR@TPR and plain accuracy")
    p.add_argument("--allow-partial", action="store_true",
                   help="permit missing data types; the mean covers present types only")
    p.add_argument("--gen-gamma", type=float, default=0.1)
    p.add_argument("--gen-top-m", type=int, default=None)
    p.add_argument("--out", help="report file to write")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("calibrate", help="calibrate the threshold only")
    p.add_argument("manifest")
    p.add_argument("--score", choices=SCORE_METHODS, default="msp")
    p.add_argument("--accept-rate", type=float, default=0.95)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("generate", help="generate an unrecognisable-image dataset")
    p.add_argument("--kind", choices=imagegen.KINDS, required=True)
    p.add_argument("--src", help="source image directory (phase, scramble)")
    p.add_argument("--shape", help="HxWxC (blobs, uniform)")
    p.add_argument("--count", type=int, help="number of images (blobs, uniform)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--name", help="dataset name for the manifest fragment")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("synth-fixture", help="write a complete runnable synthetic benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=200, help="samples per dataset")
    p.add_argument("--n-train-free", type=int, default=4,
                   help="held-out cluster centers for the novel dataset")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--out", required=True)
    for key in fixture.TYPE_KEYS:
        p.add_argument(f"--n-{key}", type=int, default=None,
                       help=f"override --n for {key} (0 omits the type)")
    p.set_defaults(func=cmd_synth_fixture)

    p = sub.add_parser("report", help="re-render or trial-aggregate CSV reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--aggregate", action="store_true",
                   help="mean and sample std across trial reports")
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
