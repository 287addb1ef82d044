"""Command line front end for the export adapter."""

from __future__ import annotations

import argparse
import sys

from .export import TYPE_TAGS, ExportJob, export_logits


def _parse_resize(text: str) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) != 2:
        raise ValueError(f"resize must look like HxW, got {text!r}")
    try:
        h, w = (int(p) for p in parts)
    except ValueError:
        raise ValueError(f"resize must look like HxW, got {text!r}") from None
    return h, w


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robeval-export",
        description="Run a trained classifier over an image directory and "
        "write a robeval logit file plus manifest fragment.",
    )
    parser.add_argument(
        "--model",
        required=True,
        help="model reference: a .npz linear checkpoint (arrays W, b) or module:attribute",
    )
    parser.add_argument("--data", required=True, help="image directory")
    parser.add_argument("--type", required=True, choices=TYPE_TAGS, help="dataset data type tag")
    parser.add_argument("--resize", required=True, help="target resolution HxW, e.g. 32x32")
    parser.add_argument("--channels", required=True, type=int, choices=(1, 3))
    parser.add_argument("--classes", required=True, type=int, help="number of classes C")
    parser.add_argument("--out", required=True, help="output logit file (CSV)")
    parser.add_argument("--batch-size", type=int, default=64)
    parser.add_argument("--name", default=None, help="dataset name for the manifest fragment")
    parser.add_argument(
        "--attack-budget",
        type=float,
        default=None,
        help="informational epsilon recorded in the fragment",
    )
    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    # tolerate an explicit leading subcommand word
    if argv and argv[0] == "export":
        argv = argv[1:]
    args = build_parser().parse_args(argv)
    try:
        job = ExportJob(
            model_ref=args.model,
            data_dir=args.data,
            data_type=args.type,
            resize=_parse_resize(args.resize),
            channels=args.channels,
            num_classes=args.classes,
            out_path=args.out,
            batch_size=args.batch_size,
            name=args.name,
            attack_budget=args.attack_budget,
        )
        summary = export_logits(job)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {summary['count']} rows of {summary['num_classes']} logits to {summary['out_path']}")
    print(f"fragment {summary['fragment_path']}")
    if summary["accuracy"] is not None:
        print(
            f"argmax_accuracy={summary['accuracy']!r} "
            f"({summary['correct']}/{summary['count']})"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
