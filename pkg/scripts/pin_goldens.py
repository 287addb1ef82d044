"""Regenerate the pinned golden values under tests/golden/.

The acceptance suite compares against these pins; regenerate them only
when an intended behavior change invalidates them, and rerun the full
suite afterwards.
"""

import hashlib
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from robeval import bench, imagegen

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"


def pin_imagegen(tmp: Path) -> None:
    # one source image is enough: every output depends only on its own
    # (seed, ordinal) stream and its own source file
    src = tmp / "src"
    src.mkdir(parents=True)
    imagegen.write_png(
        str(src / "000.png"), imagegen.uniform_noise(32, 32, 3, imagegen.stream(600, 0))
    )
    for kind in ("phase", "scramble"):
        imagegen.generate_dataset(kind, str(tmp / kind), seed=601, source_dir=str(src))
    for kind in ("blobs", "uniform"):
        imagegen.generate_dataset(kind, str(tmp / kind), seed=602, shape=(32, 32, 3), count=1)

    out = {}
    for kind in imagegen.KINDS:
        arr = imagegen.read_png(str(tmp / kind / "000000.png"))
        out[kind] = hashlib.sha256(np.ascontiguousarray(arr).tobytes()).hexdigest()
    (GOLDEN / "imagegen.json").write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    print("pinned", GOLDEN / "imagegen.json")


def pin_fixture(tmp: Path) -> None:
    tmp.mkdir(parents=True, exist_ok=True)
    fix = tmp / "fix"
    subprocess.run(
        [sys.executable, "-m", "robeval", "synth-fixture", "--out", str(fix), "--seed", "0"],
        check=True,
        capture_output=True,
    )
    rep = tmp / "r95.csv"
    subprocess.run(
        [
            sys.executable, "-m", "robeval", "evaluate",
            str(fix / "manifest.json"), "--legacy", "--out", str(rep),
        ],
        check=True,
        capture_output=True,
    )
    report = bench.parse_report(rep.read_text(encoding="utf-8"))

    doc = {
        "n_calibration": report.threshold.n_calibration,
        "threshold": report.threshold.value,
        "mean_display": f"{report.mean_dar:.2f}",
        "per_type": {},
        "per_dataset": {},
    }
    for tr in report.results:
        c = tr.counts
        doc["per_type"][tr.data_type.value] = {
            "counts": [c.tp, c.fp, c.fn, c.tn],
            "display": f"{tr.dar:.2f}",
        }
        for ds in tr.per_dataset:
            c = ds.counts
            doc["per_dataset"][ds.name] = {
                "counts": [c.tp, c.fp, c.fn, c.tn],
                "display": f"{ds.dar:.2f}",
            }
    (GOLDEN / "fixture_regression.json").write_text(
        json.dumps(doc, indent=2) + "\n", encoding="utf-8"
    )
    print("pinned", GOLDEN / "fixture_regression.json")


def main() -> int:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        pin_imagegen(root / "img")
        pin_fixture(root / "fix")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
