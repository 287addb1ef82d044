"""Acceptance gate for the export adapter.

One test per contract clause: exact accuracy agreement with the engine
on the golden set, per-pixel preprocessing parity, and the engine
package standing alone without the adapter installed.
"""

import json
import re
from pathlib import Path

import numpy as np
from PIL import Image

from robeval_exporter import preprocess

GOLDEN = Path(__file__).parent / "golden"


def test_criterion_accuracy_parity(golden_set, run_export, run_engine, export_args, tmp_path):
    # ten golden images, fixed tiny model: adapter argmax accuracy must
    # equal the engine's plain accuracy on the exported file, exactly
    out = tmp_path / "clean.csv"
    res = run_export(*export_args(out))
    assert res.returncode == 0, res.stderr
    adapter_acc = None
    for line in res.stdout.splitlines():
        if line.startswith("argmax_accuracy="):
            adapter_acc = float(line.split("=", 1)[1].split()[0])
    assert adapter_acc is not None

    fragment = json.loads((tmp_path / "clean.fragment.json").read_text(encoding="utf-8"))
    manifest = {
        "num_classes": 10,
        "calibration_dataset": fragment["name"],
        "datasets": [fragment],
    }
    (tmp_path / "manifest.json").write_text(json.dumps(manifest), encoding="utf-8")
    res = run_engine(
        "evaluate", tmp_path / "manifest.json", "--legacy", "--allow-partial",
        "--out", tmp_path / "report.csv",
    )
    assert res.returncode == 0, res.stderr
    engine_acc = None
    for line in (tmp_path / "report.csv").read_text(encoding="utf-8").splitlines():
        parts = line.split(",")
        if len(parts) == 3 and parts[1] == "plain_accuracy":
            engine_acc = float(parts[2])
    assert engine_acc is not None
    assert adapter_acc == engine_acc


def test_criterion_preprocessing_parity(tmp_path):
    # adapter ingest agrees with the engine's pinned outputs within
    # 1e-4 per pixel, through the full decode/resize/convert path
    with open(GOLDEN / "preprocess.json", encoding="utf-8") as fh:
        cases = json.load(fh)["images"]
    assert cases
    worst = 0.0
    for case in cases:
        raw = np.array(case["data"], dtype=np.uint8).reshape(case["shape"])
        path = tmp_path / f"{case['name']}.png"
        if raw.shape[2] == 1:
            Image.fromarray(raw[:, :, 0], mode="L").save(path, format="PNG")
        else:
            Image.fromarray(raw, mode="RGB").save(path, format="PNG")
        th, tw = case["resize"]
        for channels in (1, 3):
            got = preprocess.prepare(str(path), (th, tw), channels)
            want = np.array(case["engine_c%d" % channels])
            worst = max(worst, float(np.max(np.abs(got - want))))
    assert worst <= 1e-4


def test_criterion_engine_suite_standalone():
    # the engine package and its tests must never import the adapter;
    # they have to run identically with this package uninstalled
    repo = Path(__file__).resolve().parent.parent.parent
    pattern = re.compile(r"^\s*(?:import|from)\s+robeval_exporter\b", re.MULTILINE)
    for base in (repo / "src" / "robeval", repo / "tests"):
        for path in sorted(base.rglob("*.py")):
            assert not pattern.search(path.read_text(encoding="utf-8")), path
