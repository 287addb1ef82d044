"""Adapter behavior: discovery, labels, wire output, engine agreement."""

import json
import re
from pathlib import Path

import numpy as np
import pytest

from robeval_exporter import ExportJob, discover_images, export_logits, load_model, prepare

WIRE_FLOAT = re.compile(r"-?\d\.\d{16}e[+-]\d{2,3}$")


def parse_accuracy(stdout: str) -> float:
    for line in stdout.splitlines():
        if line.startswith("argmax_accuracy="):
            return float(line.split("=", 1)[1].split()[0])
    raise AssertionError(f"no accuracy line in {stdout!r}")


def test_ten_images_give_ten_rows_of_ten_logits(golden_set, run_export, read_rows, tmp_path):
    out = tmp_path / "clean.csv"
    res = run_export(
        "--model", golden_set["model"], "--data", golden_set["data"],
        "--type", "clean", "--resize", "16x12", "--channels", 3,
        "--classes", 10, "--out", out,
    )
    assert res.returncode == 0, res.stderr
    ids, labels, logits = read_rows(out)
    assert len(ids) == 10
    assert logits.shape == (10, 10)
    assert labels == [0] * 5 + [1] * 5
    assert ids == [f"{c}/im{i}" for c in (0, 1) for i in range(5)]
    text = out.read_text(encoding="utf-8")
    assert text.startswith("id,label," + ",".join(f"logit_{i}" for i in range(10)) + "\n")
    for token in text.splitlines()[1].split(",")[2:]:
        assert WIRE_FLOAT.match(token), token


def test_argmax_accuracy_equals_engine_plain_accuracy(
    golden_set, run_export, run_engine, export_args, tmp_path
):
    out = tmp_path / "clean.csv"
    res = run_export(*export_args(out))
    assert res.returncode == 0, res.stderr
    adapter_acc = parse_accuracy(res.stdout)

    # hand the exported file to the engine, fragment verbatim
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


def test_unknown_type_labels_everything_minus_one(
    golden_set, run_export, read_rows, tmp_path, write_png
):
    rng = np.random.default_rng(5)
    data = tmp_path / "noise"
    data.mkdir()
    for i in range(4):
        write_png(data / f"n{i}.png", rng.integers(0, 256, size=(20, 14, 3)).astype(np.uint8))
    out = tmp_path / "novel.csv"
    res = run_export(
        "--model", golden_set["model"], "--data", data, "--type", "novel",
        "--resize", "16x12", "--channels", 3, "--classes", 10, "--out", out,
    )
    assert res.returncode == 0, res.stderr
    ids, labels, logits = read_rows(out)
    assert labels == [-1] * 4
    assert ids == [f"n{i}" for i in range(4)]
    assert "argmax_accuracy" not in res.stdout


def test_sidecar_fixes_labels_and_order(golden_set, run_export, read_rows, tmp_path, write_png):
    rng = np.random.default_rng(6)
    data = tmp_path / "flat"
    data.mkdir()
    for name in ("zz.png", "aa.png", "mm.png"):
        write_png(data / name, rng.integers(0, 256, size=(20, 14, 3)).astype(np.uint8))
    (data / "labels.csv").write_text("zz.png,7\naa.png,0\nmm.png,3\n", encoding="utf-8")
    out = tmp_path / "side.csv"
    res = run_export(
        "--model", golden_set["model"], "--data", data, "--type", "corrupt",
        "--resize", "16x12", "--channels", 3, "--classes", 10, "--out", out,
    )
    assert res.returncode == 0, res.stderr
    ids, labels, _ = read_rows(out)
    assert ids == ["zz", "aa", "mm"]
    assert labels == [7, 0, 3]


def test_rows_round_trip_at_serialized_precision(golden_set, export_args, run_export, read_rows, tmp_path):
    out = tmp_path / "clean.csv"
    res = run_export(*export_args(out))
    assert res.returncode == 0, res.stderr
    _, _, written = read_rows(out)

    # recompute in process; 17 significant digits round-trip float64 exactly
    forward = load_model(str(golden_set["model"]))
    items = discover_images(str(golden_set["data"]), "clean", 10)
    batch = np.stack([prepare(path, (16, 12), 3) for path, _, _ in items])
    assert np.array_equal(written, forward(batch))


def test_output_independent_of_batch_size(export_args, run_export, tmp_path):
    out1 = tmp_path / "a.csv"
    out3 = tmp_path / "b.csv"
    assert run_export(*export_args(out1, batch_size=64)).returncode == 0
    assert run_export(*export_args(out3, batch_size=3)).returncode == 0
    assert out1.read_bytes() == out3.read_bytes()


def test_fragment_carries_name_type_path_and_budget(export_args, run_export, tmp_path):
    out = tmp_path / "adv.csv"
    res = run_export(*export_args(out, type="adversarial", name="pgd-linf", attack_budget="0.0314"))
    assert res.returncode == 0, res.stderr
    frag = json.loads((tmp_path / "adv.fragment.json").read_text(encoding="utf-8"))
    assert frag == {
        "name": "pgd-linf",
        "type": "adversarial",
        "path": "adv.csv",
        "attack_budget": 0.0314,
    }


def test_fragment_defaults_to_directory_name(export_args, run_export, tmp_path, load_json):
    out = tmp_path / "c.csv"
    assert run_export(*export_args(out)).returncode == 0
    frag = load_json(tmp_path / "c.fragment.json")
    assert frag == {"name": "images", "type": "clean", "path": "c.csv"}


def test_callable_model_reference(golden_set, run_export, read_rows, tmp_path):
    mod = tmp_path / "toymodel.py"
    mod.write_text(
        "import numpy as np\n"
        "def predict(batch):\n"
        "    cols = np.arange(6, dtype=np.float64)\n"
        "    return batch.sum(axis=1)[:, None] * 0.01 + cols\n",
        encoding="utf-8",
    )
    out = tmp_path / "call.csv"
    res = run_export(
        "--model", "toymodel:predict", "--data", golden_set["data"], "--type", "clean",
        "--resize", "16x12", "--channels", 3, "--classes", 6, "--out", out,
        env={"PYTHONPATH": str(tmp_path)},
    )
    assert res.returncode == 0, res.stderr
    _, _, logits = read_rows(out)
    assert logits.shape == (10, 6)
    # the toy model always peaks on the last column
    assert np.all(np.argmax(logits, axis=1) == 5)


def test_model_width_mismatch_fails(golden_set, export_args, run_export, tmp_path):
    out = tmp_path / "x.csv"
    res = run_export(*export_args(out, classes="7"))
    assert res.returncode == 1
    assert "error:" in res.stderr
    assert "expected 7" in res.stderr


def test_missing_model_file_fails(export_args, run_export, tmp_path):
    res = run_export(*export_args(tmp_path / "x.csv", model=tmp_path / "nope.npz"))
    assert res.returncode == 1
    assert "cannot load model" in res.stderr


def test_malformed_checkpoint_fails(export_args, run_export, tmp_path):
    bad = tmp_path / "bad.npz"
    np.savez(bad, weights=np.zeros((3, 3)))
    res = run_export(*export_args(tmp_path / "x.csv", model=bad))
    assert res.returncode == 1
    assert "expected arrays 'W' and 'b'" in res.stderr


def test_undecodable_image_fails(golden_set, run_export, tmp_path):
    data = tmp_path / "junk"
    data.mkdir()
    (data / "broken.png").write_bytes(b"not a png at all")
    res = run_export(
        "--model", golden_set["model"], "--data", data, "--type", "novel",
        "--resize", "16x12", "--channels", 3, "--classes", 10, "--out", tmp_path / "x.csv",
    )
    assert res.returncode == 1
    assert "cannot decode" in res.stderr


def test_known_type_without_labels_fails(golden_set, run_export, tmp_path, write_png):
    data = tmp_path / "flat"
    data.mkdir()
    write_png(data / "a.png", np.zeros((4, 4, 3), dtype=np.uint8))
    res = run_export(
        "--model", golden_set["model"], "--data", data, "--type", "clean",
        "--resize", "16x12", "--channels", 3, "--classes", 10, "--out", tmp_path / "x.csv",
    )
    assert res.returncode == 1
    assert "labels" in res.stderr


def test_empty_directory_fails(golden_set, run_export, tmp_path):
    data = tmp_path / "empty"
    data.mkdir()
    res = run_export(
        "--model", golden_set["model"], "--data", data, "--type", "novel",
        "--resize", "16x12", "--channels", 3, "--classes", 10, "--out", tmp_path / "x.csv",
    )
    assert res.returncode == 1
    assert "no images found" in res.stderr


def test_bad_resize_flag_fails(golden_set, export_args, run_export, tmp_path):
    res = run_export(*export_args(tmp_path / "x.csv", resize="16x12x3"))
    assert res.returncode == 1
    assert "HxW" in res.stderr


def test_sidecar_rejects_bad_rows(golden_set, run_export, tmp_path, write_png):
    data = tmp_path / "flat"
    data.mkdir()
    write_png(data / "a.png", np.zeros((4, 4, 3), dtype=np.uint8))
    cases = [
        ("a.png,12\n", "out of range"),
        ("a.png,x\n", "not an integer"),
        ("missing.png,1\n", "no such image"),
        ("a.png\n", "expected 'path,label'"),
    ]
    for text, msg in cases:
        (data / "labels.csv").write_text(text, encoding="utf-8")
        res = run_export(
            "--model", golden_set["model"], "--data", data, "--type", "clean",
            "--resize", "16x12", "--channels", 3, "--classes", 10,
            "--out", tmp_path / "x.csv",
        )
        assert res.returncode == 1, text
        assert msg in res.stderr


def test_job_validation():
    good = dict(
        model_ref="m.npz", data_dir="d", data_type="clean", resize=(8, 8),
        channels=3, num_classes=10, out_path="o.csv",
    )
    ExportJob(**good)
    for field, value in [
        ("data_type", "ood"), ("resize", (0, 8)), ("channels", 2),
        ("num_classes", 1), ("batch_size", 0), ("attack_budget", 0.0),
    ]:
        with pytest.raises(ValueError):
            ExportJob(**{**good, field: value})


def test_export_logits_api_summary(golden_set, tmp_path):
    out = tmp_path / "api.csv"
    job = ExportJob(
        model_ref=str(golden_set["model"]), data_dir=str(golden_set["data"]),
        data_type="clean", resize=(16, 12), channels=3, num_classes=10,
        out_path=str(out),
    )
    summary = export_logits(job)
    assert summary["count"] == 10
    assert summary["correct"] is not None
    assert summary["accuracy"] == 100.0 * summary["correct"] / 10
    assert Path(summary["fragment_path"]).exists()


def test_adapter_never_imports_the_engine():
    src = Path(__file__).parent.parent / "src" / "robeval_exporter"
    pattern = re.compile(r"^\s*(?:import|from)\s+robeval\b", re.MULTILINE)
    for path in sorted(src.rglob("*.py")):
        assert not pattern.search(path.read_text(encoding="utf-8")), path
