"""End-to-end command-line behavior via subprocesses."""

import json

from robeval import bench


def parse_kv(stdout):
    out = {}
    for line in stdout.splitlines():
        key, _, val = line.partition("=")
        out[key] = val
    return out


def test_synth_fixture_then_evaluate(tmp_path, run_cli):
    fix = tmp_path / "fix"
    r = run_cli("synth-fixture", "--out", fix, "--seed", "1", "--n", "60")
    assert r.returncode == 0, r.stderr
    assert f"wrote {fix / 'manifest.json'}" in r.stdout

    report_path = tmp_path / "report.csv"
    r = run_cli("evaluate", fix / "manifest.json", "--legacy", "--out", report_path)
    assert r.returncode == 0, r.stderr
    assert "| DAR |" in r.stdout  # readable table on stdout
    report = bench.parse_report(report_path.read_text(encoding="utf-8"))
    assert len(report.results) == 5
    assert report.trial_id == "seed1"


def test_evaluate_markdown_out(tmp_path, run_cli):
    fix = tmp_path / "fix"
    assert run_cli("synth-fixture", "--out", fix, "--n", "40").returncode == 0
    out = tmp_path / "report.md"
    r = run_cli("evaluate", fix / "manifest.json", "--format", "markdown", "--out", out)
    assert r.returncode == 0
    assert out.read_text(encoding="utf-8").startswith("# Benchmark report")


def test_evaluate_is_deterministic(tmp_path, run_cli):
    fix = tmp_path / "fix"
    assert run_cli("synth-fixture", "--out", fix, "--n", "60").returncode == 0
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli("evaluate", fix / "manifest.json", "--legacy", "--out", a).returncode == 0
    assert run_cli("evaluate", fix / "manifest.json", "--legacy", "--out", b,
                   env={"ROBEVAL_THREADS": "1"}).returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_calibrate_output(tmp_path, run_cli):
    fix = tmp_path / "fix"
    assert run_cli("synth-fixture", "--out", fix, "--n", "50").returncode == 0
    r = run_cli("calibrate", fix / "manifest.json")
    assert r.returncode == 0
    kv = parse_kv(r.stdout)
    assert set(kv) == {"threshold", "n_calibration", "target_accept_rate", "achieved_accept_rate"}
    assert float(kv["target_accept_rate"]) == 0.95
    assert float(kv["achieved_accept_rate"]) >= 0.95
    assert 0.0 < float(kv["threshold"]) < 1.0  # msp confidence
    assert int(kv["n_calibration"]) <= 50


def test_accept_rate_flag_reaches_calibration(tmp_path, run_cli):
    fix = tmp_path / "fix"
    assert run_cli("synth-fixture", "--out", fix, "--n", "80").returncode == 0
    r95 = parse_kv(run_cli("calibrate", fix / "manifest.json").stdout)
    r99 = parse_kv(run_cli("calibrate", fix / "manifest.json", "--accept-rate", "0.99").stdout)
    assert float(r99["target_accept_rate"]) == 0.99
    assert float(r99["achieved_accept_rate"]) >= 0.99
    # a laxer target can only lower the bar
    assert float(r99["threshold"]) <= float(r95["threshold"])


def test_generate_blobs(tmp_path, run_cli):
    out = tmp_path / "imgs"
    r = run_cli("generate", "--kind", "blobs", "--shape", "8x8x3", "--count", "4",
                "--seed", "5", "--out", out)
    assert r.returncode == 0
    assert "wrote 4 images" in r.stdout
    assert sorted(p.name for p in out.glob("*.png")) == [f"{i:06d}.png" for i in range(4)]
    frag = json.loads((out / "fragment.json").read_text(encoding="utf-8"))
    assert frag["type"] == "unrecognisable" and frag["seed"] == 5


def test_generate_bad_shape(tmp_path, run_cli):
    r = run_cli("generate", "--kind", "blobs", "--shape", "8x8", "--count", "1",
                "--out", tmp_path / "x")
    assert r.returncode == 1
    assert "error:" in r.stderr and "HxWxC" in r.stderr


def test_report_rerender_and_aggregate(tmp_path, run_cli):
    paths = []
    for seed in (3, 4):
        fix = tmp_path / f"fix{seed}"
        assert run_cli("synth-fixture", "--out", fix, "--seed", seed, "--n", "50").returncode == 0
        rep = tmp_path / f"r{seed}.csv"
        assert run_cli("evaluate", fix / "manifest.json", "--out", rep).returncode == 0
        paths.append(rep)

    r = run_cli("report", paths[0])
    assert r.returncode == 0
    assert r.stdout == paths[0].read_text(encoding="utf-8")

    r = run_cli("report", paths[0], "--format", "markdown")
    assert r.returncode == 0 and r.stdout.startswith("# Benchmark report")

    r = run_cli("report", *paths)
    assert r.returncode == 1 and "exactly one report" in r.stderr

    agg_out = tmp_path / "agg.csv"
    r = run_cli("report", *paths, "--aggregate", "--out", agg_out)
    assert r.returncode == 0
    text = agg_out.read_text(encoding="utf-8")
    assert text.startswith("# robeval trial aggregate\n# trials=2\n")

    r = run_cli("report", *paths, "--aggregate", "--format", "markdown")
    assert r.returncode == 0 and "±" in r.stdout


def test_missing_type_fails_without_allow_partial(tmp_path, run_cli):
    fix = tmp_path / "fix"
    assert run_cli("synth-fixture", "--out", fix, "--n", "40", "--n-novel", "0").returncode == 0
    manifest = json.loads((fix / "manifest.json").read_text(encoding="utf-8"))
    assert all(d["type"] != "novel" for d in manifest["datasets"])

    r = run_cli("evaluate", fix / "manifest.json")
    assert r.returncode == 1
    assert "missing data types: novel" in r.stderr

    r = run_cli("evaluate", fix / "manifest.json", "--allow-partial")
    assert r.returncode == 0
    assert "warning: partial report" in r.stderr


def test_errors_exit_one(tmp_path, run_cli):
    r = run_cli("evaluate", tmp_path / "nope.json")
    assert r.returncode == 1 and r.stderr.startswith("error:")
    r = run_cli("synth-fixture", "--out", tmp_path / "f", "--n-clean", "0")
    assert r.returncode == 1 and "clean" in r.stderr


def test_score_flags_change_the_threshold(tmp_path, run_cli):
    fix = tmp_path / "fix"
    assert run_cli("synth-fixture", "--out", fix, "--n", "50").returncode == 0
    msp_t = parse_kv(run_cli("calibrate", fix / "manifest.json", "--score", "msp").stdout)
    mls_t = parse_kv(run_cli("calibrate", fix / "manifest.json", "--score", "mls").stdout)
    assert msp_t["threshold"] != mls_t["threshold"]
    assert float(msp_t["threshold"]) < 1.0  # msp is a probability, mls is not
