import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

GOLDEN = Path(__file__).parent / "golden"

# Golden export set: two classes, five 20x14 color images each, and a
# matching linear model over 16x12x3 features. Everything is seeded so
# tests agree on the exact logits.
IMG_SHAPE = (20, 14, 3)
RESIZE = (16, 12)
CHANNELS = 3
NUM_CLASSES = 10
FEATURES = RESIZE[0] * RESIZE[1] * CHANNELS


def _write_png(path: Path, arr: np.ndarray) -> None:
    if arr.ndim == 3 and arr.shape[2] == 1:
        Image.fromarray(arr[:, :, 0], mode="L").save(path, format="PNG")
    else:
        Image.fromarray(arr, mode="RGB").save(path, format="PNG")


@pytest.fixture(scope="session")
def golden_set(tmp_path_factory):
    """Ten labelled images in class-directory layout plus a model file."""
    root = tmp_path_factory.mktemp("golden_set")
    data = root / "images"
    rng = np.random.default_rng(11)
    for label in (0, 1):
        d = data / str(label)
        d.mkdir(parents=True)
        for i in range(5):
            arr = rng.integers(0, 256, size=IMG_SHAPE).astype(np.uint8)
            _write_png(d / f"im{i}.png", arr)
    weights = rng.normal(scale=0.2, size=(FEATURES, NUM_CLASSES))
    bias = rng.normal(size=NUM_CLASSES)
    model = root / "model.npz"
    np.savez(model, W=weights, b=bias)
    return {"data": data, "model": model, "root": root}


@pytest.fixture
def write_png():
    return _write_png


@pytest.fixture
def run_export():
    def run(*args, env=None, cwd=None):
        full_env = dict(os.environ)
        if env:
            full_env.update(env)
        return subprocess.run(
            [sys.executable, "-m", "robeval_exporter", "export", *map(str, args)],
            capture_output=True,
            text=True,
            env=full_env,
            cwd=cwd,
        )

    return run


@pytest.fixture
def run_engine():
    def run(*args, cwd=None):
        return subprocess.run(
            [sys.executable, "-m", "robeval", *map(str, args)],
            capture_output=True,
            text=True,
            cwd=cwd,
        )

    return run


@pytest.fixture
def export_args(golden_set):
    """Shared flag block for jobs over the golden set."""

    def args(out, **over):
        base = {
            "--model": golden_set["model"],
            "--data": golden_set["data"],
            "--type": "clean",
            "--resize": f"{RESIZE[0]}x{RESIZE[1]}",
            "--channels": CHANNELS,
            "--classes": NUM_CLASSES,
            "--out": out,
        }
        for key, val in over.items():
            base["--" + key.replace("_", "-")] = val
        flat = []
        for key, val in base.items():
            flat.extend([key, val])
        return flat

    return args


@pytest.fixture
def read_rows():
    """Parse a wire-format logit file into (ids, labels, logits)."""

    def read(path):
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = lines[0].split(",")
        assert header[:2] == ["id", "label"]
        width = len(header) - 2
        ids, labels, rows = [], [], []
        for line in lines[1:]:
            parts = line.split(",")
            ids.append(parts[0])
            labels.append(int(parts[1]))
            vals = [float(v) for v in parts[2:]]
            assert len(vals) == width
            rows.append(vals)
        return ids, labels, np.array(rows)

    return read


@pytest.fixture
def load_json():
    def load(path):
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    return load
