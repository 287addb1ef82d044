"""Shared fixtures: dataset/manifest builders and a CLI runner."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from robeval import LogitRecord, write_logits


@pytest.fixture
def make_records():
    def build(name, labels, logits):
        logits = np.asarray(logits, dtype=np.float64)
        return [
            LogitRecord(f"{name}-{i:04d}", int(lab), row)
            for i, (lab, row) in enumerate(zip(labels, logits))
        ]

    return build


@pytest.fixture
def make_dataset(make_records):
    """Write one logit CSV; returns the manifest entry for it."""

    def build(dirpath, name, type_tag, labels, logits, num_classes):
        path = dirpath / f"{name}.csv"
        write_logits(str(path), make_records(name, labels, logits), num_classes)
        return {"name": name, "type": type_tag, "path": f"{name}.csv"}

    return build


@pytest.fixture
def make_manifest():
    def build(dirpath, num_classes, calibration, entries, trial_id=None):
        doc = {
            "num_classes": num_classes,
            "calibration_dataset": calibration,
            "datasets": entries,
        }
        if trial_id is not None:
            doc["trial_id"] = trial_id
        path = dirpath / "manifest.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        return str(path)

    return build


@pytest.fixture
def make_benchmark(make_dataset, make_manifest):
    """A coherent five-type benchmark with well-separated confidence bands.

    Clean samples get a strong correct logit, corrupt a weaker one,
    adversarial a strong wrong one; the unknown types sit at low margin.
    """

    def build(dirpath, seed=0, n=40, num_classes=6, trial_id=None, extra_corrupt=False):
        rng = np.random.default_rng(seed)

        def clustered(labels, margin, noise):
            z = rng.normal(0.0, noise, (len(labels), num_classes))
            z[np.arange(len(labels)), labels] += margin
            return z

        entries = []
        y = rng.integers(0, num_classes, n)
        entries.append(make_dataset(dirpath, "clean", "clean", y, clustered(y, 4.0, 0.5), num_classes))
        y = rng.integers(0, num_classes, n)
        entries.append(
            make_dataset(dirpath, "corrupt", "corrupt", y, clustered(y, 2.0, 1.5), num_classes)
        )
        if extra_corrupt:
            y = rng.integers(0, num_classes, n // 2)
            entries.append(
                make_dataset(dirpath, "corrupt2", "corrupt", y, clustered(y, 1.0, 2.0), num_classes)
            )
        y = rng.integers(0, num_classes, n)
        entries.append(
            make_dataset(
                dirpath, "adv", "adversarial", y, clustered((y + 1) % num_classes, 3.0, 1.0), num_classes
            )
        )
        unk = np.full(n, -1)
        entries.append(
            make_dataset(dirpath, "novel", "novel", unk, rng.normal(0.0, 1.0, (n, num_classes)), num_classes)
        )
        entries.append(
            make_dataset(
                dirpath, "unrec", "unrecognisable", unk, rng.normal(0.0, 0.3, (n, num_classes)), num_classes
            )
        )
        return make_manifest(dirpath, num_classes, "clean", entries, trial_id=trial_id)

    return build


@pytest.fixture
def run_cli():
    def run(*args, env=None):
        full_env = dict(os.environ)
        if env:
            full_env.update(env)
        return subprocess.run(
            [sys.executable, "-m", "robeval", *map(str, args)],
            capture_output=True,
            text=True,
            env=full_env,
        )

    return run
