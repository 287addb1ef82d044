"""Self-contained synthetic benchmark.

A fixed random linear classifier over Gaussian class clusters stands in
for a trained network, so the full pipeline (calibrate, evaluate,
report) runs end to end with no ML framework:

* clean: cluster samples;
* corrupt: cluster samples plus additive noise, two severities;
* adversarial: cluster samples nudged past the decision boundary by a
  fixed-step sign-gradient (linf) or normalized-gradient (l2) step on
  the linear score, two budgets recorded as attack metadata;
* novel: samples from held-out cluster centers, label -1;
* unrecognisable: isotropic noise far from every cluster, label -1.

Everything is keyed off one master seed via the same Philox scheme the
image generators use, with a fixed stream role per dataset, so adding a
dataset never shifts another one's draws.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .datamodel import DataType, LogitRecord, write_logits
from .imagegen import stream

CENTER_SCALE = 3.0
W_SCALE = 0.03  # keeps clean softmax away from saturation
NOISE_MILD = 1.5
NOISE_HEAVY = 3.0
ADV_EPS_LINF = 2.0
ADV_EPS_L2 = 12.0
FAR_SCALE = 6.0

_ROLES = {
    "centers": 0,
    "clean": 1,
    "corrupt-mild": 2,
    "corrupt-heavy": 3,
    "adv-linf": 4,
    "adv-l2": 5,
    "novel": 6,
    "unrecognisable": 7,
}

TYPE_KEYS = tuple(t.value for t in DataType)


def _records(name: str, labels, logits) -> list[LogitRecord]:
    return [
        LogitRecord(f"{name}-{i:06d}", int(label), row)
        for i, (label, row) in enumerate(zip(labels, logits))
    ]


def _cluster(rng, centers, num_classes: int, count: int):
    y = rng.integers(0, num_classes, count)
    x = centers[y] + rng.normal(0.0, 1.0, (count, centers.shape[1]))
    return y, x


def _adversarial(rng, centers, w, num_classes: int, count: int, norm: str, eps: float):
    """Push each sample against the gradient of (top logit - runner-up)."""
    y, x = _cluster(rng, centers, num_classes, count)
    z = x @ w.T
    order = np.argsort(z, axis=1)
    top = order[:, -1]
    runner = np.where(top == y, order[:, -2], top)
    g = w[y] - w[runner]
    if norm == "linf":
        x = x - eps * np.sign(g)
    else:
        x = x - eps * g / np.linalg.norm(g, axis=1, keepdims=True)
    return y, x


def build_fixture(
    out_dir: str,
    seed: int = 0,
    n: int = 200,
    n_train_free: int = 4,
    num_classes: int = 10,
    dim: int = 16,
    per_type: dict[str, int] | None = None,
) -> str:
    """Write logit files and a manifest under out_dir; returns the
    manifest path.

    per_type overrides the sample count for single data types; a zero
    count drops that type from the manifest (corrupt and adversarial
    each emit two datasets of the given count).
    """
    if n < 0 or num_classes < 2 or dim < 1 or n_train_free < 1:
        raise ValueError("fixture parameters out of range")
    counts = {key: n for key in TYPE_KEYS}
    for key, value in (per_type or {}).items():
        if key not in counts:
            raise ValueError(f"unknown data type {key!r}")
        if value < 0:
            raise ValueError(f"negative count for {key!r}")
        counts[key] = value
    if counts["clean"] == 0:
        raise ValueError("the clean calibration dataset cannot be omitted")

    os.makedirs(out_dir, exist_ok=True)
    centers = stream(seed, _ROLES["centers"]).normal(
        0.0, 1.0, (num_classes + n_train_free, dim)
    ) * CENTER_SCALE
    w = centers[:num_classes] * W_SCALE

    datasets = []

    def emit(name: str, type_tag: str, labels, logits, budget: float | None = None):
        path = os.path.join(out_dir, f"{name}.csv")
        write_logits(path, _records(name, labels, logits), num_classes)
        entry = {"name": name, "type": type_tag, "path": f"{name}.csv"}
        if budget is not None:
            entry["attack_budget"] = budget
        datasets.append(entry)

    if counts["clean"]:
        y, x = _cluster(stream(seed, _ROLES["clean"]), centers, num_classes, counts["clean"])
        emit("clean", "clean", y, x @ w.T)

    if counts["corrupt"]:
        for name, sigma in (("corrupt-mild", NOISE_MILD), ("corrupt-heavy", NOISE_HEAVY)):
            rng = stream(seed, _ROLES[name])
            y, x = _cluster(rng, centers, num_classes, counts["corrupt"])
            x = x + rng.normal(0.0, sigma, x.shape)
            emit(name, "corrupt", y, x @ w.T)

    if counts["adversarial"]:
        for name, norm, eps in (("adv-linf", "linf", ADV_EPS_LINF), ("adv-l2", "l2", ADV_EPS_L2)):
            y, x = _adversarial(
                stream(seed, _ROLES[name]), centers, w, num_classes, counts["adversarial"], norm, eps
            )
            emit(name, "adversarial", y, x @ w.T, budget=eps)

    if counts["novel"]:
        rng = stream(seed, _ROLES["novel"])
        held_out = centers[num_classes:]
        pick = rng.integers(0, n_train_free, counts["novel"])
        x = held_out[pick] + rng.normal(0.0, 1.0, (counts["novel"], dim))
        emit("novel", "novel", np.full(counts["novel"], -1), x @ w.T)

    if counts["unrecognisable"]:
        rng = stream(seed, _ROLES["unrecognisable"])
        x = rng.normal(0.0, FAR_SCALE, (counts["unrecognisable"], dim))
        emit("unrecognisable", "unrecognisable", np.full(counts["unrecognisable"], -1), x @ w.T)

    manifest = {
        "num_classes": num_classes,
        "calibration_dataset": "clean",
        "datasets": datasets,
        "trial_id": f"seed{seed}",
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest_path
