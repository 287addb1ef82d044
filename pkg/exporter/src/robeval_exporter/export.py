"""Export job: walk an image directory, run the model, write logits.

The output file is the engine's wire format: a header row
``id,label,logit_0,...`` followed by one CSV row per image with logits
printed at full float64 precision. A manifest fragment (JSON object with
``name``, ``type``, ``path`` and optionally ``attack_budget``) is written
next to it, ready to be pasted into a benchmark manifest's dataset list.

Labels come from the directory layout (one integer-named subdirectory
per class) or from a ``labels.csv`` sidecar of ``relative_path,label``
lines, whose order then fixes the output order. Jobs tagged with an
unknown data type (novel, unrecognisable) take no labels at all; every
row is written with label -1.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .models import load_model
from .preprocess import prepare

KNOWN_TYPES = ("clean", "corrupt", "adversarial")
UNKNOWN_TYPES = ("novel", "unrecognisable")
TYPE_TAGS = KNOWN_TYPES + UNKNOWN_TYPES

FLOAT_FMT = "{:.16e}"
SIDECAR_NAME = "labels.csv"


@dataclass(frozen=True)
class ExportJob:
    model_ref: str
    data_dir: str
    data_type: str
    resize: tuple[int, int]
    channels: int
    num_classes: int
    out_path: str
    batch_size: int = 64
    name: str | None = None
    attack_budget: float | None = None

    def __post_init__(self):
        if self.data_type not in TYPE_TAGS:
            raise ValueError(
                f"data type must be one of {', '.join(TYPE_TAGS)}, got {self.data_type!r}"
            )
        h, w = self.resize
        if h < 1 or w < 1:
            raise ValueError("target resolution must be >= 1 in both dimensions")
        if self.channels not in (1, 3):
            raise ValueError("channels must be 1 or 3")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.attack_budget is not None and not self.attack_budget > 0.0:
            raise ValueError("attack_budget must be positive")

    @property
    def is_known(self) -> bool:
        return self.data_type in KNOWN_TYPES


def _sample_id(relpath: str) -> str:
    sid = os.path.splitext(relpath)[0].replace(os.sep, "/")
    if not sid or "," in sid or "\n" in sid or "\r" in sid:
        raise ValueError(f"file name {relpath!r} cannot be used as a sample id")
    return sid


def _from_sidecar(data_dir: str, sidecar: str, num_classes: int):
    items = []
    with open(sidecar, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            relpath, sep, label_text = line.partition(",")
            if not sep:
                raise ValueError(f"{sidecar}:{lineno}: expected 'path,label'")
            try:
                label = int(label_text.strip())
            except ValueError:
                raise ValueError(
                    f"{sidecar}:{lineno}: label {label_text.strip()!r} is not an integer"
                ) from None
            if not 0 <= label < num_classes:
                raise ValueError(
                    f"{sidecar}:{lineno}: label {label} out of range for {num_classes} classes"
                )
            path = os.path.join(data_dir, relpath)
            if not os.path.isfile(path):
                raise ValueError(f"{sidecar}:{lineno}: no such image {relpath!r}")
            items.append((path, _sample_id(relpath), label))
    return items


def _from_class_dirs(data_dir: str, num_classes: int):
    entries = sorted(os.listdir(data_dir))
    class_dirs = []
    for entry in entries:
        full = os.path.join(data_dir, entry)
        if os.path.isdir(full):
            if not entry.isdigit():
                raise ValueError(
                    f"subdirectory {entry!r} of {data_dir} is not an integer class label"
                )
            class_dirs.append((int(entry), entry, full))
        elif entry.lower().endswith(".png"):
            raise ValueError(
                f"loose image {entry!r} in {data_dir}: known-type jobs need labels "
                f"from class subdirectories or a {SIDECAR_NAME} sidecar"
            )
    items = []
    for label, entry, full in sorted(class_dirs):
        if not 0 <= label < num_classes:
            raise ValueError(f"class directory {entry!r} out of range for {num_classes} classes")
        for fname in sorted(os.listdir(full)):
            if fname.lower().endswith(".png"):
                relpath = os.path.join(entry, fname)
                items.append((os.path.join(full, fname), _sample_id(relpath), label))
    return items


def _all_images(data_dir: str):
    items = []
    for root, dirs, files in os.walk(data_dir):
        dirs.sort()
        for fname in sorted(files):
            if fname.lower().endswith(".png"):
                full = os.path.join(root, fname)
                relpath = os.path.relpath(full, data_dir)
                items.append((full, _sample_id(relpath), -1))
    return items


def discover_images(data_dir: str, data_type: str, num_classes: int):
    """List (path, sample_id, label) triples for one job, in output order.

    Unknown-type jobs scan recursively and label everything -1. Known
    types take the sidecar if present, else integer class directories.
    """
    if not os.path.isdir(data_dir):
        raise ValueError(f"no such data directory {data_dir}")
    if data_type not in KNOWN_TYPES:
        items = _all_images(data_dir)
    else:
        sidecar = os.path.join(data_dir, SIDECAR_NAME)
        if os.path.isfile(sidecar):
            items = _from_sidecar(data_dir, sidecar, num_classes)
        else:
            items = _from_class_dirs(data_dir, num_classes)
    seen = set()
    for _, sid, _ in items:
        if sid in seen:
            raise ValueError(f"duplicate sample id {sid!r}")
        seen.add(sid)
    return items


def _batches(seq, size):
    for start in range(0, len(seq), size):
        yield seq[start : start + size]


def export_logits(job: ExportJob) -> dict:
    """Run the full job; returns a summary dict.

    The logit file is produced by a single writer in discovery order.
    With a checkpoint model the output is byte-identical for any batch
    size; a user-supplied callable keeps whatever batch sensitivity it
    has.
    """
    forward = load_model(job.model_ref)
    items = discover_images(job.data_dir, job.data_type, job.num_classes)
    if not items:
        raise ValueError(f"no images found under {job.data_dir}")

    header = "id,label," + ",".join(f"logit_{i}" for i in range(job.num_classes))
    correct = 0
    written = 0
    with open(job.out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for chunk in _batches(items, job.batch_size):
            batch = np.stack([prepare(path, job.resize, job.channels) for path, _, _ in chunk])
            logits = np.asarray(forward(batch), dtype=np.float64)
            if logits.shape != (len(chunk), job.num_classes):
                raise ValueError(
                    f"model produced {logits.shape[1]} logits per image, "
                    f"expected {job.num_classes}"
                )
            if not np.all(np.isfinite(logits)):
                raise ValueError("model produced a non-finite logit")
            preds = np.argmax(logits, axis=1)
            for row, (_, sid, label) in enumerate(chunk):
                vals = ",".join(FLOAT_FMT.format(float(v)) for v in logits[row])
                fh.write(f"{sid},{label},{vals}\n")
                written += 1
                if label >= 0 and preds[row] == label:
                    correct += 1

    accuracy = 100.0 * correct / written if job.is_known else None
    fragment = {
        "name": job.name or os.path.basename(os.path.normpath(job.data_dir)),
        "type": job.data_type,
        "path": os.path.basename(job.out_path),
    }
    if job.attack_budget is not None:
        fragment["attack_budget"] = float(job.attack_budget)
    fragment_path = os.path.splitext(job.out_path)[0] + ".fragment.json"
    with open(fragment_path, "w", encoding="utf-8") as fh:
        json.dump(fragment, fh, indent=2)
        fh.write("\n")

    return {
        "count": written,
        "num_classes": job.num_classes,
        "correct": correct if job.is_known else None,
        "accuracy": accuracy,
        "out_path": job.out_path,
        "fragment_path": fragment_path,
        "fragment": fragment,
    }
