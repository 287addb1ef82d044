"""Data model and on-disk formats for the benchmark.

Two artifacts cross the process boundary:

* logit files: UTF-8 CSV with header ``id,label,logit_0,...,logit_{C-1}``,
  one row per sample, ``\\n`` line endings. Floats are written with 17
  significant digits (``{:.16e}``), which both clears the 9-significant-digit
  floor of the format and round-trips float64 exactly.
* manifests: UTF-8 JSON declaring the class count, the calibration dataset
  and every dataset with its data-type tag.

Validation is strict-fail: one bad row aborts the load with a diagnostic
naming the offender. Silently dropping rows would corrupt the detection
accuracy denominators downstream, so nothing is ever skipped.

All types here are immutable after construction and safe to share across
concurrent readers.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from enum import Enum

import numpy as np

WIRE_FLOAT_FMT = "{:.16e}"

SCORE_METHODS = ("msp", "mls", "energy", "gen")
POOLED = "pooled"
MACRO = "macro"
POOLING_MODES = (POOLED, MACRO)


class DataType(Enum):
    """The five data categories. Declaration order is the report order."""

    CLEAN = "clean"
    CORRUPT = "corrupt"
    ADVERSARIAL = "adversarial"
    NOVEL = "novel"
    UNRECOGNISABLE = "unrecognisable"

    @property
    def is_known(self) -> bool:
        return self not in (DataType.NOVEL, DataType.UNRECOGNISABLE)


CANONICAL_ORDER = tuple(DataType)
_TYPE_TAGS = {t.value: t for t in DataType}


@dataclass(frozen=True, eq=False)
class LogitRecord:
    """One sample: identifier, label (-1 marks unknown), raw logits."""

    sample_id: str
    label: int
    logits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.logits, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError(f"sample {self.sample_id!r}: logits must be a non-empty vector")
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"sample {self.sample_id!r}: non-finite logit")
        if self.label < -1:
            raise ValueError(f"sample {self.sample_id!r}: label {self.label} out of range")
        arr.setflags(write=False)
        object.__setattr__(self, "logits", arr)

    def __eq__(self, other):
        return (
            isinstance(other, LogitRecord)
            and self.sample_id == other.sample_id
            and self.label == other.label
            and np.array_equal(self.logits, other.logits)
        )


@dataclass(frozen=True)
class DatasetRef:
    name: str
    data_type: DataType
    path: str
    attack_budget: float | None = None  # informational epsilon for adversarial sets
    sample_count: int | None = None  # filled at load, never trusted from the manifest


@dataclass(frozen=True)
class Manifest:
    num_classes: int
    calibration_dataset: str
    datasets: tuple[DatasetRef, ...]
    trial_id: str | None = None

    def dataset(self, name: str) -> DatasetRef:
        for ref in self.datasets:
            if ref.name == name:
                return ref
        raise KeyError(name)

    @property
    def calibration(self) -> DatasetRef:
        return self.dataset(self.calibration_dataset)

    def types_present(self) -> tuple[DataType, ...]:
        present = {ref.data_type for ref in self.datasets}
        return tuple(t for t in CANONICAL_ORDER if t in present)


@dataclass(frozen=True)
class EvalConfig:
    """Benchmark configuration echoed into every report."""

    score_method: str = "msp"
    accept_rate: float = 0.95
    pooling: str = POOLED
    gen_gamma: float = 0.1
    gen_top_m: int | None = None  # None: min(C, 100), resolved once C is known

    def __post_init__(self):
        if self.score_method not in SCORE_METHODS:
            raise ValueError(f"score_method must be one of {SCORE_METHODS}, got {self.score_method!r}")
        if not 0.0 < self.accept_rate < 1.0:
            raise ValueError("accept_rate must lie strictly between 0 and 1")
        if self.pooling not in POOLING_MODES:
            raise ValueError(f"pooling must be one of {POOLING_MODES}, got {self.pooling!r}")
        if not self.gen_gamma > 0.0:
            raise ValueError("gen_gamma must be positive")
        if self.gen_top_m is not None and self.gen_top_m < 1:
            raise ValueError("gen_top_m must be >= 1")

    def effective_top_m(self, num_classes: int) -> int:
        m = 100 if self.gen_top_m is None else self.gen_top_m
        return min(m, num_classes)


def wire_header(num_classes: int) -> str:
    return "id,label," + ",".join(f"logit_{j}" for j in range(num_classes))


def write_logits(path: str, records, num_classes: int) -> None:
    """Write records in the wire format, preserving order.

    Ids must be nonempty and free of commas and newlines; the format is
    plain comma-split with no quoting.
    """
    seen = set()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(wire_header(num_classes) + "\n")
        for rec in records:
            sid = rec.sample_id
            if not sid or "," in sid or "\n" in sid or "\r" in sid:
                raise ValueError(f"sample id {sid!r} cannot be carried by the wire format")
            if sid in seen:
                raise ValueError(f"duplicate sample id {sid!r}")
            seen.add(sid)
            if rec.logits.size != num_classes:
                raise ValueError(
                    f"sample {sid!r}: {rec.logits.size} logits, expected {num_classes}"
                )
            vals = ",".join(WIRE_FLOAT_FMT.format(float(v)) for v in rec.logits)
            fh.write(f"{sid},{rec.label},{vals}\n")


def load_logits(dataset: DatasetRef, num_classes: int) -> list[LogitRecord]:
    """Load and validate one logit file; order is preserved from the file.

    Every row is checked for width, finiteness and label range. Unknown
    types (novel, unrecognisable) require label -1 throughout; known
    types require labels in [0, C-1].
    """
    want = num_classes + 2
    unknown = not dataset.data_type.is_known
    records: list[LogitRecord] = []
    seen: set[str] = set()
    with open(dataset.path, encoding="utf-8", newline="") as fh:
        header = fh.readline()
        if not header:
            raise ValueError(f"dataset {dataset.name!r}: empty logit file {dataset.path}")
        if header.rstrip("\n") != wire_header(num_classes):
            raise ValueError(
                f"dataset {dataset.name!r}: bad header for {num_classes} classes: {header.rstrip()!r}"
            )
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            fields = line.split(",")
            if len(fields) != want:
                raise ValueError(
                    f"dataset {dataset.name!r} line {lineno}: "
                    f"expected {want} columns, got {len(fields)}"
                )
            sid = fields[0]
            if sid in seen:
                raise ValueError(f"dataset {dataset.name!r}: duplicate sample id {sid!r}")
            seen.add(sid)
            try:
                label = int(fields[1])
            except ValueError:
                raise ValueError(
                    f"dataset {dataset.name!r} sample {sid!r}: bad label {fields[1]!r}"
                ) from None
            try:
                vals = np.array(fields[2:], dtype=np.float64)
            except ValueError:
                raise ValueError(
                    f"dataset {dataset.name!r} sample {sid!r}: unparseable logit"
                ) from None
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"dataset {dataset.name!r} sample {sid!r}: non-finite logit")
            if unknown:
                if label != -1:
                    raise ValueError(
                        f"dataset {dataset.name!r} sample {sid!r}: "
                        f"unknown-type dataset contains known label {label}"
                    )
            elif not 0 <= label < num_classes:
                raise ValueError(
                    f"dataset {dataset.name!r} sample {sid!r}: label {label} out of range "
                    f"for {num_classes} classes"
                )
            records.append(LogitRecord(sid, label, vals))
    if not records:
        raise ValueError(f"dataset {dataset.name!r}: no samples in {dataset.path}")
    return records


def _manifest_error(path, msg):
    return ValueError(f"manifest {path}: {msg}")


def load_manifest(path: str) -> Manifest:
    """Parse and validate a manifest; referenced logit files must exist.

    Row-level label checks happen later, when a dataset is actually
    loaded; this call is cheap even for large benchmarks.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise _manifest_error(path, f"not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise _manifest_error(path, "top level must be a JSON object")
    allowed = {"num_classes", "calibration_dataset", "datasets", "trial_id"}
    extra = set(raw) - allowed
    if extra:
        raise _manifest_error(path, f"unknown field {sorted(extra)[0]!r}")
    for field in ("num_classes", "calibration_dataset", "datasets"):
        if field not in raw:
            raise _manifest_error(path, f"missing field {field!r}")

    num_classes = raw["num_classes"]
    if not isinstance(num_classes, int) or isinstance(num_classes, bool) or num_classes < 2:
        raise _manifest_error(path, f"num_classes must be an integer >= 2, got {num_classes!r}")
    cal_name = raw["calibration_dataset"]
    if not isinstance(cal_name, str) or not cal_name:
        raise _manifest_error(path, "calibration_dataset must be a nonempty string")
    trial_id = raw.get("trial_id")
    if trial_id is not None and not isinstance(trial_id, str):
        raise _manifest_error(path, "trial_id must be a string")
    entries = raw["datasets"]
    if not isinstance(entries, list) or not entries:
        raise _manifest_error(path, "datasets must be a non-empty list")

    base = os.path.dirname(os.path.abspath(path))
    refs = []
    names = set()
    for i, entry in enumerate(entries):
        where = f"datasets[{i}]"
        if not isinstance(entry, dict):
            raise _manifest_error(path, f"{where} must be an object")
        extra = set(entry) - {"name", "type", "path", "attack_budget"}
        if extra:
            raise _manifest_error(path, f"{where}: unknown field {sorted(extra)[0]!r}")
        for field in ("name", "type", "path"):
            if field not in entry:
                raise _manifest_error(path, f"{where}: missing field {field!r}")
        name = entry["name"]
        if not isinstance(name, str) or not name:
            raise _manifest_error(path, f"{where}: name must be a nonempty string")
        if name in names:
            raise _manifest_error(path, f"duplicate dataset name {name!r}")
        names.add(name)
        tag = entry["type"]
        if tag not in _TYPE_TAGS:
            raise _manifest_error(
                path, f"dataset {name!r}: type must be one of {sorted(_TYPE_TAGS)}, got {tag!r}"
            )
        rel = entry["path"]
        if not isinstance(rel, str) or not rel:
            raise _manifest_error(path, f"dataset {name!r}: path must be a nonempty string")
        full = rel if os.path.isabs(rel) else os.path.join(base, rel)
        if not os.path.isfile(full):
            raise _manifest_error(path, f"dataset {name!r}: missing logit file {full}")
        budget = entry.get("attack_budget")
        if budget is not None:
            if not isinstance(budget, (int, float)) or isinstance(budget, bool):
                raise _manifest_error(path, f"dataset {name!r}: attack_budget must be a number")
            budget = float(budget)
        refs.append(DatasetRef(name=name, data_type=_TYPE_TAGS[tag], path=full, attack_budget=budget))

    if cal_name not in names:
        raise _manifest_error(path, f"calibration_dataset {cal_name!r} is not among the datasets")
    cal_ref = next(r for r in refs if r.name == cal_name)
    if cal_ref.data_type is not DataType.CLEAN:
        raise _manifest_error(
            path, f"calibration dataset {cal_name!r} must be clean, is {cal_ref.data_type.value}"
        )
    return Manifest(
        num_classes=num_classes,
        calibration_dataset=cal_name,
        datasets=tuple(refs),
        trial_id=trial_id,
    )
