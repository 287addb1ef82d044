"""Fixed-threshold rejection benchmark over five data types.

Calibrate one rejection threshold on clean data, apply it unchanged to
clean, corrupt, adversarial, novel and unrecognisable test sets, and
report the per-type detection accuracy rate and its cross-type mean.
"""

from .datamodel import (
    DataType,
    DatasetRef,
    EvalConfig,
    LogitRecord,
    Manifest,
    load_logits,
    load_manifest,
    write_logits,
)
from .bench import BenchmarkReport, aggregate_trials, evaluate, render_report

__version__ = "0.1.0"

__all__ = [
    "BenchmarkReport",
    "DataType",
    "DatasetRef",
    "EvalConfig",
    "LogitRecord",
    "Manifest",
    "aggregate_trials",
    "evaluate",
    "load_logits",
    "load_manifest",
    "render_report",
    "write_logits",
]
