"""Benchmark orchestration.

Two-phase contract: the threshold is calibrated once, on the correctly
classified samples of the manifest's calibration dataset, before any
dataset is scored; every dataset is then evaluated against that single
fixed threshold. Dataset passes are independent and may run in
parallel (capped by ROBEVAL_THREADS); results join in manifest order,
so the report never depends on completion order.

Per data type the confusion counts are pooled over all datasets of the
type (or, under macro pooling, the per-dataset DARs are averaged), and
the headline number is the unweighted mean of the per-type DARs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import metrics, scores
from .datamodel import (
    CANONICAL_ORDER,
    MACRO,
    POOLED,
    DatasetRef,
    DataType,
    EvalConfig,
    Manifest,
    load_logits,
)
from .metrics import CalibratedThreshold, ConfusionCounts
from .util import worker_count

FPR_TPR_TARGET = 0.95  # legacy operating point: FPR at 95% TPR

_MD_HEADS = {
    DataType.CLEAN: "Clean",
    DataType.CORRUPT: "Corrupt",
    DataType.ADVERSARIAL: "Adversarial",
    DataType.NOVEL: "Novel",
    DataType.UNRECOGNISABLE: "Unrecog.",
}


@dataclass(frozen=True)
class DatasetResult:
    name: str
    counts: ConfusionCounts
    dar: float


@dataclass(frozen=True)
class TypeResult:
    data_type: DataType
    counts: ConfusionCounts  # elementwise sum over the type's datasets
    dar: float  # pooled DAR, or the macro per-dataset mean
    per_dataset: tuple[DatasetResult, ...]


@dataclass(frozen=True)
class BenchmarkReport:
    threshold: CalibratedThreshold
    config: EvalConfig
    results: tuple[TypeResult, ...]  # canonical type order, present types only
    mean_dar: float
    legacy: dict | None = None
    trial_id: str | None = None

    def result_for(self, data_type: DataType) -> TypeResult | None:
        for tr in self.results:
            if tr.data_type is data_type:
                return tr
        return None


@dataclass(frozen=True)
class TrialAggregate:
    config: EvalConfig
    n_trials: int
    type_dar: tuple[tuple[DataType, float, float | None], ...]
    mean_dar: tuple[float, float | None]
    threshold: tuple[float, float | None]
    per_dataset: tuple[tuple[str, DataType, float, float | None], ...]
    legacy: tuple[tuple[str, str, float, float | None], ...] | None


@dataclass(frozen=True)
class _Table:
    """One loaded dataset, reduced to the arrays evaluation needs."""

    ref: DatasetRef
    conf: np.ndarray
    correct: np.ndarray | None  # None for unknown types


def _load_table(ref: DatasetRef, num_classes: int, config: EvalConfig, top_m: int) -> _Table:
    records = load_logits(ref, num_classes)
    mat = np.stack([r.logits for r in records])
    conf = np.asarray(
        scores.confidence(mat, config.score_method, gamma=config.gen_gamma, top_m=top_m),
        dtype=np.float64,
    )
    correct = None
    if ref.data_type.is_known:
        labels = np.array([r.label for r in records])
        correct = np.asarray(scores.predicted_class(mat)) == labels
    loaded = DatasetRef(
        name=ref.name,
        data_type=ref.data_type,
        path=ref.path,
        attack_budget=ref.attack_budget,
        sample_count=len(records),
    )
    return _Table(ref=loaded, conf=conf, correct=correct)


def counts_from_arrays(conf, correct, threshold_value: float) -> ConfusionCounts:
    """Streaming confusion counts for one dataset; correct=None marks an
    unknown-type dataset. Acceptance is inclusive: conf >= threshold."""
    conf = np.asarray(conf, dtype=np.float64)
    accepted = conf >= threshold_value
    if correct is None:
        fp = int(np.count_nonzero(accepted))
        return ConfusionCounts(tp=0, fp=fp, fn=0, tn=int(accepted.size - fp))
    correct = np.asarray(correct, dtype=bool)
    tp = int(np.count_nonzero(accepted & correct))
    fp = int(np.count_nonzero(accepted & ~correct))
    fn = int(np.count_nonzero(~accepted & correct))
    tn = int(accepted.size - tp - fp - fn)
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def mean_dar(results) -> float:
    """Unweighted mean over the per-type DARs present."""
    results = list(results)
    if not results:
        raise ValueError("no type results to average")
    return float(np.mean([tr.dar for tr in results]))


def _load_tables(manifest: Manifest, config: EvalConfig) -> list[_Table]:
    top_m = config.effective_top_m(manifest.num_classes)
    refs = manifest.datasets
    workers = worker_count(len(refs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda r: _load_table(r, manifest.num_classes, config, top_m), refs))
    return [_load_table(r, manifest.num_classes, config, top_m) for r in refs]


def _calibrate_from_table(cal: _Table, config: EvalConfig) -> CalibratedThreshold:
    return metrics.calibrate_threshold(cal.conf[cal.correct], config.accept_rate)


def calibrate(manifest: Manifest, config: EvalConfig) -> CalibratedThreshold:
    """Calibration only: load just the clean calibration dataset."""
    top_m = config.effective_top_m(manifest.num_classes)
    cal = _load_table(manifest.calibration, manifest.num_classes, config, top_m)
    return _calibrate_from_table(cal, config)


def evaluate(
    manifest: Manifest,
    config: EvalConfig = EvalConfig(),
    *,
    legacy: bool = False,
    allow_partial: bool = False,
    warn=None,
) -> BenchmarkReport:
    """Run the full benchmark for one manifest.

    A full report requires all five data types; with allow_partial a
    subset is accepted and the mean covers the present types only.
    """
    tables = _load_tables(manifest, config)
    by_name = {t.ref.name: t for t in tables}
    threshold = _calibrate_from_table(by_name[manifest.calibration_dataset], config)

    missing = [t for t in CANONICAL_ORDER if t not in manifest.types_present()]
    if missing:
        what = ", ".join(t.value for t in missing)
        if not allow_partial:
            raise ValueError(
                f"missing data types: {what}; a full report needs all five "
                f"(pass allow_partial for a partial report)"
            )
        if warn is not None:
            warn(f"partial report: missing {what}; mean covers present types only")

    results = []
    for data_type in manifest.types_present():
        per_ds = []
        for table in tables:
            if table.ref.data_type is not data_type:
                continue
            counts = counts_from_arrays(table.conf, table.correct, threshold.value)
            per_ds.append(DatasetResult(name=table.ref.name, counts=counts, dar=metrics.dar(counts)))
        pooled = per_ds[0].counts
        for ds in per_ds[1:]:
            pooled = pooled + ds.counts
        if config.pooling == POOLED:
            type_dar = metrics.dar(pooled)
        else:
            type_dar = float(np.mean([ds.dar for ds in per_ds]))
        results.append(
            TypeResult(data_type=data_type, counts=pooled, dar=type_dar, per_dataset=tuple(per_ds))
        )

    legacy_map = _legacy_metrics(tables, manifest) if legacy else None
    return BenchmarkReport(
        threshold=threshold,
        config=config,
        results=tuple(results),
        mean_dar=mean_dar(results),
        legacy=legacy_map,
        trial_id=manifest.trial_id,
    )


def _legacy_metrics(tables: list[_Table], manifest: Manifest) -> dict:
    """AUROC/AUPR/FPR@TPR of the clean calibration set versus each unknown
    dataset, plus plain accuracy for every known dataset."""
    cal = next(t for t in tables if t.ref.name == manifest.calibration_dataset)
    plain = {}
    vs_unknown = {}
    for t in tables:
        if t.correct is not None:
            plain[t.ref.name] = 100.0 * int(np.count_nonzero(t.correct)) / t.correct.size
        else:
            vs_unknown[t.ref.name] = {
                "auroc": metrics.auroc(cal.conf, t.conf),
                "aupr": metrics.aupr(cal.conf, t.conf),
                "fpr_at_tpr": metrics.fpr_at_tpr(cal.conf, t.conf, FPR_TPR_TARGET),
            }
    return {
        "plain_accuracy": plain,
        "vs_unknown": vs_unknown,
        "fpr_tpr_target": FPR_TPR_TARGET,
    }


def aggregate_trials(reports) -> TrialAggregate:
    """Per-cell mean and sample std (n-1) across trial reports.

    Reports must agree on config, data types, dataset names/types and
    legacy presence; trial ids are expected to differ.
    """
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    first = reports[0]
    shape = [(tr.data_type, tuple(ds.name for ds in tr.per_dataset)) for tr in first.results]
    for r in reports[1:]:
        if r.config != first.config:
            raise ValueError("trial reports disagree on config")
        if [(tr.data_type, tuple(ds.name for ds in tr.per_dataset)) for tr in r.results] != shape:
            raise ValueError("trial reports disagree on dataset structure")
        if (r.legacy is None) != (first.legacy is None):
            raise ValueError("trial reports disagree on legacy metrics")

    n = len(reports)

    def stats(values) -> tuple[float, float | None]:
        arr = np.asarray(values, dtype=np.float64)
        std = float(np.std(arr, ddof=1)) if n >= 2 else None
        return float(arr.mean()), std

    type_dar = tuple(
        (dt, *stats([r.results[i].dar for r in reports]))
        for i, (dt, _) in enumerate(shape)
    )
    per_dataset = []
    for i, (dt, names) in enumerate(shape):
        for j, name in enumerate(names):
            per_dataset.append((name, dt, *stats([r.results[i].per_dataset[j].dar for r in reports])))

    legacy = None
    if first.legacy is not None:
        cells = []
        for name in first.legacy["plain_accuracy"]:
            cells.append((name, "plain_accuracy", *stats([r.legacy["plain_accuracy"][name] for r in reports])))
        for name in first.legacy["vs_unknown"]:
            for metric in ("auroc", "aupr", "fpr_at_tpr"):
                cells.append((name, metric, *stats([r.legacy["vs_unknown"][name][metric] for r in reports])))
        legacy = tuple(cells)

    return TrialAggregate(
        config=first.config,
        n_trials=n,
        type_dar=type_dar,
        mean_dar=stats([r.mean_dar for r in reports]),
        threshold=stats([r.threshold.value for r in reports]),
        per_dataset=tuple(per_dataset),
        legacy=legacy,
    )


def _disp(v: float) -> str:
    return f"{v:.2f}"


def _exact(v: float) -> str:
    return repr(float(v))


def _config_lines(config: EvalConfig) -> list[str]:
    top_m = "default" if config.gen_top_m is None else str(config.gen_top_m)
    return [
        f"# score={config.score_method}",
        f"# accept_rate={_exact(config.accept_rate)}",
        f"# pooling={config.pooling}",
        f"# gen_gamma={_exact(config.gen_gamma)}",
        f"# gen_top_m={top_m}",
    ]


def _type_cells(report: BenchmarkReport, value_of, fmt) -> list[str]:
    cells = []
    for dt in CANONICAL_ORDER:
        tr = report.result_for(dt)
        cells.append(fmt(value_of(tr)) if tr is not None else "")
    return cells


def _render_csv(report: BenchmarkReport) -> str:
    lines = ["# robeval report"]
    lines += _config_lines(report.config)
    if report.trial_id is not None:
        lines.append(f"# trial_id={report.trial_id}")
    if report.legacy is not None:
        lines.append(f"# fpr_tpr_target={_exact(report.legacy['fpr_tpr_target'])}")
    t = report.threshold
    lines.append(f"# n_calibration={t.n_calibration}")
    lines.append(f"# threshold={_exact(t.value)}")
    lines.append(f"# threshold_achieved={_exact(t.achieved_accept_rate)}")

    type_row = "type," + ",".join(dt.value for dt in CANONICAL_ORDER) + ",mean"
    lines.append("section,dar")
    lines.append(type_row)
    lines.append("display," + ",".join(_type_cells(report, lambda tr: tr.dar, _disp))
                 + "," + _disp(report.mean_dar))
    lines.append("exact," + ",".join(_type_cells(report, lambda tr: tr.dar, _exact))
                 + "," + _exact(report.mean_dar))
    lines.append("section,der")
    lines.append(type_row)
    lines.append("display," + ",".join(_type_cells(report, lambda tr: 100.0 - tr.dar, _disp))
                 + "," + _disp(100.0 - report.mean_dar))
    lines.append("exact," + ",".join(_type_cells(report, lambda tr: 100.0 - tr.dar, _exact))
                 + "," + _exact(100.0 - report.mean_dar))

    lines.append("section,counts")
    lines.append("type,tp,fp,fn,tn")
    for tr in report.results:
        c = tr.counts
        lines.append(f"{tr.data_type.value},{c.tp},{c.fp},{c.fn},{c.tn}")

    lines.append("section,datasets")
    lines.append("name,type,dar,tp,fp,fn,tn")
    for tr in report.results:
        for ds in tr.per_dataset:
            c = ds.counts
            lines.append(
                f"{ds.name},{tr.data_type.value},{_exact(ds.dar)},{c.tp},{c.fp},{c.fn},{c.tn}"
            )

    if report.legacy is not None:
        lines.append("section,legacy")
        lines.append("item,metric,value")
        for name, acc in report.legacy["plain_accuracy"].items():
            lines.append(f"{name},plain_accuracy,{_exact(acc)}")
        for name, vals in report.legacy["vs_unknown"].items():
            for metric in ("auroc", "aupr", "fpr_at_tpr"):
                lines.append(f"{name},{metric},{_exact(vals[metric])}")
    return "\n".join(lines) + "\n"


def _render_markdown(report: BenchmarkReport) -> str:
    cfg = report.config
    t = report.threshold
    out = ["# Benchmark report", ""]
    out.append(
        f"- score: {cfg.score_method}, accept rate: {cfg.accept_rate}, pooling: {cfg.pooling}"
    )
    out.append(
        f"- threshold: {t.value:.6g} "
        f"(n_calibration={t.n_calibration}, achieved accept rate {100.0 * t.achieved_accept_rate:.2f}%)"
    )
    if report.trial_id is not None:
        out.append(f"- trial: {report.trial_id}")
    out.append("")

    heads = [_MD_HEADS[dt] for dt in CANONICAL_ORDER] + ["Mean"]
    out.append("| | " + " | ".join(heads) + " |")
    out.append("|---" + "|---:" * len(heads) + "|")
    dar_cells = _type_cells(report, lambda tr: tr.dar, _disp)
    der_cells = _type_cells(report, lambda tr: 100.0 - tr.dar, _disp)
    out.append("| DAR | " + " | ".join(dar_cells) + f" | {_disp(report.mean_dar)} |")
    out.append("| DER | " + " | ".join(der_cells) + f" | {_disp(100.0 - report.mean_dar)} |")
    out.append("")

    out.append("| dataset | type | DAR | TP | FP | FN | TN |")
    out.append("|---|---|---:|---:|---:|---:|---:|")
    for tr in report.results:
        for ds in tr.per_dataset:
            c = ds.counts
            out.append(
                f"| {ds.name} | {tr.data_type.value} | {_disp(ds.dar)} "
                f"| {c.tp} | {c.fp} | {c.fn} | {c.tn} |"
            )

    if report.legacy is not None:
        out.append("")
        out.append("| dataset | plain accuracy |")
        out.append("|---|---:|")
        for name, acc in report.legacy["plain_accuracy"].items():
            out.append(f"| {name} | {_disp(acc)} |")
        if report.legacy["vs_unknown"]:
            tpr_pct = 100.0 * report.legacy["fpr_tpr_target"]
            out.append("")
            out.append(f"| unknown dataset | AUROC | AUPR | FPR@{tpr_pct:.0f}%TPR |")
            out.append("|---|---:|---:|---:|")
            for name, vals in report.legacy["vs_unknown"].items():
                out.append(
                    f"| {name} | {vals['auroc']:.4f} | {vals['aupr']:.4f} "
                    f"| {vals['fpr_at_tpr']:.4f} |"
                )
    return "\n".join(out) + "\n"


def _agg_pair(fmt, pair) -> list[str]:
    mean, std = pair
    return [fmt(mean), "" if std is None else fmt(std)]


def _render_aggregate_csv(agg: TrialAggregate) -> str:
    lines = ["# robeval trial aggregate", f"# trials={agg.n_trials}"]
    lines += _config_lines(agg.config)

    by_type = {dt: (mean, std) for dt, mean, std in agg.type_dar}
    lines.append("section,dar")
    lines.append("type," + ",".join(dt.value for dt in CANONICAL_ORDER) + ",mean")
    for label, pick, fmt in (
        ("mean_display", 0, _disp),
        ("mean_exact", 0, _exact),
        ("std_display", 1, _disp),
        ("std_exact", 1, _exact),
    ):
        if pick == 1 and agg.n_trials < 2:
            continue  # std undefined for a single trial
        cells = []
        for dt in CANONICAL_ORDER:
            cells.append(fmt(by_type[dt][pick]) if dt in by_type else "")
        cells.append(fmt(agg.mean_dar[pick]))
        lines.append(label + "," + ",".join(cells))

    lines.append("section,threshold")
    lines.append("mean,std")
    lines.append(",".join(_agg_pair(_exact, agg.threshold)))

    lines.append("section,datasets")
    lines.append("name,type,mean,std")
    for name, dt, mean, std in agg.per_dataset:
        lines.append(f"{name},{dt.value}," + ",".join(_agg_pair(_exact, (mean, std))))

    if agg.legacy is not None:
        lines.append("section,legacy")
        lines.append("item,metric,mean,std")
        for name, metric, mean, std in agg.legacy:
            lines.append(f"{name},{metric}," + ",".join(_agg_pair(_exact, (mean, std))))
    return "\n".join(lines) + "\n"


def _pm(mean: float, std: float | None, fmt=_disp) -> str:
    if std is None:
        return fmt(mean)
    return f"{fmt(mean)} ± {fmt(std)}"


def _render_aggregate_markdown(agg: TrialAggregate) -> str:
    cfg = agg.config
    out = ["# Trial aggregate", ""]
    out.append(f"- trials: {agg.n_trials}")
    out.append(f"- score: {cfg.score_method}, accept rate: {cfg.accept_rate}, pooling: {cfg.pooling}")
    tmean, tstd = agg.threshold
    out.append(f"- threshold: {_pm(tmean, tstd, lambda v: f'{v:.6g}')}")
    out.append("")

    by_type = {dt: (mean, std) for dt, mean, std in agg.type_dar}
    heads = [_MD_HEADS[dt] for dt in CANONICAL_ORDER] + ["Mean"]
    out.append("| | " + " | ".join(heads) + " |")
    out.append("|---" + "|---:" * len(heads) + "|")
    cells = [_pm(*by_type[dt]) if dt in by_type else "" for dt in CANONICAL_ORDER]
    cells.append(_pm(*agg.mean_dar))
    out.append("| DAR | " + " | ".join(cells) + " |")
    out.append("")

    out.append("| dataset | type | DAR |")
    out.append("|---|---|---:|")
    for name, dt, mean, std in agg.per_dataset:
        out.append(f"| {name} | {dt.value} | {_pm(mean, std)} |")

    if agg.legacy is not None:
        out.append("")
        out.append("| item | metric | value |")
        out.append("|---|---|---:|")
        for name, metric, mean, std in agg.legacy:
            out.append(f"| {name} | {metric} | {_pm(mean, std, lambda v: f'{v:.4f}')} |")
    return "\n".join(out) + "\n"


def render_report(obj, fmt: str = "csv") -> str:
    """Deterministic text rendering; csv is machine-parseable at full
    precision, markdown is for reading."""
    if fmt not in ("csv", "markdown"):
        raise ValueError(f"format must be csv or markdown, got {fmt!r}")
    if isinstance(obj, BenchmarkReport):
        return _render_csv(obj) if fmt == "csv" else _render_markdown(obj)
    if isinstance(obj, TrialAggregate):
        return _render_aggregate_csv(obj) if fmt == "csv" else _render_aggregate_markdown(obj)
    raise TypeError(f"cannot render {type(obj).__name__}")


def parse_report(text: str) -> BenchmarkReport:
    """Parse a CSV report back into a BenchmarkReport.

    Exact cells carry repr full precision, so a parsed report re-renders
    byte-identically; cmd_report relies on this for trial aggregation.
    """
    header: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][1:].strip()
        if "=" in body:
            key, _, val = body.partition("=")
            header[key] = val
        i += 1
    for key in ("score", "accept_rate", "pooling", "gen_gamma", "gen_top_m",
                "n_calibration", "threshold", "threshold_achieved"):
        if key not in header:
            raise ValueError(f"report is missing header field {key!r}")

    config = EvalConfig(
        score_method=header["score"],
        accept_rate=float(header["accept_rate"]),
        pooling=header["pooling"],
        gen_gamma=float(header["gen_gamma"]),
        gen_top_m=None if header["gen_top_m"] == "default" else int(header["gen_top_m"]),
    )
    threshold = CalibratedThreshold(
        value=float(header["threshold"]),
        accept_rate_target=config.accept_rate,
        achieved_accept_rate=float(header["threshold_achieved"]),
        n_calibration=int(header["n_calibration"]),
    )

    sections: dict[str, list[list[str]]] = {}
    current: list[list[str]] | None = None
    for line in lines[i:]:
        if not line:
            continue
        fields = line.split(",")
        if fields[0] == "section":
            current = sections.setdefault(fields[1], [])
            continue
        if current is None:
            raise ValueError(f"row outside any section: {line!r}")
        current.append(fields)
    for name in ("dar", "counts", "datasets"):
        if name not in sections:
            raise ValueError(f"report is missing section {name!r}")

    tags = [dt.value for dt in CANONICAL_ORDER]
    dar_rows = {row[0]: row[1:] for row in sections["dar"]}
    if dar_rows.get("type") != tags + ["mean"]:
        raise ValueError("unexpected dar column layout")
    exact_cells = dar_rows["exact"]
    type_dar = {
        dt: float(cell) for dt, cell in zip(CANONICAL_ORDER, exact_cells[:-1]) if cell != ""
    }
    mean = float(exact_cells[-1])

    counts_by_type: dict[DataType, ConfusionCounts] = {}
    for row in sections["counts"][1:]:
        dt = DataType(row[0])
        counts_by_type[dt] = ConfusionCounts(*(int(v) for v in row[1:5]))

    per_dataset: dict[DataType, list[DatasetResult]] = {dt: [] for dt in CANONICAL_ORDER}
    for row in sections["datasets"][1:]:
        name, tag, dar_exact = row[0], row[1], row[2]
        counts = ConfusionCounts(*(int(v) for v in row[3:7]))
        per_dataset[DataType(tag)].append(
            DatasetResult(name=name, counts=counts, dar=float(dar_exact))
        )

    results = []
    for dt in CANONICAL_ORDER:
        if dt not in type_dar:
            continue
        if dt not in counts_by_type or not per_dataset[dt]:
            raise ValueError(f"report sections disagree on type {dt.value!r}")
        results.append(
            TypeResult(
                data_type=dt,
                counts=counts_by_type[dt],
                dar=type_dar[dt],
                per_dataset=tuple(per_dataset[dt]),
            )
        )

    legacy = None
    if "legacy" in sections:
        legacy = {
            "plain_accuracy": {},
            "vs_unknown": {},
            "fpr_tpr_target": float(header.get("fpr_tpr_target", repr(FPR_TPR_TARGET))),
        }
        for row in sections["legacy"][1:]:
            name, metric, value = row[0], row[1], float(row[2])
            if metric == "plain_accuracy":
                legacy["plain_accuracy"][name] = value
            else:
                legacy["vs_unknown"].setdefault(name, {})[metric] = value

    return BenchmarkReport(
        threshold=threshold,
        config=config,
        results=tuple(results),
        mean_dar=mean,
        legacy=legacy,
        trial_id=header.get("trial_id"),
    )
