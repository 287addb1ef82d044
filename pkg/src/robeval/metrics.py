"""Threshold calibration, the accept/reject confusion semantics, DAR/DER,
and the legacy binary-rejection metrics.

The confusion mapping for known-type data:

    TP  accepted and correctly classified
    FP  accepted but incorrectly classified
    FN  rejected although it would have been correct
    TN  rejected and it would have been wrong

Unknown-type data has no correct class, so acceptance is the only error
mode: FP = accepted, TN = rejected, TP = FN = 0.

For the binary metrics, known data is the positive class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from . import scores
from .datamodel import EvalConfig, LogitRecord

# Absorbs float error in (1-q)*n at exact decimal boundaries: q=0.9, n=30
# gives 2.9999999999999996 where the true value is 3.
_QUANTILE_EPS = 1e-9


@dataclass(frozen=True)
class CalibratedThreshold:
    value: float
    accept_rate_target: float
    achieved_accept_rate: float
    n_calibration: int


@dataclass(frozen=True)
class Outcome:
    accepted: bool
    correct: bool | None = None  # None for unknown-type samples


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accepted(self) -> int:
        return self.tp + self.fp

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn
        )


def calibrate_threshold(correct_clean_confidences, accept_rate: float) -> CalibratedThreshold:
    """Pick the single fixed threshold from correctly classified clean data.

    With n confidences and target rate q, at most k = floor((1-q)*n)
    samples may be rejected; the threshold is the (k+1)-th smallest
    confidence and acceptance is inclusive (conf >= threshold). At least
    ceil(q*n) calibration samples are then accepted; ties can only push
    the achieved rate higher.
    """
    conf = np.asarray(correct_clean_confidences, dtype=np.float64)
    if conf.size == 0:
        raise ValueError("no correctly classified clean samples; cannot calibrate")
    if not 0.0 < accept_rate < 1.0:
        raise ValueError("accept_rate must lie strictly between 0 and 1")
    n = conf.size
    k = int(math.floor((1.0 - accept_rate) * n + _QUANTILE_EPS))
    k = min(k, n - 1)
    value = float(np.sort(conf)[k])
    achieved = int(np.count_nonzero(conf >= value)) / n
    return CalibratedThreshold(
        value=value,
        accept_rate_target=accept_rate,
        achieved_accept_rate=achieved,
        n_calibration=n,
    )


def classify_outcome(
    record: LogitRecord, is_unknown: bool, threshold, config: EvalConfig
) -> Outcome:
    """Apply the fixed threshold to one sample; acceptance is inclusive."""
    t = threshold.value if isinstance(threshold, CalibratedThreshold) else float(threshold)
    conf = float(
        scores.confidence(
            record.logits,
            config.score_method,
            gamma=config.gen_gamma,
            top_m=config.effective_top_m(record.logits.size),
        )
    )
    accepted = conf >= t
    if is_unknown:
        return Outcome(accepted=accepted)
    correct = int(scores.predicted_class(record.logits)) == record.label
    return Outcome(accepted=accepted, correct=correct)


def confusion_counts(outcomes, is_unknown: bool) -> ConfusionCounts:
    tp = fp = fn = tn = 0
    for o in outcomes:
        if is_unknown:
            if o.correct is not None:
                raise ValueError("known-type outcome in an unknown-type dataset")
            if o.accepted:
                fp += 1
            else:
                tn += 1
        else:
            if o.correct is None:
                raise ValueError("unknown-type outcome in a known-type dataset")
            if o.accepted:
                if o.correct:
                    tp += 1
                else:
                    fp += 1
            elif o.correct:
                fn += 1
            else:
                tn += 1
    return ConfusionCounts(tp, fp, fn, tn)


def dar(counts: ConfusionCounts) -> float:
    """Detection accuracy rate: 100 * (TP + TN) / total."""
    total = counts.total
    if total == 0:
        raise ValueError("empty counts")
    return 100.0 * (counts.tp + counts.tn) / total


def der(counts: ConfusionCounts) -> float:
    """Detection error rate, 100 * (FP + FN) / total.

    Computed as the complement of dar so dar + der == 100 exactly; the
    direct quotient can land one ulp away for some integer counts.
    """
    return 100.0 - dar(counts)


def plain_accuracy(records) -> float:
    """Classification accuracy in percent, no rejection involved."""
    records = list(records)
    if not records:
        raise ValueError("empty record list")
    labels = np.array([r.label for r in records])
    if np.any(labels < 0):
        raise ValueError("plain accuracy is defined for known-type records only")
    mat = np.stack([r.logits for r in records])
    preds = scores.predicted_class(mat)
    return 100.0 * int(np.count_nonzero(preds == labels)) / len(records)


def _binary_inputs(known_scores, unknown_scores):
    k = np.asarray(known_scores, dtype=np.float64)
    u = np.asarray(unknown_scores, dtype=np.float64)
    if k.size == 0 or u.size == 0:
        raise ValueError("both score lists must be non-empty")
    return k, u


def auroc(known_scores, unknown_scores) -> float:
    """Mann-Whitney form: P(known > unknown) with ties counting half.

    Average ranks make the rank-sum equal to the pair count exactly
    (sums of integers and halves are exact in float64).
    """
    k, u = _binary_inputs(known_scores, unknown_scores)
    ranks = rankdata(np.concatenate([k, u]), method="average")
    rank_sum = float(ranks[: k.size].sum())
    return (rank_sum - k.size * (k.size + 1) / 2.0) / (k.size * u.size)


def aupr(known_scores, unknown_scores) -> float:
    """Average precision with known as the positive class.

    Thresholds sweep the distinct observed scores descending; tied
    scores enter as one block, and each block contributes its recall
    increment times the precision at that threshold.
    """
    k, u = _binary_inputs(known_scores, unknown_scores)
    ks = np.sort(k)
    us = np.sort(u)
    values = np.unique(np.concatenate([k, u]))[::-1]
    tp = k.size - np.searchsorted(ks, values, side="left")
    fp = u.size - np.searchsorted(us, values, side="left")
    recall = tp / k.size
    precision = tp / (tp + fp)
    prev = np.concatenate([[0.0], recall[:-1]])
    return float(np.sum((recall - prev) * precision))


def fpr_at_tpr(known_scores, unknown_scores, x: float) -> float:
    """FPR at the largest observed threshold whose TPR reaches x.

    The threshold is the m-th largest known score with m = ceil(x * n):
    any higher observed score accepts fewer than m knowns and misses the
    TPR target.
    """
    k, u = _binary_inputs(known_scores, unknown_scores)
    if not 0.0 < x <= 1.0:
        raise ValueError("x must lie in (0, 1]")
    m = max(1, int(math.ceil(x * k.size - _QUANTILE_EPS)))
    t = np.sort(k)[k.size - m]
    fp = int(np.count_nonzero(u >= t))
    tn = u.size - fp
    return fp / (fp + tn)
