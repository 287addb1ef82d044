"""Post-hoc confidence scores computed from raw logits.

Every function is a pure map from a logit vector to a scalar, and also
accepts batches with vectors along the last axis. Higher always means
more confident that the sample belongs to a known class; that holds for
the log-sum-exp energy form as well, matching the orientation of the
original energy-score method.

No score uses batch statistics, so evaluation order can never change a
value.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp
from scipy.special import softmax as _scipy_softmax


def _as_logits(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim == 0 or z.shape[-1] == 0:
        raise ValueError("logits must have at least one entry")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    return z


def softmax(logits):
    """Softmax over the last axis, computed in the max-shifted stable form."""
    return _scipy_softmax(_as_logits(logits), axis=-1)


def predicted_class(logits):
    """Index of the maximum logit; ties break to the lowest index."""
    return np.argmax(_as_logits(logits), axis=-1)


def msp(logits):
    """Maximum softmax probability."""
    return np.max(softmax(logits), axis=-1)


def mls(logits):
    """Maximum raw logit."""
    return np.max(_as_logits(logits), axis=-1)


def energy_confidence(logits):
    """log sum exp of the logits, in the shifted overflow-safe form."""
    return logsumexp(_as_logits(logits), axis=-1)


def gen_confidence(logits, gamma: float = 0.1, top_m: int | None = None):
    """Negated generalized entropy of the top-M softmax probabilities.

    G = sum over the M largest p of p**gamma * (1-p)**gamma and the
    confidence is -G: a near one-hot distribution scores near 0, flat
    distributions score lower. top_m=None means min(C, 100).
    """
    z = _as_logits(logits)
    c = z.shape[-1]
    if not gamma > 0.0:
        raise ValueError("gamma must be positive")
    m = min(c, 100) if top_m is None else top_m
    if not 1 <= m <= c:
        raise ValueError(f"top_m must be in [1, {c}], got {m}")
    p = _scipy_softmax(z, axis=-1)
    top = np.sort(p, axis=-1)[..., c - m :]
    g = np.sum(top**gamma * (1.0 - top) ** gamma, axis=-1)
    return -g


def confidence(logits, method: str, gamma: float = 0.1, top_m: int | None = None):
    """Dispatch on the score-method tag used throughout the benchmark."""
    if method == "msp":
        return msp(logits)
    if method == "mls":
        return mls(logits)
    if method == "energy":
        return energy_confidence(logits)
    if method == "gen":
        return gen_confidence(logits, gamma=gamma, top_m=top_m)
    raise ValueError(f"unknown score method {method!r}")
