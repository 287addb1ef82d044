"""Model loading: turn a user-supplied reference into a forward pass.

Two reference forms are supported:

* a path to a ``.npz`` checkpoint holding a linear classifier, arrays
  ``W`` of shape (D, C) and ``b`` of shape (C,); logits are ``x @ W + b``
* ``module:attribute`` naming an importable callable that maps a float64
  batch of shape (N, D) to an (N, C) array of logits

Either way the result is a callable plus nothing else; the adapter never
inspects model internals.
"""

from __future__ import annotations

import importlib
import os

import numpy as np


def _load_npz(path: str):
    if not os.path.exists(path):
        raise ValueError(f"cannot load model: no such file {path}")
    try:
        with np.load(path) as data:
            if "W" not in data or "b" not in data:
                raise ValueError(f"cannot load model {path}: expected arrays 'W' and 'b'")
            weights = np.asarray(data["W"], dtype=np.float64)
            bias = np.asarray(data["b"], dtype=np.float64)
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, ValueError) and "cannot load model" in str(exc):
            raise
        raise ValueError(f"cannot load model {path}: {exc}") from None
    if weights.ndim != 2 or bias.ndim != 1 or weights.shape[1] != bias.shape[0]:
        raise ValueError(
            f"cannot load model {path}: W must be (D, C) and b (C,), "
            f"got {weights.shape} and {bias.shape}"
        )

    def forward(batch: np.ndarray) -> np.ndarray:
        if batch.shape[1] != weights.shape[0]:
            raise ValueError(
                f"model expects {weights.shape[0]} features per image, got {batch.shape[1]}"
            )
        # row at a time: a whole-batch matmul picks different BLAS
        # summation orders per batch shape, which would make the written
        # logits depend on --batch-size in the last digits
        return np.stack([row @ weights for row in batch]) + bias

    return forward


def _load_callable(ref: str):
    module_name, _, attr = ref.partition(":")
    if not module_name or not attr:
        raise ValueError(f"cannot load model: bad reference {ref!r}")
    try:
        module = importlib.import_module(module_name)
    except ImportError as exc:
        raise ValueError(f"cannot load model {ref!r}: {exc}") from None
    try:
        fn = getattr(module, attr)
    except AttributeError:
        raise ValueError(f"cannot load model {ref!r}: no attribute {attr!r}") from None
    if not callable(fn):
        raise ValueError(f"cannot load model {ref!r}: {attr!r} is not callable")

    def forward(batch: np.ndarray) -> np.ndarray:
        out = np.asarray(fn(batch), dtype=np.float64)
        if out.ndim != 2 or out.shape[0] != batch.shape[0]:
            raise ValueError(
                f"model returned shape {out.shape} for a batch of {batch.shape[0]} images"
            )
        return out

    return forward


def load_model(ref: str):
    """Resolve a model reference to a batch -> logits callable."""
    if ref.endswith(".npz"):
        return _load_npz(ref)
    if ":" in ref:
        return _load_callable(ref)
    raise ValueError(
        f"model reference {ref!r} is neither a .npz checkpoint path nor module:attribute"
    )
