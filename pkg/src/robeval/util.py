"""Small shared helpers."""

from __future__ import annotations

import os


def worker_count(n_items: int) -> int:
    """Worker cap for parallel sections.

    ROBEVAL_THREADS, when set, is an upper bound; the default is the
    machine's CPU count. Never more workers than items, never fewer
    than one.
    """
    if n_items <= 1:
        return 1
    cap = os.cpu_count() or 1
    env = os.environ.get("ROBEVAL_THREADS")
    if env is not None:
        try:
            cap = int(env)
        except ValueError:
            raise ValueError(f"ROBEVAL_THREADS must be an integer, got {env!r}") from None
        if cap < 1:
            raise ValueError("ROBEVAL_THREADS must be >= 1")
    return max(1, min(cap, n_items))
