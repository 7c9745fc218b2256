"""Thread-count configuration and deterministic chunked evaluation.

Points are split into fixed-size chunks regardless of the thread count, so
every per-point result is computed from identically shaped arrays and the
output is bitwise independent of the schedule.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 512
_threads: int | None = None


def get_threads() -> int:
    if _threads is not None:
        return _threads
    env = os.environ.get("QCVAR_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def set_threads(n: int | None) -> None:
    global _threads
    _threads = None if n is None else max(1, int(n))


def map_points(fn, z, chunk: int = CHUNK) -> np.ndarray:
    """Apply ``fn`` (array -> array of the same length) over fixed chunks of ``z``."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    flat = z.reshape(-1)
    if flat.size <= chunk:
        return np.asarray(fn(flat)).reshape(shape)
    pieces = [flat[i:i + chunk] for i in range(0, flat.size, chunk)]
    threads = get_threads()
    if threads == 1:
        out = [fn(p) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(fn, pieces))
    return np.concatenate(out).reshape(shape)


def map_stacked(fn, z, chunk: int = CHUNK) -> np.ndarray:
    """Like :func:`map_points` for ``fn`` returning ``(k, len(chunk))`` arrays."""
    z = np.asarray(z, dtype=complex).reshape(-1)
    pieces = [z[i:i + chunk] for i in range(0, max(z.size, 1), chunk)]
    threads = get_threads()
    if threads == 1 or len(pieces) == 1:
        out = [fn(p) for p in pieces]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(fn, pieces))
    return np.concatenate(out, axis=-1)
