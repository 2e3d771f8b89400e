"""Numpy fallback for the context-gather kernel.

Behaviourally identical to the compiled version in _gather.pyx: same
argument contract, bitwise-equal float64 output.
"""

import numpy as np

# per-k cache of (row offsets, col offsets, hole mask), all shape (k*k,)
_OFFSETS: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}


def _offsets(k: int):
    cached = _OFFSETS.get(k)
    if cached is None:
        dr, dc = np.meshgrid(np.arange(k), np.arange(k), indexing="ij")
        keep = np.arange(k * k) != (k * k) // 2
        cached = (dr.ravel(), dc.ravel(), keep)
        _OFFSETS[k] = cached
    return cached


def gather_contexts(padded, rows, cols, k, out):
    """Fill out[b] with the centered hole-context at (rows[b], cols[b]).

    Same contract as the compiled kernel: rows/cols point at the top-left
    corner of each k x k window in `padded`; the window center is skipped
    and 0.5 is subtracted from every kept entry.
    """
    dr, dc, keep = _offsets(k)
    windows = padded[rows[:, None] + dr[None, :], cols[:, None] + dc[None, :]]
    np.subtract(windows[:, keep], 0.5, out=out)
    return out.shape[0]
