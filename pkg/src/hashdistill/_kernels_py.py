"""Pure numpy round kernel, used when the compiled extension is missing."""

from __future__ import annotations

import numpy as np


def _lut(cols: np.ndarray) -> np.ndarray:
    table = np.zeros(1 << len(cols), dtype=np.uint64)
    for bit, col in enumerate(cols):
        size = 1 << bit
        table[size : 2 * size] = table[:size] ^ np.uint64(col)
    return table


def destination_index(cols, j_star: int) -> np.ndarray:
    """Flat ``parity * 4**(m-1) + survivor`` destination of every source string."""
    cols = np.asarray(cols, dtype=np.uint64)
    nbits = len(cols)
    lo_bits = nbits // 2
    lo = _lut(cols[:lo_bits])
    hi = _lut(cols[lo_bits:])
    x = np.arange(1 << nbits, dtype=np.uint64)
    y = lo[x & np.uint64((1 << lo_bits) - 1)] ^ hi[x >> np.uint64(lo_bits)]
    par = (y >> np.uint64(2 * j_star + 1)) & np.uint64(1)
    keep = np.uint64((1 << (2 * j_star)) - 1)
    surv = (y & keep) | ((y >> np.uint64(2 * j_star + 2)) << np.uint64(2 * j_star))
    return (par * np.uint64(1 << (nbits - 2)) + surv).astype(np.int64)


def split_round(w, cols, j_star: int) -> np.ndarray:
    w = np.ascontiguousarray(w, dtype=np.float64)
    nb, n = w.shape
    if n != 1 << len(cols):
        raise ValueError("weight rows do not match the transform size")
    dest = destination_index(cols, j_star)
    # dest is a 2-to-1 map; scatter via bincount per branch
    half = n // 2  # both children of one branch, side by side
    offsets = (np.arange(nb, dtype=np.int64) * half)[:, None]
    flat = np.bincount((dest[None, :] + offsets).ravel(), weights=w.ravel(), minlength=nb * half)
    return flat.reshape(nb * 2, n // 4)


def branch_max_sum(w) -> float:
    w = np.asarray(w, dtype=np.float64)
    return float(w.max(axis=1).sum()) if w.size else 0.0
