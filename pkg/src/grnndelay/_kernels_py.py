"""Pure numpy implementation of the GRNN hot loops.

Used when the compiled ``_ckernels`` extension is unavailable, or when
``GRNNDELAY_BACKEND=python`` is set. Must stay numerically interchangeable
with ``_ckernels.pyx`` (same formulas, same max-shift).
"""
import numpy as np

# queries per block; bounds the (block, n, d) temporary
_BLOCK = 128


def _sq_dist(queries, patterns, sigma):
    diff = (queries[:, None, :] - patterns[None, :, :]) / sigma
    return np.einsum("mnk,mnk->mn", diff, diff)


def predict(patterns, targets, sigma, queries, ymin, ymax):
    """Max-shifted kernel-weighted average of ``targets`` for each query row."""
    m = queries.shape[0]
    out = np.empty(m, dtype=np.float64)
    for start in range(0, m, _BLOCK):
        d = _sq_dist(queries[start:start + _BLOCK], patterns, sigma)
        d -= d.min(axis=1, keepdims=True)
        w = np.exp(-0.5 * d)
        out[start:start + _BLOCK] = (w * targets).sum(axis=1) / w.sum(axis=1)
    return np.clip(out, ymin, ymax, out=out)


def loo_predict(patterns, targets, sigma):
    """Leave-one-out estimate at every pattern (self excluded from both sums)."""
    n = patterns.shape[0]
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        d = _sq_dist(patterns[start:stop], patterns, sigma)
        rows = np.arange(stop - start)
        d[rows, rows + start] = np.inf
        d -= d.min(axis=1, keepdims=True)
        w = np.exp(-0.5 * d)
        out[start:stop] = (w * targets).sum(axis=1) / w.sum(axis=1)
    return out
