"""Pure numpy implementations of the numerical kernels.

Every reduction here is a strictly sequential, ascending-index sum
(``np.cumsum(...)[..., -1]`` and ``np.add.at``) so results match the
compiled kernels in ``_ckernels.pyx`` bit for bit. Do not replace these
with ``np.sum`` or ``np.dot``: both use pairwise/blocked summation.
"""

import numpy as np

_CHUNK = 1 << 15


def _seqsum_rows(terms):
    """Sequential sum along the last axis; zero for an empty axis."""
    if terms.shape[-1] == 0:
        return np.zeros(terms.shape[:-1])
    return np.cumsum(terms, axis=-1)[..., -1]


def _edge_terms(tails, heads, weights, X, directed):
    xu = X[..., tails]
    xv = X[..., heads]
    if directed:
        return weights * xu * (1.0 - xv)
    return weights * (xu * (1.0 - xv) + xv * (1.0 - xu))


def cut_value(tails, heads, weights, x, directed):
    return float(_seqsum_rows(_edge_terms(tails, heads, weights, x, directed)))


def cut_values(tails, heads, weights, X, directed):
    return _seqsum_rows(_edge_terms(tails, heads, weights, X, directed))


def cut_gradient(tails, heads, weights, x, directed):
    n = x.shape[0]
    m = tails.shape[0]
    grad = np.zeros(n)
    if m == 0:
        return grad
    xu = x[tails]
    xv = x[heads]
    idx = np.empty(2 * m, dtype=np.intp)
    vals = np.empty(2 * m)
    idx[0::2] = tails
    idx[1::2] = heads
    if directed:
        vals[0::2] = weights * (1.0 - xv)
        vals[1::2] = -(weights * xu)
    else:
        vals[0::2] = weights * (1.0 - 2.0 * xv)
        vals[1::2] = weights * (1.0 - 2.0 * xu)
    # ufunc.at is unbuffered and applies updates in index-array order
    np.add.at(grad, idx, vals)
    return grad


def brute_force_cut(tails, heads, weights, n, directed):
    """Return (best_mask, best_value) over all 2**n vertex subsets.

    Bit i of the mask is vertex i. Ties keep the smallest mask.
    """
    total = 1 << n
    shifts = np.arange(n, dtype=np.int64)
    best_mask, best_value = 0, -np.inf
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(np.float64)
        vals = cut_values(tails, heads, weights, bits, directed)
        k = int(np.argmax(vals))
        if vals[k] > best_value:
            best_mask, best_value = int(masks[k]), float(vals[k])
    return best_mask, best_value


def quad_value(c, b, A, x):
    lin = float(_seqsum_rows(b * x))
    Ax = _seqsum_rows(A * x[None, :])
    quad = float(_seqsum_rows(x * Ax))
    return c + lin - 0.5 * quad


def quad_gradient(b, A, x):
    sym = A + A.T
    return b - 0.5 * _seqsum_rows(sym * x[None, :])


def quad_values(c, b, A, X):
    lin = _seqsum_rows(b * X)
    AX = _seqsum_rows(A[None, :, :] * X[:, None, :])
    quad = _seqsum_rows(X * AX)
    return c + lin - 0.5 * quad
