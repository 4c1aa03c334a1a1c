"""Reference algorithms and exact ground truth.

Set functions are represented either by an oracle exposing ``mask_values``
(vectorised over a boolean membership matrix) and optionally
``brute_force``, or by a plain callable taking one boolean mask.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from pardg.oracles import VALUE, InvalidInput, mask_to_set
from pardg.rng import Tag, uniform

MAX_BRUTE_FORCE_N = 22
MAX_GRID_N = 6
MAX_GRID_K = 21
_CHUNK = 1 << 14


@dataclass(frozen=True)
class BruteForceResult:
    best_set: frozenset
    opt_value: float
    best_mask: int = 0


def _mask_evaluator(setfn):
    batch = getattr(setfn, "batch", None)
    if batch is not None:
        # counting wrapper: one call is one adaptive round
        return lambda M: np.asarray(batch([(VALUE, row.astype(np.float64)) for row in M]), dtype=np.float64)
    vec = getattr(setfn, "mask_values", None)
    if vec is not None:
        return lambda M: np.asarray(vec(M), dtype=np.float64)
    return lambda M: np.array([float(setfn(row)) for row in M])


def _single(setfn):
    ev = _mask_evaluator(setfn)
    return lambda mask: float(ev(mask[None, :])[0])


def brute_force_opt(setfn, n):
    """Exact maximum over all ``2**n`` subsets, in subset-index order.

    Subset index ``k`` contains element ``i`` iff bit ``i`` of ``k`` is set.
    Ties keep the smallest index.
    """
    if n > MAX_BRUTE_FORCE_N:
        raise InvalidInput(f"brute force refused for n={n} > {MAX_BRUTE_FORCE_N}")
    fast = getattr(setfn, "brute_force", None)
    if fast is not None:
        mask, value = fast()
        return BruteForceResult(mask_to_set(mask, n), float(value), int(mask))
    ev = _mask_evaluator(setfn)
    total = 1 << n
    shifts = np.arange(n, dtype=np.int64)
    best_mask, best_value = 0, -np.inf
    for start in range(0, total, _CHUNK):
        masks = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        bits = ((masks[:, None] >> shifts) & 1).astype(bool)
        vals = ev(bits)
        k = int(np.argmax(vals))
        if vals[k] > best_value:
            best_mask, best_value = int(masks[k]), float(vals[k])
    return BruteForceResult(mask_to_set(best_mask, n), best_value, best_mask)


def grid_search_opt(f, n, k):
    """Best point of the uniform ``(k+1)**n`` grid; a certified lower bound on the optimum.

    Points are scanned in lexicographic order (last coordinate fastest);
    ties keep the first.
    """
    if n > MAX_GRID_N or k > MAX_GRID_K or k < 1:
        raise InvalidInput(f"grid search budget exceeded (n={n}, k={k})")
    axis = np.arange(k + 1) / k
    best, best_val = None, -np.inf
    vec = getattr(f, "values", None)
    for chunk in _batched(itertools.product(axis, repeat=n), _CHUNK):
        P = np.array(chunk, dtype=np.float64).reshape(len(chunk), n)
        vals = np.asarray(vec(P)) if vec is not None else np.array([f.value(p) for p in P])
        j = int(np.argmax(vals))
        if vals[j] > best_val:
            best, best_val = P[j].copy(), float(vals[j])
    return best, best_val


def _batched(it, size):
    while True:
        chunk = list(itertools.islice(it, size))
        if not chunk:
            return
        yield chunk


def sequential_double_greedy(setfn, n, randomized=False, seed=0):
    """One pass of double greedy over elements in index order.

    Maintains ``A`` (starts empty) and ``B`` (starts full). For element
    ``i`` with ``a = f(A + i) - f(A)`` and ``b = f(B - i) - f(B)``: the
    deterministic rule adds ``i`` to ``A`` when ``a >= b`` and otherwise
    drops it from ``B``; the randomized rule adds with probability
    ``a+ / (a+ + b+)`` and drops when both are non-positive. The two
    marginal queries of an element are issued together, so a counting
    oracle sees ``n + 1`` rounds.
    """
    values = _mask_evaluator(setfn)
    A = np.zeros(n, dtype=bool)
    B = np.ones(n, dtype=bool)
    u = uniform(seed, Tag.SEQUENTIAL_DG, n) if randomized else None
    fA, fB = values(np.vstack([A, B]))
    for i in range(n):
        A2 = A.copy()
        A2[i] = True
        B2 = B.copy()
        B2[i] = False
        fA2, fB2 = values(np.vstack([A2, B2]))
        a, b = fA2 - fA, fB2 - fB
        if randomized:
            ap, bp = max(a, 0.0), max(b, 0.0)
            keep = ap + bp > 0 and u[i] < ap / (ap + bp)
        else:
            keep = a >= b
        if keep:
            A, fA = A2, fA2
        else:
            B, fB = B2, fB2
    return frozenset(np.flatnonzero(A).tolist())


def random_half(n, seed):
    """Each element independently with probability 1/2; never queries ``f``."""
    if n == 0:
        return frozenset()
    return frozenset(np.flatnonzero(uniform(seed, Tag.RANDOM_HALF, n) < 0.5).tolist())


def random_half_masks(n, seeds):
    """Membership matrix whose row ``r`` equals ``random_half(n, seeds[r])``."""
    out = np.zeros((len(seeds), n), dtype=bool)
    for r, s in enumerate(seeds):
        if n:
            out[r] = uniform(s, Tag.RANDOM_HALF, n) < 0.5
    return out
