"""DR-submodular oracles over the unit box.

Two closed-form families are provided: the multilinear extension of a
(directed or undirected) weighted cut function, and non-negative quadratics
``c + b.x - x.A.x / 2`` with ``A >= 0`` entrywise. Every evaluator first
applies the clamped extension ``x -> min(x, 1)``, so callers may pass
points slightly outside the box from above.

:class:`CountingOracle` wraps an oracle and serves queries in batches; one
batch is one adaptive round.
"""

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from pardg import kernels
from pardg.rng import Tag, uniform


class InvalidInput(ValueError):
    """A point, instance or argument violates an operation's precondition."""


class OracleError(RuntimeError):
    """An oracle returned a value outside its contract (NaN, inf, negative)."""


def clamp_extend(x):
    """Map a non-negative vector into the box by coordinate-wise ``min(x, 1)``."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInput(f"expected a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput("point has non-finite entries")
    if np.any(arr < 0):
        raise InvalidInput(f"point has negative entries (min {arr.min()!r})")
    return np.minimum(arr, 1.0)


def _as_point(x, n):
    p = clamp_extend(x)
    if p.shape[0] != n:
        raise InvalidInput(f"dimension mismatch: got {p.shape[0]}, expected {n}")
    return p


def _as_points(X, n):
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != n:
        raise InvalidInput(f"expected a (k, {n}) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInput("points must be finite and non-negative")
    return np.ascontiguousarray(np.minimum(arr, 1.0))


def indicator(members, n):
    x = np.zeros(n)
    for i in members:
        if not 0 <= i < n:
            raise InvalidInput(f"vertex {i} out of range for n={n}")
        x[i] = 1.0
    return x


def mask_to_set(mask, n):
    return frozenset(i for i in range(n) if (mask >> i) & 1)


# --------------------------------------------------------------------------
# cut instances


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    """Edge list on vertices ``0..n-1``; ``directed=False`` means each edge is unordered."""

    n: int
    tails: np.ndarray
    heads: np.ndarray
    weights: np.ndarray
    directed: bool = True

    def __post_init__(self):
        if self.n < 0:
            raise InvalidInput("n must be non-negative")
        t = np.ascontiguousarray(self.tails, dtype=np.intp)
        h = np.ascontiguousarray(self.heads, dtype=np.intp)
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if not (t.shape == h.shape == w.shape) or t.ndim != 1:
            raise InvalidInput("tails, heads and weights must be equal-length vectors")
        if t.size:
            if t.min() < 0 or h.min() < 0 or t.max() >= self.n or h.max() >= self.n:
                raise InvalidInput("edge endpoint out of range")
            if np.any(t == h):
                raise InvalidInput("self-loops are not allowed")
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise InvalidInput("edge weights must be finite and non-negative")
        for name, arr in (("tails", t), ("heads", h), ("weights", w)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_edges(cls, n, edges: Iterable[Sequence], directed=True):
        edges = [tuple(e) for e in edges]
        if not edges:
            return cls(n, np.zeros(0, np.intp), np.zeros(0, np.intp), np.zeros(0), directed)
        t, h, w = zip(*edges)
        return cls(n, np.array(t), np.array(h), np.array(w, dtype=np.float64), directed)

    @property
    def m(self):
        return int(self.tails.shape[0])

    def edges(self):
        return [(int(t), int(h), float(w)) for t, h, w in zip(self.tails, self.heads, self.weights)]

    def total_weight(self):
        return float(np.cumsum(self.weights)[-1]) if self.m else 0.0

    def dumps(self):
        kind = "directed" if self.directed else "undirected"
        lines = [f"{self.n} {self.m} {kind}"]
        lines += [f"{t} {h} {w!r}" for t, h, w in self.edges()]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
        if not rows or len(rows[0]) != 3:
            raise InvalidInput("graph header must be 'n m directed|undirected'")
        n, m, kind = int(rows[0][0]), int(rows[0][1]), rows[0][2]
        if kind not in ("directed", "undirected"):
            raise InvalidInput(f"unknown graph kind {kind!r}")
        body = rows[1:]
        if len(body) != m or any(len(r) != 3 for r in body):
            raise InvalidInput(f"expected {m} lines 'tail head weight'")
        edges = [(int(r[0]), int(r[1]), float(r[2])) for r in body]
        return cls.from_edges(n, edges, directed=(kind == "directed"))


def eval_cut_multilinear(G, x):
    p = _as_point(x, G.n)
    return kernels.cut_value(G.tails, G.heads, G.weights, p, G.directed)


def grad_cut_multilinear(G, x):
    p = _as_point(x, G.n)
    return kernels.cut_gradient(G.tails, G.heads, G.weights, p, G.directed)


def set_eval_cut(G, S):
    return eval_cut_multilinear(G, indicator(S, G.n))


class CutOracle:
    """Multilinear extension of the cut function of ``graph``."""

    def __init__(self, graph):
        self.graph = graph
        self.n = graph.n

    def value(self, x):
        return eval_cut_multilinear(self.graph, x)

    def gradient(self, x):
        return grad_cut_multilinear(self.graph, x)

    def values(self, X):
        G = self.graph
        return kernels.cut_values(G.tails, G.heads, G.weights, _as_points(X, self.n), G.directed)

    def set_value(self, S):
        return set_eval_cut(self.graph, S)

    def mask_values(self, masks):
        """Cut values of the rows of a boolean ``(k, n)`` membership matrix."""
        return self.values(np.asarray(masks, dtype=np.float64))

    def brute_force(self):
        G = self.graph
        return kernels.brute_force_cut(G.tails, G.heads, G.weights, G.n, G.directed)

    def __repr__(self):
        kind = "directed" if self.graph.directed else "undirected"
        return f"CutOracle(n={self.n}, m={self.graph.m}, {kind})"


# --------------------------------------------------------------------------
# quadratic instances


def nonnegativity_offset(b, A):
    """Smallest ``c`` certifying ``c + b.x - x.A.x/2 >= 0`` on the box: ``|b^-|_1 + sum(A)/2``."""
    neg = np.minimum(np.asarray(b, dtype=np.float64), 0.0)
    return float(-np.cumsum(neg)[-1] + 0.5 * np.cumsum(np.asarray(A).ravel())[-1]) if len(neg) else 0.0


class QuadraticDr:
    """``f(x) = c + b.x - x.A.x / 2``; DR-submodular when every ``A_ij >= 0``.

    ``validate=False`` skips the sign and offset checks, which the
    verification negative controls rely on.
    """

    def __init__(self, c, b, A, validate=True):
        b = np.ascontiguousarray(b, dtype=np.float64)
        A = np.ascontiguousarray(A, dtype=np.float64)
        n = b.shape[0]
        if b.ndim != 1 or A.shape != (n, n):
            raise InvalidInput(f"b must have length n and A shape (n, n); got {b.shape}, {A.shape}")
        if not (np.isfinite(c) and np.all(np.isfinite(b)) and np.all(np.isfinite(A))):
            raise InvalidInput("quadratic coefficients must be finite")
        if validate:
            if np.any(A < 0):
                raise InvalidInput("A must be entrywise non-negative")
            need = nonnegativity_offset(b, A)
            if c < need - 1e-12 * max(1.0, abs(need)):
                raise InvalidInput(f"offset c={c!r} below the non-negativity bound {need!r}")
        b.setflags(write=False)
        A.setflags(write=False)
        self.c, self.b, self.A, self.n = float(c), b, A, n

    def value(self, x):
        return eval_quadratic(self, x)

    def gradient(self, x):
        return grad_quadratic(self, x)

    def values(self, X):
        return kernels.quad_values(self.c, self.b, self.A, _as_points(X, self.n))

    def set_value(self, S):
        return self.value(indicator(S, self.n))

    def mask_values(self, masks):
        return self.values(np.asarray(masks, dtype=np.float64))

    def dumps(self):
        lines = [f"n: {self.n}", f"c: {self.c!r}", "b: " + " ".join(repr(float(v)) for v in self.b), "A:"]
        lines += [" ".join(repr(float(v)) for v in row) for row in self.A]
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text):
        lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
        fields, rows, in_a = {}, [], False
        for ln in lines:
            key, sep, rest = ln.partition(":")
            if sep and key.strip() in ("n", "c", "b", "A"):
                in_a = key.strip() == "A"
                fields[key.strip()] = rest.strip()
                if in_a and rest.strip():
                    rows.append(rest.split())
            elif in_a:
                rows.append(ln.split())
            else:
                raise InvalidInput(f"unexpected line in quadratic file: {ln!r}")
        missing = {"n", "c", "b", "A"} - fields.keys()
        if missing:
            raise InvalidInput(f"quadratic file missing keys {sorted(missing)}")
        n = int(fields["n"])
        b = [float(v) for v in fields["b"].split()]
        A = [[float(v) for v in r] for r in rows]
        if len(b) != n or len(A) != n or any(len(r) != n for r in A):
            raise InvalidInput("quadratic file dimensions do not match n")
        return cls(float(fields["c"]), b, np.array(A).reshape(n, n))

    def __repr__(self):
        return f"QuadraticDr(n={self.n}, c={self.c:.4g})"


def eval_quadratic(Q, x):
    return kernels.quad_value(Q.c, Q.b, Q.A, _as_point(x, Q.n))


def grad_quadratic(Q, x):
    return kernels.quad_gradient(Q.b, Q.A, _as_point(x, Q.n))


# --------------------------------------------------------------------------
# rounding


def independent_round(x, seed):
    """Include coordinate ``i`` with probability ``x_i``; stream keyed by ``seed``."""
    p = clamp_extend(x)
    u = uniform(seed, Tag.ROUNDING, p.shape[0])
    return frozenset(np.flatnonzero(u < p).tolist())


def rounding_masks(x, seeds):
    """Membership matrix whose row ``r`` equals ``independent_round(x, seeds[r])``."""
    p = clamp_extend(x)
    n = p.shape[0]
    out = np.empty((len(seeds), n), dtype=bool)
    for r, s in enumerate(seeds):
        out[r] = uniform(s, Tag.ROUNDING, n) < p
    return out


# --------------------------------------------------------------------------
# query accounting


@dataclass
class OracleStats:
    value_queries: int = 0
    gradient_queries: int = 0
    adaptive_rounds: int = 0

    def as_dict(self):
        return {"value_queries": self.value_queries,
                "gradient_queries": self.gradient_queries,
                "adaptive_rounds": self.adaptive_rounds}


VALUE = "value"
GRADIENT = "gradient"


@dataclass
class CountingOracle:
    """Batch interface to an oracle; each call to :meth:`batch` is one adaptive round.

    Queries inside a batch are mutually independent. Value queries in a
    batch are evaluated together through the oracle's vectorised
    ``values`` when it has one; results do not depend on that grouping.
    """

    oracle: object
    stats: OracleStats = field(default_factory=OracleStats)

    @property
    def n(self):
        return self.oracle.n

    def batch(self, requests):
        if not requests:
            raise InvalidInput("empty batch")
        kinds, points = [], []
        for kind, point in requests:
            if kind not in (VALUE, GRADIENT):
                raise InvalidInput(f"unknown query kind {kind!r}")
            kinds.append(kind)
            points.append(_as_point(point, self.n))

        results = [None] * len(requests)
        v_idx = [i for i, k in enumerate(kinds) if k == VALUE]
        if v_idx:
            vals = self._values(np.stack([points[i] for i in v_idx]))
            for i, v in zip(v_idx, vals):
                results[i] = float(v)
        for i, k in enumerate(kinds):
            if k == GRADIENT:
                g = np.asarray(self.oracle.gradient(points[i]), dtype=np.float64)
                if not np.all(np.isfinite(g)):
                    raise OracleError("oracle returned a non-finite gradient")
                results[i] = g
        for i in v_idx:
            if not np.isfinite(results[i]):
                raise OracleError("oracle returned a non-finite value")

        self.stats.adaptive_rounds += 1
        self.stats.value_queries += len(v_idx)
        self.stats.gradient_queries += len(requests) - len(v_idx)
        return results

    def _values(self, X):
        vec = getattr(self.oracle, "values", None)
        if vec is not None:
            return vec(X)
        return [self.oracle.value(row) for row in X]


def batch_query(oracle, requests):
    return oracle.batch(requests)
