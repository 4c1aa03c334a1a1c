"""Parallel double greedy for non-negative DR-submodular maximization.

The solver keeps a lower point ``x`` and an upper point ``y`` (``x <= y``)
and moves them toward each other. Each iteration:

1. query gradients and values at ``(x, y)`` (one round);
2. stop if ``<grad f(x) - grad f(y), y - x> < eps * M``;
3. close every open coordinate outside the active set ``S`` (collapse),
   then refresh gradients (one round);
4. move the active coordinates along the gradient-ratio direction with a
   step chosen by a multi-round geometric line search.

All oracle traffic goes through :class:`~pardg.oracles.CountingOracle`,
so ``trace.stats.adaptive_rounds`` is the exact number of rounds used.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from pardg.kernels import seqdot, seqsum
from pardg.oracles import GRADIENT, VALUE, CountingOracle, InvalidInput, OracleError, OracleStats


class SolverInvariantError(AssertionError):
    """An internal invariant of the algorithm was violated."""


def default_max_iterations(epsilon):
    return math.ceil(40.0 * math.log(1.0 / epsilon) / epsilon)


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float
    M: float
    line_search_depth: int = 4
    max_iterations: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.epsilon <= 0.25:
            raise InvalidInput(f"epsilon must be in (0, 0.25], got {self.epsilon!r}")
        if not (self.M > 0 and math.isfinite(self.M)):
            raise InvalidInput(f"M must be positive and finite, got {self.M!r}")
        if self.line_search_depth < 1:
            raise InvalidInput("line_search_depth must be >= 1")
        if self.max_iterations is None:
            object.__setattr__(self, "max_iterations", default_max_iterations(self.epsilon))
        elif self.max_iterations < 0:
            raise InvalidInput("max_iterations must be non-negative")


@dataclass
class SolverState:
    x: np.ndarray
    y: np.ndarray
    grad_x: Optional[np.ndarray] = None
    grad_y: Optional[np.ndarray] = None
    S: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))


@dataclass
class IterationRecord:
    t: int
    phi: float
    stopping_value: float
    eta: float
    eta_max: float
    step: str  # "interior" | "capped" | "fallback" | "underflow" | "none"
    s_size: int
    f_x: float
    f_y: float
    value_queries: int
    gradient_queries: int
    adaptive_rounds: int
    S: np.ndarray
    # sum over S of (gx_i - gy_i)(y_i - x_i) at the step's base point
    phi_floor: float = 0.0
    # <grad f(x') - grad f(y'), 1_S> at the next iterate; filled in one round later
    phi_next: Optional[float] = None


TRACE_COLUMNS = ("t", "phi", "stopping_value", "eta", "s_size", "f_x", "f_y",
                 "value_queries", "gradient_queries", "adaptive_rounds")


@dataclass
class RunTrace:
    config: SolverConfig
    records: list = field(default_factory=list)
    # (x, y) at the start of every iteration, plus the final pair
    iterates: list = field(default_factory=list)
    stats: OracleStats = field(default_factory=OracleStats)
    truncated: bool = False
    final_fx: float = float("nan")
    final_fy: float = float("nan")
    value: float = float("nan")

    @property
    def iterations(self):
        return len(self.records)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            w.writerow([r.t, repr(r.phi), repr(r.stopping_value), repr(r.eta), r.s_size,
                        repr(r.f_x), repr(r.f_y), r.value_queries, r.gradient_queries,
                        r.adaptive_rounds])
        return buf.getvalue()


# --------------------------------------------------------------------------
# per-iteration pieces


def _indices(mask):
    return np.flatnonzero(mask).astype(np.intp)


def classify(grad_x, grad_y, open_mask=None):
    """Split coordinates into the active set and the two collapse sets.

    ``S`` holds ``i`` with ``grad_x[i] > 0`` and ``grad_y[i] < 0``. Outside
    ``S``, ``grad_x[i] <= 0`` sends ``i`` to ``to_lower`` (``y_i <- x_i``),
    anything else to ``to_raise`` (``x_i <- y_i``). Only coordinates in
    ``open_mask`` (default: all) are classified; closed ones appear nowhere.
    """
    gx = np.asarray(grad_x, dtype=np.float64)
    gy = np.asarray(grad_y, dtype=np.float64)
    if gx.shape != gy.shape:
        raise InvalidInput("gradient dimensions differ")
    live = np.ones(gx.shape, dtype=bool) if open_mask is None else np.asarray(open_mask, dtype=bool)
    active = live & (gx > 0) & (gy < 0)
    rest = live & ~active
    return _indices(active), _indices(rest & (gx > 0)), _indices(rest & (gx <= 0))


def collapse(state, to_raise, to_lower):
    """Close the given coordinates; gradients of the returned state are stale (``None``)."""
    x, y = state.x.copy(), state.y.copy()
    if np.intersect1d(to_raise, state.S).size or np.intersect1d(to_lower, state.S).size:
        raise InvalidInput("collapse sets must be disjoint from S")
    to_lower = np.asarray(to_lower, dtype=np.intp)
    to_raise = np.asarray(to_raise, dtype=np.intp)
    y[to_lower] = x[to_lower]
    x[to_raise] = y[to_raise]
    if np.any(x > y):
        raise SolverInvariantError("collapse broke x <= y")
    return SolverState(x, y, None, None, state.S)


def direction(grad_x, grad_y, S):
    gx = np.asarray(grad_x, dtype=np.float64)
    gy = np.asarray(grad_y, dtype=np.float64)
    S = np.asarray(S, dtype=np.intp)
    dx, dy = np.zeros_like(gx), np.zeros_like(gy)
    if S.size:
        gp, gm = gx[S], gy[S]
        if not (np.all(gp > 0) and np.all(gm < 0)):
            raise SolverInvariantError("direction(): S contains a coordinate without grad_x > 0 > grad_y")
        denom = gp - gm
        dx[S] = gp / denom
        dy[S] = gm / denom
    return dx, dy


def potential(grad_x, grad_y, S):
    S = np.asarray(S, dtype=np.intp)
    if not S.size:
        return 0.0
    gp, gm = np.asarray(grad_x)[S], np.asarray(grad_y)[S]
    if not (np.all(gp > 0) and np.all(gm < 0)):
        raise InvalidInput("potential(): sign precondition fails on S")
    return seqsum(gp - gm)


def stopping_value(grad_x, grad_y, x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x > y):
        raise InvalidInput("stopping_value requires x <= y")
    return seqdot(np.asarray(grad_x) - np.asarray(grad_y), y - x)


# --------------------------------------------------------------------------
# line search


class LineSearchResult(NamedTuple):
    eta: float
    step: str
    eta_max: float


def _as_counting(f):
    return f if isinstance(f, CountingOracle) else CountingOracle(f)


def _gain_test(f, x, y, dx, dy, etas, slope, eps, f_x, f_y):
    """One round: test the sufficient-gain condition at every step in ``etas``.

    Returns ``(passed, f_x, f_y)``; the base values are queried in the same
    batch when not supplied.
    """
    reqs = []
    for eta in etas:
        reqs.append((VALUE, x + eta * dx))
        reqs.append((VALUE, y + eta * dy))
    fetch = f_x is None or f_y is None
    if fetch:
        reqs += [(VALUE, x), (VALUE, y)]
    res = f.batch(reqs)
    if fetch:
        f_x, f_y = res[-2], res[-1]
    passed = []
    for k, eta in enumerate(etas):
        gain = (res[2 * k] - f_x) + (res[2 * k + 1] - f_y)
        passed.append(gain >= (1.0 - eps) * (eta * slope))
    return passed, f_x, f_y


def line_search_condition(f, x, y, dx, dy, grad_x, grad_y, eta, eps, f_x=None, f_y=None):
    """Whether ``f(x+eta dx) - f(x) + f(y+eta dy) - f(y) >= (1-eps) eta (<gx,dx> + <gy,dy>)``.

    Issues a single batch. ``f_x``/``f_y`` may be passed when already known.
    """
    if eta < 0:
        raise InvalidInput("eta must be non-negative")
    f = _as_counting(f)
    slope = seqdot(grad_x, dx) + seqdot(grad_y, dy)
    passed, _, _ = _gain_test(f, np.asarray(x, float), np.asarray(y, float), np.asarray(dx, float),
                              np.asarray(dy, float), [eta], slope, eps, f_x, f_y)
    return passed[0]


def _geometric_grid(eta_max, log_base, lo, hi):
    """``eta_max * base**m`` for integers m with ``lo < value < hi``, descending."""
    # log_base < 0; larger m means smaller value
    m_first = max(0, math.floor(math.log(hi / eta_max) / log_base))
    m_last = math.ceil(math.log(lo / eta_max) / log_base)
    grid = []
    for m in range(m_first, m_last + 1):
        v = eta_max * math.exp(m * log_base)
        if lo < v < hi:
            grid.append(v)
    return grid


def line_search(f, x, y, dx, dy, grad_x, grad_y, eps, depth=4, f_x=None, f_y=None):
    """Approximate largest step satisfying the sufficient-gain condition.

    The step is capped at ``eta_max = min(1, min_{i in S} (y_i - x_i))`` with
    ``S`` the support of ``dx``. Round 1 tests ``eta_max * (1-eps)**k`` down
    to ``eps**4 * eta_max`` together with both endpoints. If even the
    smallest step fails it is used anyway ("fallback"); if ``eta_max``
    passes it is used ("capped"). Otherwise round ``j = 2..depth`` tests
    the powers of ``1 - eps**j`` strictly inside the current bracket and
    keeps the largest passing step ("interior").
    """
    f = _as_counting(f)
    x, y = np.asarray(x, float), np.asarray(y, float)
    dx, dy = np.asarray(dx, float), np.asarray(dy, float)
    S = np.flatnonzero(dx > 0)
    if not S.size:
        raise InvalidInput("line_search needs a non-empty active set")
    eta_max = min(1.0, float(np.min(y[S] - x[S])))
    if eta_max <= 0:
        raise InvalidInput("active coordinate with zero gap")
    slope = seqdot(grad_x, dx) + seqdot(grad_y, dy)
    lo = eps ** 4 * eta_max
    if lo == 0.0:
        # the gap is below float resolution; close it rather than search a grid that underflows
        return LineSearchResult(eta_max, "underflow", eta_max)

    etas = [eta_max] + _geometric_grid(eta_max, math.log1p(-eps), lo, eta_max) + [lo]
    ok, f_x, f_y = _gain_test(f, x, y, dx, dy, etas, slope, eps, f_x, f_y)
    if not ok[-1]:
        return LineSearchResult(lo, "fallback", eta_max)
    if ok[0]:
        return LineSearchResult(eta_max, "capped", eta_max)
    best, fail = _bracket(etas, ok, lo, eta_max)

    for j in range(2, depth + 1):
        grid = _geometric_grid(eta_max, math.log1p(-eps ** j), best, fail)
        if not grid:
            continue
        ok, _, _ = _gain_test(f, x, y, dx, dy, grid, slope, eps, f_x, f_y)
        best, fail = _bracket(grid, ok, best, fail)
    return LineSearchResult(best, "interior", eta_max)


def _bracket(etas, ok, best, fail):
    """Largest passing step and the smallest failing step above it."""
    passing = [e for e, good in zip(etas, ok) if good]
    best = max(passing + [best])
    above = [e for e, good in zip(etas, ok) if not good and e > best]
    return best, min(above + [fail])


# --------------------------------------------------------------------------
# main loop


def _query_pair(f, x, y):
    gx, gy, fx, fy = f.batch([(GRADIENT, x), (GRADIENT, y), (VALUE, x), (VALUE, y)])
    if fx < 0 or fy < 0:
        raise OracleError(f"negative oracle value ({min(fx, fy)!r}); f must be non-negative")
    return gx, gy, fx, fy


def parallel_double_greedy(f, config):
    """Maximize a non-negative DR-submodular ``f`` over the unit box.

    ``config.M`` is the guess of the optimum used in the stopping rule. Returns
    ``(solution, trace)``: the better of the final ``x`` and ``y`` (``x`` on
    ties) and a :class:`RunTrace` with per-iteration records and query counts.
    """
    f = _as_counting(f)
    eps, M = config.epsilon, config.M
    n = f.n
    trace = RunTrace(config=config, stats=f.stats)

    x = np.full(n, eps)
    y = np.full(n, 1.0 - eps)
    gx, gy, fx, fy = _query_pair(f, x, y)

    while True:
        if trace.records:
            prev = trace.records[-1]
            prev.phi_next = seqsum(gx[prev.S] - gy[prev.S]) if prev.S.size else 0.0
        trace.iterates.append((x.copy(), y.copy()))
        sv = stopping_value(gx, gy, x, y)
        if sv < eps * M:
            break
        if len(trace.records) >= config.max_iterations:
            trace.truncated = True
            break
        t = len(trace.records)
        f_start_x, f_start_y = fx, fy

        S, to_raise, to_lower = classify(gx, gy, x < y)
        if to_raise.size or to_lower.size:
            state = collapse(SolverState(x, y, gx, gy, S), to_raise, to_lower)
            x, y = state.x, state.y
            gx, gy, fx, fy = _query_pair(f, x, y)
            S, _, _ = classify(gx, gy, x < y)

        phi = potential(gx, gy, S)
        phi_floor = seqdot((gx - gy)[S], (y - x)[S]) if S.size else 0.0
        eta, step, eta_max = 0.0, "none", 0.0
        if S.size:
            dx, dy = direction(gx, gy, S)
            eta, step, eta_max = line_search(f, x, y, dx, dy, gx, gy, eps,
                                             config.line_search_depth, fx, fy)
            nx = x + eta * dx
            ny = y + eta * dy
            # coordinates whose gap the step closes meet exactly
            closing = S[(y[S] - x[S]) <= eta]
            ny[closing] = nx[closing]
            x, y = nx, ny
            if np.any(x > y):
                raise SolverInvariantError("step broke x <= y")

        trace.records.append(IterationRecord(
            t=t, phi=phi, stopping_value=sv, eta=eta, eta_max=eta_max, step=step,
            s_size=int(S.size), f_x=f_start_x, f_y=f_start_y,
            value_queries=f.stats.value_queries, gradient_queries=f.stats.gradient_queries,
            adaptive_rounds=f.stats.adaptive_rounds, S=S, phi_floor=phi_floor))
        if S.size:
            gx, gy, fx, fy = _query_pair(f, x, y)

    trace.final_fx, trace.final_fy = fx, fy
    solution = x if fx >= fy else y
    trace.value = max(fx, fy)
    return solution.copy(), trace


def default_bounds(f, epsilon):
    """Default ``(L, U)`` for :func:`guess_m_and_solve`.

    ``L`` is the best of ``f`` at ``0``, ``1``, ``eps*1`` and ``(1-eps)*1``.
    ``U = f(0) + |grad f(0)^+|_1`` bounds the optimum by concavity along
    non-negative directions. A :class:`CountingOracle` is queried in one batch.
    """
    n = f.n
    pts = [np.zeros(n), np.ones(n), np.full(n, epsilon), np.full(n, 1.0 - epsilon)]
    if isinstance(f, CountingOracle):
        *vals, g0 = f.batch([(VALUE, p) for p in pts] + [(GRADIENT, pts[0])])
    else:
        vals, g0 = [f.value(p) for p in pts], f.gradient(pts[0])
    L = max(vals)
    U = vals[0] + seqsum(np.maximum(np.asarray(g0), 0.0))
    return L, max(U, L)


def guess_m_and_solve(f, epsilon, L=None, U=None, line_search_depth=4):
    """Run the solver for every guess ``M = L (1+eps)^j`` up to ``U``; keep the best.

    Returns ``(solution, traces)`` with one trace per guess, in guess order.
    Ties between guesses keep the earliest.
    """
    oracle = f.oracle if isinstance(f, CountingOracle) else f
    if L is None or U is None:
        dL, dU = default_bounds(f, epsilon)
        L = dL if L is None else L
        U = dU if U is None else U
    if not L > 0:
        raise InvalidInput(f"lower bound L must be positive, got {L!r}")
    if U < L:
        raise InvalidInput(f"upper bound U={U!r} is below L={L!r}")
    J = math.ceil(math.log(U / L) / math.log1p(epsilon)) if U > L else 0
    best, best_val, traces = None, -math.inf, []
    for j in range(J + 1):
        cfg = SolverConfig(epsilon=epsilon, M=L * (1.0 + epsilon) ** j,
                           line_search_depth=line_search_depth)
        sol, trace = parallel_double_greedy(oracle, cfg)
        traces.append(trace)
        if trace.value > best_val:
            best, best_val = sol, trace.value
    return best, traces
