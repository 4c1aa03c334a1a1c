"""Property checkers for DR structure, solver traces and round budgets.

Each checker returns a :class:`CheckReport` whose ``worst_violation`` is
compared against ``tolerance`` (``passed`` iff ``worst_violation <=
tolerance``) and which names the sample that attained it.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from pardg.dynamics import project_to_box
from pardg.kernels import seqdot
from pardg.oracles import InvalidInput
from pardg.rng import Tag, uniform

DR_SLACK = 1e-12
INEQUALITY_SLACK = 1e-9
FD_STEP = 1e-6
FD_REL = 1e-6
FD_ABS = 1e-8
DECAY_SLACK_DIVISOR = 4.0  # decay factor 1 - eps/4
ITERATION_CONSTANT = 40.0
ROUND_OVERHEAD = 4  # rounds per iteration beyond the line search depth
TRACE_RELATIVE_SLACK = 1e-12


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst_violation: float
    samples: int
    details: str = ""
    tolerance: float = 0.0
    worst_sample: int = -1

    def to_json(self):
        d = asdict(self)
        for k in ("worst_violation", "tolerance"):
            if not math.isfinite(d[k]):
                d[k] = repr(d[k])
        return json.dumps(d, sort_keys=True)

    def line(self):
        mark = "PASS" if self.passed else "FAIL"
        return f"[{mark}] {self.name}: worst={self.worst_violation:.3e} tol={self.tolerance:.1e} n={self.samples} {self.details}"


def _report(name, violations, tolerance, details=""):
    v = np.asarray(violations, dtype=np.float64)
    if v.size == 0:
        return CheckReport(name, True, -math.inf, 0, details or "vacuous", tolerance)
    # np.argmax keeps the lowest index among ties
    k = int(np.argmax(v))
    return CheckReport(name, bool(v[k] <= tolerance), float(v[k]), int(v.size), details, tolerance, k)


def random_pairs(n, count, seed):
    """``count`` pairs ``x = u * v <= y = u`` with ``u, v`` uniform on the box."""
    u = uniform(seed, Tag.CHECK, count * n, index=0).reshape(count, n)
    v = uniform(seed, Tag.CHECK, count * n, index=1).reshape(count, n)
    return u * v, u


def random_points(n, count, seed, index=2):
    return uniform(seed, Tag.CHECK, count * n, index=index).reshape(count, n)


def check_dr(f, n, samples, seed=0):
    """Gradient antitonicity: ``grad f(x) >= grad f(y)`` for random ``x <= y``."""
    if samples < 1:
        raise InvalidInput("samples must be >= 1")
    X, Y = random_pairs(n, samples, seed)
    viol = [float(np.max(np.asarray(f.gradient(y)) - np.asarray(f.gradient(x)), initial=-math.inf))
            for x, y in zip(X, Y)]
    return _report("dr", viol, DR_SLACK, f"max_i (grad_y - grad_x)_i over {samples} pairs")


def check_x_or_opt(f, x_star, trials, seed=0):
    """``f(x_star v x) >= (1 - |x|_inf) f(x_star)``; the corners 0 and 1 are always included."""
    x_star = np.asarray(x_star, dtype=np.float64)
    n = x_star.shape[0]
    fs = f.value(x_star)
    pts = np.vstack([np.zeros((1, n)), np.ones((1, n)), random_points(n, trials, seed)])
    viol = [(1.0 - float(np.max(x, initial=0.0))) * fs - f.value(np.maximum(x_star, x)) for x in pts]
    return _report("x_or_opt", viol, INEQUALITY_SLACK, "(1-|x|_inf) f(x*) - f(x* v x)")


def check_concavity_bounds(f, trials, seed=0):
    """``<grad f(x), y-x> >= f(y) - f(x) >= <grad f(y), y-x>`` for random ``x <= y``."""
    if trials < 1:
        raise InvalidInput("trials must be >= 1")
    X, Y = random_pairs(f.n, trials, seed)
    viol = []
    for x, y in zip(X, Y):
        d = y - x
        rise = f.value(y) - f.value(x)
        upper = seqdot(f.gradient(x), d) - rise
        lower = rise - seqdot(f.gradient(y), d)
        viol.append(max(-upper, -lower))
    return _report("concavity", viol, INEQUALITY_SLACK, "max of both bound deficits")


def check_gradient(f, samples, seed=0, step=FD_STEP):
    """Central differences against the analytic gradient.

    Violation is ``|fd - g| / max(|g|, FD_ABS / FD_REL)`` so that passing at
    tolerance ``FD_REL`` means relative error ``<= FD_REL`` or absolute
    error ``<= FD_ABS``. Points stay ``step`` away from the box boundary.
    """
    n = f.n
    pts = step + (1.0 - 2.0 * step) * random_points(n, samples, seed, index=3)
    floor = FD_ABS / FD_REL
    viol = []
    for x in pts:
        g = np.asarray(f.gradient(x))
        fd = np.empty(n)
        for i in range(n):
            xp, xm = x.copy(), x.copy()
            xp[i] += step
            xm[i] -= step
            fd[i] = (f.value(xp) - f.value(xm)) / (2.0 * step)
        viol.append(float(np.max(np.abs(fd - g) / np.maximum(np.abs(g), floor), initial=0.0)))
    return _report("gradient_fd", viol, FD_REL, f"central differences, step {step:g}")


def _require_iterates(trace):
    if len(trace.iterates) != len(trace.records) + 1:
        raise InvalidInput("trace lacks iterates (need one (x, y) per iteration plus the final pair)")


def check_disc_invariant(trace, f, x_star, eps, M=None):
    """Per-iteration ``(df(x) + df(y))/2 + (1-eps) df(p) >= -eps**2 M`` with ``p`` the projection of ``x_star``."""
    _require_iterates(trace)
    M = trace.config.M if M is None else M
    x_star = np.asarray(x_star, dtype=np.float64)
    vals = []
    for x, y in trace.iterates:
        p = project_to_box(x_star, x, y)
        vals.append((f.value(x), f.value(y), f.value(p)))
    viol = []
    for (fx0, fy0, fp0), (fx1, fy1, fp1) in zip(vals, vals[1:]):
        q = 0.5 * ((fx1 - fx0) + (fy1 - fy0)) + (1.0 - eps) * (fp1 - fp0)
        viol.append(-q)
    return _report("disc_invariant", viol, eps * eps * M, f"{len(viol)} iterations")


def check_trajectory_shape(trace, f=None, eps=None, M=None):
    """Box and monotonicity invariants of the iterates; with ``f``, also the value sandwich.

    Violations: ``max(x - y)``, decreases of ``x``, increases of ``y``, and
    (with ``f``) ``f(x_t) - f(x_{t+1})`` / ``f(y_t) - f(y_{t+1})`` beyond
    ``eps**2 M``.
    """
    _require_iterates(trace)
    viol = []
    slack = 0.0
    if f is not None:
        eps = trace.config.epsilon if eps is None else eps
        M = trace.config.M if M is None else M
        slack = eps * eps * M
    prev = None
    for x, y in trace.iterates:
        worst = float(np.max(x - y, initial=-math.inf))
        fxy = (f.value(x), f.value(y)) if f is not None else None
        if prev is not None:
            px, py, pf = prev
            worst = max(worst, float(np.max(px - x, initial=-math.inf)), float(np.max(y - py, initial=-math.inf)))
            if fxy is not None:
                # shift so that the value slack and the exact box checks share tolerance 0
                worst = max(worst, pf[0] - fxy[0] - slack, pf[1] - fxy[1] - slack)
        prev = (x, y, fxy)
        viol.append(worst)
    return _report("trajectory_shape", viol, 0.0, "x<=y, x up, y down" + (", value sandwich" if f else ""))


def check_potential_decay(trace, eps, M=None):
    """Potential bookkeeping of a completed run, as normalised violations (tolerance 0).

    * interior line-search steps: ``phi_next <= (1 - eps/4) phi``;
    * ``phi`` of the first iteration ``<= 2 M / eps``;
    * every recorded iteration had stopping value ``>= eps M``;
    * ``phi >= sum_{i in S} (gx_i - gy_i)(y_i - x_i)`` where recorded.
    """
    M = trace.config.M if M is None else M
    factor = 1.0 - eps / DECAY_SLACK_DIVISOR
    viol, parts = [], {"decay": -math.inf, "phi0": -math.inf, "stop": -math.inf, "floor": -math.inf}
    for k, r in enumerate(trace.records):
        v = -math.inf
        if r.step == "interior" and r.phi_next is not None and r.phi > 0:
            d = r.phi_next / r.phi - factor
            parts["decay"] = max(parts["decay"], d)
            v = max(v, d)
        if k == 0:
            d = r.phi / (2.0 * M / eps) - 1.0
            parts["phi0"] = d
            v = max(v, d)
        d = 1.0 - r.stopping_value / (eps * M)
        parts["stop"] = max(parts["stop"], d)
        v = max(v, d)
        floor = getattr(r, "phi_floor", None)
        if floor is not None and r.phi > 0:
            d = floor / r.phi - 1.0
            parts["floor"] = max(parts["floor"], d)
            v = max(v, d)
        viol.append(v)
    details = " ".join(f"{k}={v:.3g}" for k, v in parts.items())
    return _report("potential_decay", viol, TRACE_RELATIVE_SLACK, details)


def iteration_bound(eps):
    return ITERATION_CONSTANT * math.log(1.0 / eps) / eps


def check_round_budget(stats, eps, iterations, depth=4):
    """``iterations <= 40 ln(1/eps)/eps`` and ``rounds <= (depth + 4) * max(iterations, 1)``."""
    it_bound = iteration_bound(eps)
    round_bound = (depth + ROUND_OVERHEAD) * max(iterations, 1)
    viol = [iterations / it_bound - 1.0, stats.adaptive_rounds / round_bound - 1.0]
    details = (f"iterations={iterations} (bound {it_bound:.1f}), "
               f"rounds={stats.adaptive_rounds} (bound {round_bound})")
    return _report("round_budget", viol, 0.0, details)


def check_dynamics(traj):
    """Every per-step invariant residual of a trajectory is ``>= -tolerance``."""
    viol = [-r for r in traj.residuals]
    details = f"{traj.config.rule.value} h={traj.config.h:g} steps={traj.euler_steps}"
    return _report("dynamics", viol, traj.tolerance, details)
