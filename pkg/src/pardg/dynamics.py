"""Forward-Euler integration of continuous double greedy dynamics.

Both points start at the corners, ``x = 0`` and ``y = 1``, and flow toward
each other. Along the way we track ``p``, the projection of a reference
optimum ``x_star`` onto the box ``[x, y]``, and certify at every step that

    (f(x') - f(x) + f(y') - f(y)) / 2 + alpha * (f(p') - f(p)) >= -tol,

the integrated form of the invariant that yields
``f(x_final) >= alpha / (1 + alpha) * f(x_star)`` once ``x`` and ``y`` meet.
"""

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from pardg.oracles import InvalidInput
from pardg.rng import Tag, uniform


class Rule(str, Enum):
    GRADIENT_RATIO = "ratio"
    GRADIENT_SPLIT = "split"
    # y' = grad f(x)^- as literally stated, kept for comparison only
    GRADIENT_SPLIT_LITERAL = "split-literal"


@dataclass(frozen=True)
class DynamicsConfig:
    rule: Rule = Rule.GRADIENT_RATIO
    h: float = 1e-3
    alpha: float = 1.0
    invariant_tolerance: Optional[float] = None
    max_steps: Optional[int] = None
    # consecutive zero-velocity steps before an open coordinate is collapsed
    # (ratio rule); 0 disables collapsing and stops once every velocity is zero
    freeze_after: int = 2
    velocity_floor: float = 1e-12

    def __post_init__(self):
        object.__setattr__(self, "rule", Rule(self.rule))
        if not 0 < self.h <= 0.01:
            raise InvalidInput(f"step size h must be in (0, 0.01], got {self.h!r}")
        if not self.alpha > 0:
            raise InvalidInput("alpha must be positive")


@dataclass
class Sample:
    t: float
    x: np.ndarray
    y: np.ndarray
    p: np.ndarray
    f_x: float
    f_y: float
    f_p: float

    @property
    def max_gap(self):
        return float(np.max(self.y - self.x)) if self.x.size else 0.0


@dataclass
class Trajectory:
    config: DynamicsConfig
    tolerance: float
    samples: list = field(default_factory=list)
    # residuals[k] is the invariant residual between samples k and k+1
    residuals: list = field(default_factory=list)
    euler_steps: int = 0
    collapses: int = 0

    @property
    def final(self):
        return self.samples[-1]

    @property
    def worst_residual(self):
        return min(self.residuals, default=0.0)

    def certified(self):
        return self.worst_residual >= -self.tolerance

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("t", "f_x", "f_y", "f_p", "residual", "max_gap"))
        for k, s in enumerate(self.samples):
            res = self.residuals[k - 1] if k else 0.0
            w.writerow((repr(s.t), repr(s.f_x), repr(s.f_y), repr(s.f_p), repr(res), repr(s.max_gap)))
        return buf.getvalue()


def project_to_box(x_star, x, y):
    """Coordinate-wise median of ``(x, x_star, y)``, i.e. ``(x_star ^ y) v x``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x > y):
        raise InvalidInput("project_to_box requires x <= y")
    return np.maximum(np.minimum(np.asarray(x_star, dtype=np.float64), y), x)


def _advance(x, y, vx, vy, h):
    """Euler step with per-coordinate clipping so the two points meet instead of crossing."""
    gap = y - x
    closing = vx - vy
    tau = np.full_like(x, h)
    meet = closing * h >= gap
    nz = meet & (closing > 0)
    tau[nz] = gap[nz] / closing[nz]
    nx = x + tau * vx
    ny = y + tau * vy
    ny[meet] = nx[meet]
    return nx, ny


def ratio_velocity(x, y, grad_x, grad_y):
    gx = np.asarray(grad_x, dtype=np.float64)
    gy = np.asarray(grad_y, dtype=np.float64)
    active = (x < y) & (gx > 0) & (gy < 0)
    vx, vy = np.zeros_like(gx), np.zeros_like(gy)
    denom = gx[active] - gy[active]
    vx[active] = gx[active] / denom
    vy[active] = gy[active] / denom
    return vx, vy


def split_velocity(x, y, grad_x, grad_y, literal=False):
    gx = np.asarray(grad_x, dtype=np.float64)
    gy = np.asarray(grad_x if literal else grad_y, dtype=np.float64)
    live = x < y
    vx = np.where(live, np.maximum(gx, 0.0), 0.0)
    vy = np.where(live, np.minimum(gy, 0.0), 0.0)
    return vx, vy


def step_gradient_ratio(x, y, grad_x, grad_y, h):
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    vx, vy = ratio_velocity(x, y, grad_x, grad_y)
    return _advance(x, y, vx, vy, h)


def step_gradient_split(x, y, grad_x, grad_y, h, literal=False):
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    vx, vy = split_velocity(x, y, grad_x, grad_y, literal)
    return _advance(x, y, vx, vy, h)


def discrete_invariant_residual(prev, nxt, alpha):
    return 0.5 * ((nxt.f_x - prev.f_x) + (nxt.f_y - prev.f_y)) + alpha * (nxt.f_p - prev.f_p)


def gradient_bound(f, samples=100, seed=0):
    """Largest ``|grad_i f|`` over ``samples`` random box points."""
    n = f.n
    pts = uniform(seed, Tag.DYNAMICS, samples * n).reshape(samples, n)
    return max((float(np.max(np.abs(f.gradient(p)))) for p in pts), default=0.0) if n else 0.0


def default_tolerance(f, h, seed=0):
    g = gradient_bound(f, seed=seed)
    return 10.0 * h * f.n * g * g


def integrate(f, x_star, config):
    """Integrate the dynamics from ``x = 0``, ``y = 1`` and record the trajectory.

    Ratio rule: coordinates outside the strict sign set have zero velocity;
    an open coordinate stuck at zero velocity for ``freeze_after`` steps is
    closed with the collapse rule (``grad_x_i <= 0``: ``y_i <- x_i``, else
    ``x_i <- y_i``). Collapses are recorded as samples without advancing
    time. Integration stops when ``x == y``, when every velocity is below
    ``velocity_floor``, or after ``max_steps`` Euler steps.
    """
    n = f.n
    x_star = np.asarray(x_star, dtype=np.float64)
    if x_star.shape != (n,) or np.any(x_star < 0) or np.any(x_star > 1):
        raise InvalidInput("x_star must be a point of the box with the oracle's dimension")
    h = config.h
    tol = config.invariant_tolerance
    if tol is None:
        tol = default_tolerance(f, h)
    max_steps = config.max_steps
    if max_steps is None:
        base = math.ceil(1.0 / h) + n
        max_steps = base if config.rule is Rule.GRADIENT_RATIO else 10 * base
    traj = Trajectory(config=config, tolerance=tol)

    def sample(t, x, y):
        p = project_to_box(x_star, x, y)
        return Sample(t, x, y, p, f.value(x), f.value(y), f.value(p))

    x, y = np.zeros(n), np.ones(n)
    cur = sample(0.0, x, y)
    traj.samples.append(cur)
    stuck = np.zeros(n, dtype=int)

    while traj.euler_steps < max_steps and np.any(x < y):
        gx, gy = f.gradient(x), f.gradient(y)
        if config.rule is Rule.GRADIENT_RATIO:
            vx, vy = ratio_velocity(x, y, gx, gy)
            idle = (x < y) & (vx == 0)
            stuck = np.where(idle, stuck + 1, 0)
            frozen = stuck >= config.freeze_after if config.freeze_after else np.zeros(n, dtype=bool)
            if not config.freeze_after and not np.any(vx):
                break
            if np.any(frozen):
                nx, ny = x.copy(), y.copy()
                lower = frozen & (gx <= 0)
                raise_ = frozen & ~lower
                ny[lower] = nx[lower]
                nx[raise_] = ny[raise_]
                stuck[frozen] = 0
                traj.collapses += 1
                x, y = nx, ny
                nxt = sample(cur.t, x, y)
                traj.residuals.append(discrete_invariant_residual(cur, nxt, config.alpha))
                traj.samples.append(nxt)
                cur = nxt
                continue
        else:
            vx, vy = split_velocity(x, y, gx, gy, literal=config.rule is Rule.GRADIENT_SPLIT_LITERAL)
            if max(np.max(np.abs(vx), initial=0.0), np.max(np.abs(vy), initial=0.0)) <= config.velocity_floor:
                break
        x, y = _advance(x, y, vx, vy, h)
        traj.euler_steps += 1
        nxt = sample(traj.euler_steps * h, x, y)
        traj.residuals.append(discrete_invariant_residual(cur, nxt, config.alpha))
        traj.samples.append(nxt)
        cur = nxt
    return traj
