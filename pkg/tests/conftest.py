"""Independent reference oracles shared by the tests.

These deliberately avoid the package's kernels: plain Python loops over
edge lists and subsets, so agreement with the library is meaningful.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def enum_cut(edges, S, directed=True):
    """Set cut value by direct edge inspection."""
    total = 0.0
    for u, v, w in edges:
        if directed:
            total += w if (u in S and v not in S) else 0.0
        else:
            total += w if ((u in S) != (v in S)) else 0.0
    return total


def enum_multilinear(edges, n, x, directed=True):
    """E[cut(R)] with R containing i independently w.p. x_i, by summing all 2**n sets."""
    total = 0.0
    for bits in itertools.product((0, 1), repeat=n):
        prob = 1.0
        for i, b in enumerate(bits):
            prob *= x[i] if b else 1.0 - x[i]
        if prob:
            S = {i for i, b in enumerate(bits) if b}
            total += prob * enum_cut(edges, S, directed)
    return total


def enum_opt(edges, n, directed=True):
    return max(enum_cut(edges, {i for i in range(n) if (k >> i) & 1}, directed) for k in range(1 << n))


def fd_gradient(fn, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (fn(xp) - fn(xm)) / (2 * step)
    return g


def standard_error_ok(samples, target, k=3.0):
    samples = np.asarray(samples, dtype=float)
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    return abs(samples.mean() - target) <= k * se, samples.mean(), se


SINGLE_EDGE = [(0, 1, 1.0)]
TRIANGLE = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]


@pytest.fixture
def tmp_out(tmp_path):
    return tmp_path / "out"


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def record_criterion(number, name, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {name} | {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
