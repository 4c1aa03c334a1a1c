"""Acceptance gate: every criterion at its stated tolerance, one PASS/FAIL line each.

The shared suite is 50 random directed-cut instances (n=12, edge
probability 0.5, unit weights, instance indices 0-49 under seed 0) solved
with M equal to the brute-forced optimum for each epsilon in {0.2, 0.1, 0.05}.
"""

import math
import time

import numpy as np
import pytest

from conftest import record_criterion, standard_error_ok
from pardg import verification as V
from pardg.baselines import random_half_masks, sequential_double_greedy
from pardg.dynamics import DynamicsConfig, Rule, integrate
from pardg.harness import ExperimentConfig, generate_instance, reference_optimum, run_experiment
from pardg.oracles import QuadraticDr, rounding_masks
from pardg.rng import Tag, uniform
from pardg.solver import SolverConfig, parallel_double_greedy

EPSILONS = (0.2, 0.1, 0.05)
DEPTH = 4
SUITE = ExperimentConfig(instance_family="directed_cut", n=12, instances=50, edge_probability=0.5,
                         unit_weights=True, seed=0, epsilons=list(EPSILONS),
                         algorithms=["pardg", "seqdg", "random_half"], line_search_depth=DEPTH)


@pytest.fixture(scope="module")
def suite():
    start = time.perf_counter()
    runs = []
    for i in range(SUITE.instances):
        f = generate_instance(SUITE, i)
        opt, kind, x_star = reference_optimum(f, SUITE)
        assert kind == "exact" and opt > 0
        traces = {eps: parallel_double_greedy(f, SolverConfig(eps, opt, line_search_depth=DEPTH))[1]
                  for eps in EPSILONS}
        runs.append((i, f, opt, x_star, traces))
    return runs, time.perf_counter() - start


def test_criterion_1_approximation(suite):
    runs, elapsed = suite
    worst = {eps: math.inf for eps in EPSILONS}
    ok = True
    for _, f, opt, _, traces in runs:
        for eps, tr in traces.items():
            bound = (0.5 - 5 * eps) * opt - eps * opt
            ok &= tr.value >= bound
            worst[eps] = min(worst[eps], tr.value / opt)
    ok &= elapsed < 60
    detail = ", ".join(f"eps={e}: min ratio {worst[e]:.4f} (need {0.5 - 6 * e:.3f})" for e in EPSILONS)
    assert record_criterion(1, "approximation bound", ok, f"{detail}; suite solved in {elapsed:.1f}s")


def test_criterion_2_round_bound(suite):
    runs, _ = suite
    ok, worst_it, worst_rounds = True, {}, {}
    for _, _, _, _, traces in runs:
        for eps, tr in traces.items():
            it_ok = tr.iterations <= 40 * math.log(1 / eps) / eps
            rounds_ok = tr.stats.adaptive_rounds <= (DEPTH + 4) * max(tr.iterations, 1)
            ok &= it_ok and rounds_ok and V.check_round_budget(tr.stats, eps, tr.iterations, DEPTH).passed
            worst_it[eps] = max(worst_it.get(eps, 0), tr.iterations)
            worst_rounds[eps] = max(worst_rounds.get(eps, 0), tr.stats.adaptive_rounds / max(tr.iterations, 1))
    detail = ", ".join(f"eps={e}: max iters {worst_it[e]} (cap {40 * math.log(1 / e) / e:.0f}), "
                       f"max rounds/iter {worst_rounds[e]:.2f} (cap {DEPTH + 4})" for e in EPSILONS)
    assert record_criterion(2, "round bound", ok, detail)


def test_criterion_3_potential_decay(suite):
    runs, _ = suite
    ok, interior, worst = True, 0, -math.inf
    for _, _, opt, _, traces in runs:
        for eps, tr in traces.items():
            rep = V.check_potential_decay(tr, eps, M=opt)
            ok &= rep.passed
            worst = max(worst, rep.worst_violation)
            interior += sum(r.step == "interior" for r in tr.records)
            ok &= tr.records[0].phi <= 2 * opt / eps
    assert record_criterion(3, "potential decay", ok,
                            f"{interior} interior steps checked, worst normalised violation {worst:.3e}")


def test_criterion_4_disc_invariant(suite):
    runs, _ = suite
    ok, iters, worst = True, 0, -math.inf
    for _, f, opt, x_star, traces in runs:
        for eps, tr in traces.items():
            rep = V.check_disc_invariant(tr, f, x_star, eps, M=opt)
            ok &= rep.passed
            iters += rep.samples
            worst = max(worst, rep.worst_violation / (eps * eps * opt))
    assert record_criterion(4, "per-iteration telescoping bound", ok,
                            f"{iters} iterations, worst violation {worst:.3e} x eps^2*OPT")


def test_criterion_5_continuous_dynamics():
    cfg = ExperimentConfig(n=8, instances=20, edge_probability=0.5, unit_weights=True, seed=0)
    ok, worst_ratio, worst_res = True, math.inf, {Rule.GRADIENT_RATIO: math.inf, Rule.GRADIENT_SPLIT: math.inf}
    for i in range(cfg.instances):
        f = generate_instance(cfg, i)
        opt, _, x_star = reference_optimum(f, cfg)
        if opt == 0:
            continue
        for rule in (Rule.GRADIENT_RATIO, Rule.GRADIENT_SPLIT):
            traj = integrate(f, x_star, DynamicsConfig(rule=rule, h=1e-3))
            ok &= V.check_dynamics(traj).passed
            worst_res[rule] = min(worst_res[rule], traj.worst_residual / traj.tolerance)
            if rule is Rule.GRADIENT_RATIO:
                ok &= traj.final.f_x >= 0.45 * opt
                worst_ratio = min(worst_ratio, traj.final.f_x / opt)
    detail = (f"ratio rule min f(x)/OPT {worst_ratio:.4f} (need 0.45); worst residual/tol "
              f"ratio {worst_res[Rule.GRADIENT_RATIO]:.3e}, split {worst_res[Rule.GRADIENT_SPLIT]:.3e}")
    assert record_criterion(5, "continuous dynamics", ok, detail)


def _convex_bump():
    return QuadraticDr(1.0, [-4.0], [[-8.0]], validate=False)


class _PerturbedGradient:
    def __init__(self, f):
        self.f, self.n = f, f.n

    def value(self, x):
        return self.f.value(x)

    def gradient(self, x):
        return self.f.gradient(x) + 1e-3


def test_criterion_6_preliminaries():
    ok, notes = True, []
    for family, n in (("directed_cut", 10), ("undirected_cut", 10), ("quadratic_dr", 6)):
        cfg = ExperimentConfig(instance_family=family, n=n, instances=1, seed=0)
        f = generate_instance(cfg, 0)
        _, _, x_star = reference_optimum(f, cfg)
        reps = [V.check_dr(f, n, 100, seed=1), V.check_x_or_opt(f, x_star, 100, seed=1),
                V.check_concavity_bounds(f, 100, seed=1), V.check_gradient(f, 100, seed=1)]
        ok &= all(r.passed for r in reps)
        notes.append(f"{family}: {sum(r.passed for r in reps)}/4")
    # negative controls
    non_dr = QuadraticDr(2.0, [0.0, 0.0], [[0.0, -1.0], [-1.0, 0.0]], validate=False)
    controls = [V.check_dr(non_dr, 2, 100, seed=1),
                V.check_x_or_opt(_convex_bump(), np.zeros(1), 100, seed=1),
                V.check_concavity_bounds(_convex_bump(), 100, seed=1),
                V.check_gradient(_PerturbedGradient(generate_instance(SUITE, 0)), 100, seed=1)]
    ok &= not any(r.passed for r in controls)
    notes.append(f"negative controls failing: {sum(not r.passed for r in controls)}/4")
    assert record_criterion(6, "preliminaries suite", ok, ", ".join(notes))


def test_criterion_7_baselines(suite):
    runs, _ = suite
    ok, outside_3se, worst_det, worst_rand = True, 0, math.inf, math.inf
    half_masks = random_half_masks(SUITE.n, range(10_000))
    for _, f, opt, _, _ in runs:
        within, _, _ = standard_error_ok(f.mask_values(half_masks), f.value(np.full(SUITE.n, 0.5)))
        outside_3se += not within
        det = f.set_value(sequential_double_greedy(f, SUITE.n)) / opt
        rand = np.mean([f.set_value(sequential_double_greedy(f, SUITE.n, randomized=True, seed=s))
                        for s in range(200)]) / opt
        worst_det, worst_rand = min(worst_det, det), min(worst_rand, rand)
    ok = outside_3se == 0 and worst_det >= 1 / 3 and worst_rand >= 0.45
    detail = (f"random_half outside 3 SE on {outside_3se}/{len(runs)} instances; "
              f"det seqDG min {worst_det:.4f} (need 1/3); rand seqDG min mean {worst_rand:.4f} (need 0.45)")
    assert record_criterion(7, "baseline sanity", ok, detail)


def test_criterion_8_rounding():
    f = generate_instance(SUITE, 0)
    seeds = range(100_000)
    worst, ok = 0.0, True
    for k in range(10):
        x = uniform(k, Tag.CHECK, SUITE.n, index=8)
        within, mean, se = standard_error_ok(f.mask_values(rounding_masks(x, seeds)), f.value(x))
        ok &= within
        worst = max(worst, abs(mean - f.value(x)) / se)
    assert record_criterion(8, "independent rounding", ok,
                            f"10 points x 1e5 seeds, worst |mean - f(x)| = {worst:.2f} SE (need <= 3)")


def test_criterion_9_determinism(tmp_path):
    outputs = []
    for k in range(2):
        cfg = ExperimentConfig(**{**SUITE.__dict__, "out": str(tmp_path / f"run{k}"), "verify": True})
        run_experiment(cfg)
        files = sorted(p for p in (tmp_path / f"run{k}").rglob("*") if p.is_file())
        outputs.append({p.relative_to(tmp_path / f"run{k}"): p.read_bytes() for p in files})
    ok = outputs[0] == outputs[1] and len(outputs[0]) > 0
    assert record_criterion(9, "determinism", ok,
                            f"{len(outputs[0])} output files (CSV/JSON/traces) byte-identical: {ok}")
