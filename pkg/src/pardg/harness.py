"""Instance generation, experiment runs and result emission."""

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from pardg import baselines
from pardg.oracles import (VALUE, CountingOracle, CutOracle, InvalidInput, QuadraticDr, WeightedDigraph,
                           indicator, nonnegativity_offset)
from pardg.rng import Tag, uniform
from pardg.solver import SolverConfig, guess_m_and_solve, parallel_double_greedy
from pardg import verification as V

RESULTS_HEADER = "# pardg-results v1"
FAMILIES = ("directed_cut", "undirected_cut", "quadratic_dr")
ALGORITHMS = ("pardg", "pardg_guess", "seqdg", "seqdg_rand", "random_half")
# constant in the acceptance reading of the (1/2 - O(eps)) guarantee
APPROX_CONSTANT = 5.0


@dataclass
class ExperimentConfig:
    instance_family: str = "directed_cut"
    n: int = 12
    instances: int = 50
    edge_probability: float = 0.5
    density: float = 0.5
    weight_max: float = 1.0
    unit_weights: bool = False
    seed: int = 0
    epsilons: list = field(default_factory=lambda: [0.2, 0.1, 0.05])
    algorithms: list = field(default_factory=lambda: ["pardg", "seqdg", "random_half"])
    line_search_depth: int = 4
    random_trials: int = 100
    grid_resolution: int = 10
    out: str = "results"
    verify: bool = False
    strict: bool = False
    timing: bool = False
    jobs: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.instance_family not in FAMILIES:
            raise InvalidInput(f"instance_family must be one of {FAMILIES}")
        if self.n < 1 or self.instances < 0:
            raise InvalidInput("n must be >= 1 and instances >= 0")
        for name in ("edge_probability", "density"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidInput(f"{name} must lie in [0, 1]")
        if not self.weight_max > 0:
            raise InvalidInput("weight_max must be positive")
        if not self.epsilons:
            raise InvalidInput("epsilon list is empty")
        if not self.algorithms:
            raise InvalidInput("algorithm list is empty")
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise InvalidInput(f"unknown algorithms {sorted(unknown)}; choose from {ALGORITHMS}")
        for e in self.epsilons:
            SolverConfig(epsilon=e, M=1.0)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidInput(f"unknown config keys {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass
class ResultRow:
    instance: int
    algorithm: str
    epsilon: float
    value: float
    opt: Optional[float]
    opt_kind: str  # "exact" | "vs-lower-bound" | "none"
    ratio: Optional[float]
    iterations: int
    adaptive_rounds: int
    value_queries: int
    gradient_queries: int
    wall_time: float = 0.0


RESULT_COLUMNS = [f.name for f in fields(ResultRow)]


# --------------------------------------------------------------------------
# instances


def generate_instance(config, index):
    """Deterministic instance number ``index`` of the configured family."""
    n = config.n
    if config.instance_family in ("directed_cut", "undirected_cut"):
        directed = config.instance_family == "directed_cut"
        pairs = [(u, v) for u in range(n) for v in range(n) if (u != v if directed else u < v)]
        draws = uniform(config.seed, Tag.GRAPH, 2 * len(pairs), index=index).reshape(-1, 2) if pairs else np.zeros((0, 2))
        edges = []
        for (u, v), (keep, wu) in zip(pairs, draws):
            if keep < config.edge_probability:
                w = 1.0 if config.unit_weights else config.weight_max * (1.0 - wu)
                edges.append((u, v, w))
        return CutOracle(WeightedDigraph.from_edges(n, edges, directed=directed))
    draws = uniform(config.seed, Tag.QUADRATIC, 2 * n * n + n, index=index)
    mask = draws[: n * n].reshape(n, n) < config.density
    A = np.where(mask, draws[n * n: 2 * n * n].reshape(n, n), 0.0)
    b = 2.0 * draws[2 * n * n:] - 1.0
    return QuadraticDr(nonnegativity_offset(b, A), b, A)


def instance_text(oracle):
    return oracle.graph.dumps() if isinstance(oracle, CutOracle) else oracle.dumps()


def instance_filename(config, index):
    ext = "quad" if config.instance_family == "quadratic_dr" else "graph"
    return f"inst_{index:04d}.{ext}"


def load_instance(path):
    text = Path(path).read_text()
    if str(path).endswith(".quad"):
        return QuadraticDr.loads(text)
    return CutOracle(WeightedDigraph.loads(text))


def write_instances(config, out_dir=None):
    out = Path(out_dir or config.out) / "instances"
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(config.instances):
        p = out / instance_filename(config, i)
        p.write_text(instance_text(generate_instance(config, i)))
        paths.append(p)
    return paths


def reference_optimum(oracle, config):
    """``(opt, opt_kind, x_star)``; brute force for cuts, grid lower bound for small quadratics."""
    if isinstance(oracle, CutOracle) and oracle.n <= baselines.MAX_BRUTE_FORCE_N:
        res = baselines.brute_force_opt(oracle, oracle.n)
        return res.opt_value, "exact", indicator(res.best_set, oracle.n)
    if isinstance(oracle, QuadraticDr) and oracle.n <= baselines.MAX_GRID_N:
        point, val = baselines.grid_search_opt(oracle, oracle.n, config.grid_resolution)
        return val, "vs-lower-bound", point
    return None, "none", None


# --------------------------------------------------------------------------
# runs


def _ratio(value, opt):
    if opt is None or opt <= 0:
        return None
    return value / opt


def _run_instance(args):
    config, index = args
    oracle = generate_instance(config, index)
    opt, opt_kind, x_star = reference_optimum(oracle, config)
    rows, traces, checks = [], [], []
    for alg in config.algorithms:
        for eps in config.epsilons:
            start = time.perf_counter()
            iterations, stats, trace = 0, None, None
            if alg == "pardg" and opt_kind == "exact" and opt > 0:
                _, trace = parallel_double_greedy(
                    oracle, SolverConfig(eps, opt, line_search_depth=config.line_search_depth))
                value, iterations, stats = trace.value, trace.iterations, trace.stats
            elif alg in ("pardg", "pardg_guess"):
                counter = CountingOracle(oracle)
                _, gtraces = guess_m_and_solve(counter, eps, line_search_depth=config.line_search_depth)
                value = max(t.value for t in gtraces)
                iterations = sum(t.iterations for t in gtraces)
                # bound queries (in counter) plus every guess's own run
                stats = _sum_stats([counter.stats] + [t.stats for t in gtraces])
                if config.verify:
                    checks.extend(_guess_checks(index, alg, eps, oracle, gtraces, config))
            elif alg == "seqdg":
                counter = CountingOracle(oracle)
                S = baselines.sequential_double_greedy(counter, oracle.n)
                value, stats = oracle.set_value(S), counter.stats
            elif alg == "seqdg_rand":
                vals, stats = [], None
                for s in range(config.random_trials):
                    counter = CountingOracle(oracle)
                    S = baselines.sequential_double_greedy(counter, oracle.n, randomized=True, seed=s)
                    vals.append(oracle.set_value(S))
                    stats = stats or counter.stats
                value = float(np.mean(vals))
            else:  # random_half: never queries f; value averaged over trials for reporting
                masks = baselines.random_half_masks(oracle.n, range(config.random_trials))
                value = float(np.mean(oracle.mask_values(masks)))
                stats = CountingOracle(oracle).stats
            wall = time.perf_counter() - start
            rows.append(ResultRow(index, alg, eps, float(value), opt, opt_kind, _ratio(value, opt),
                                  iterations, stats.adaptive_rounds, stats.value_queries,
                                  stats.gradient_queries, wall))
            if config.verify and trace is not None:
                traces.append((index, alg, eps, trace.to_csv()))
                checks.extend(_trace_checks(index, alg, eps, oracle, trace, opt, x_star, config))
    return rows, traces, checks


def _sum_stats(stats_iter):
    from pardg.oracles import OracleStats
    total = OracleStats()
    for s in stats_iter:
        total.value_queries += s.value_queries
        total.gradient_queries += s.gradient_queries
        total.adaptive_rounds += s.adaptive_rounds
    return total


def approximation_report(value, opt, eps, M, constant=APPROX_CONSTANT):
    """``value >= (1/2 - constant*eps) opt - eps M`` as a CheckReport."""
    bound = (0.5 - constant * eps) * opt - eps * M
    return V.CheckReport("approximation", bool(value >= bound), bound - value, 1,
                         f"value={value:.6g} bound={bound:.6g}", 0.0, 0)


def _guess_checks(index, alg, eps, oracle, traces, config):
    """Checks that hold for every guess of ``M``, with no reference optimum."""
    reports = []
    for j, t in enumerate(traces):
        for r in (V.check_round_budget(t.stats, eps, t.iterations, config.line_search_depth),
                  V.check_trajectory_shape(t, oracle)):
            r.name = f"inst{index:04d}/{alg}/eps{eps:g}/guess{j}/{r.name}"
            reports.append(r)
    return reports


def _trace_checks(index, alg, eps, oracle, trace, opt, x_star, config):
    reports = [
        approximation_report(trace.value, opt, eps, trace.config.M),
        V.check_round_budget(trace.stats, eps, trace.iterations, config.line_search_depth),
        V.check_potential_decay(trace, eps, M=opt),
        V.check_disc_invariant(trace, oracle, x_star, eps, M=opt),
        V.check_trajectory_shape(trace, oracle),
    ]
    for r in reports:
        r.name = f"inst{index:04d}/{alg}/eps{eps:g}/{r.name}"
    return reports


def run_experiment(config, write=True):
    """Run every instance x algorithm x epsilon; return ``(rows, reports)``.

    With ``write``, emits ``results.csv``, ``summary.json``, ``summary.txt``
    and, under ``verify``, ``traces/*.csv`` and ``checks.jsonl`` to ``config.out``.
    """
    jobs = [(config, i) for i in range(config.instances)]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as ex:
            outs = list(ex.map(_run_instance, jobs))
    else:
        outs = [_run_instance(j) for j in jobs]
    rows = [r for o in outs for r in o[0]]
    traces = [t for o in outs for t in o[1]]
    reports = [c for o in outs for c in o[2]]
    if write:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.csv").write_text(results_csv(rows, timing=config.timing))
        if rows:
            text, summary = emit_summary(rows)
            (out / "summary.txt").write_text(text)
            (out / "summary.json").write_text(json.dumps(summary, sort_keys=True, indent=1) + "\n")
        if config.verify:
            tdir = out / "traces"
            tdir.mkdir(exist_ok=True)
            for index, alg, eps, text in traces:
                (tdir / f"inst_{index:04d}_{alg}_eps{eps:g}.csv").write_text(text)
            (out / "checks.jsonl").write_text("".join(r.to_json() + "\n" for r in reports))
    return rows, reports


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def results_csv(rows, timing=False):
    cols = RESULT_COLUMNS if timing else [c for c in RESULT_COLUMNS if c != "wall_time"]
    buf = io.StringIO()
    buf.write(RESULTS_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in cols])
    return buf.getvalue()


def read_results_csv(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != RESULTS_HEADER:
        raise InvalidInput(f"missing '{RESULTS_HEADER}' header")
    rows = []
    for rec in csv.DictReader(lines[1:]):
        def num(k, cast=float):
            v = rec.get(k, "")
            return cast(v) if v != "" else None
        rows.append(ResultRow(
            instance=int(rec["instance"]), algorithm=rec["algorithm"], epsilon=float(rec["epsilon"]),
            value=float(rec["value"]), opt=num("opt"), opt_kind=rec["opt_kind"], ratio=num("ratio"),
            iterations=int(rec["iterations"]), adaptive_rounds=int(rec["adaptive_rounds"]),
            value_queries=int(rec["value_queries"]), gradient_queries=int(rec["gradient_queries"]),
            wall_time=num("wall_time") or 0.0))
    return rows


def emit_summary(rows):
    """Per (algorithm, epsilon): min/mean ratio, mean iterations and rounds. Returns ``(text, dict)``."""
    if not rows:
        raise InvalidInput("no results to summarise")
    groups = {}
    for r in rows:
        groups.setdefault((r.algorithm, r.epsilon), []).append(r)
    summary = []
    for (alg, eps) in sorted(groups):
        g = groups[(alg, eps)]
        ratios = [r.ratio for r in g if r.ratio is not None]
        summary.append({
            "algorithm": alg,
            "epsilon": eps,
            "runs": len(g),
            "min_ratio": min(ratios) if ratios else None,
            "mean_ratio": float(np.mean(ratios)) if ratios else None,
            "mean_value": float(np.mean([r.value for r in g])),
            "mean_iterations": float(np.mean([r.iterations for r in g])),
            "mean_adaptive_rounds": float(np.mean([r.adaptive_rounds for r in g])),
            "max_adaptive_rounds": max(r.adaptive_rounds for r in g),
        })
    head = f"{'algorithm':<12} {'eps':>6} {'runs':>5} {'min_ratio':>10} {'mean_ratio':>10} {'mean_iter':>10} {'mean_rounds':>11}"
    lines = [head, "-" * len(head)]
    for s in summary:
        mr = "-" if s["min_ratio"] is None else f"{s['min_ratio']:.4f}"
        ar = "-" if s["mean_ratio"] is None else f"{s['mean_ratio']:.4f}"
        lines.append(f"{s['algorithm']:<12} {s['epsilon']:>6g} {s['runs']:>5d} {mr:>10} {ar:>10} "
                     f"{s['mean_iterations']:>10.2f} {s['mean_adaptive_rounds']:>11.2f}")
    return "\n".join(lines) + "\n", {"schema": "pardg-summary v1", "groups": summary}


# --------------------------------------------------------------------------
# preliminaries suite


def preliminaries_reports(oracle, x_star, samples=100, seed=0, tag=""):
    reports = [
        V.check_dr(oracle, oracle.n, samples, seed),
        V.check_concavity_bounds(oracle, samples, seed),
        V.check_gradient(oracle, samples, seed),
    ]
    if x_star is not None:
        reports.append(V.check_x_or_opt(oracle, x_star, samples, seed))
    for r in reports:
        r.name = f"{tag}{r.name}"
    return reports


def verify_suite(config, samples=100):
    """Preliminaries checks on every generated instance plus solver-trace checks."""
    reports = []
    for i in range(config.instances):
        oracle = generate_instance(config, i)
        _, kind, x_star = reference_optimum(oracle, config)
        reports.extend(preliminaries_reports(oracle, x_star if kind == "exact" else None,
                                             samples, seed=i, tag=f"inst{i:04d}/"))
    cfg = ExperimentConfig(**{**asdict(config), "verify": True, "algorithms": ["pardg"]})
    _, trace_reports = run_experiment(cfg, write=False)
    return reports + trace_reports
