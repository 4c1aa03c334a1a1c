import json

import numpy as np
import pytest

from pardg import cli
from pardg.harness import (RESULTS_HEADER, ExperimentConfig, ResultRow, emit_summary, generate_instance,
                           load_instance, read_results_csv, results_csv, run_experiment, write_instances)
from pardg.oracles import InvalidInput


def small(**kw):
    base = dict(n=6, instances=4, epsilons=[0.2], algorithms=["pardg", "seqdg", "random_half"],
                random_trials=20)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.mark.parametrize("kw", [dict(algorithms=[]), dict(epsilons=[]), dict(n=0),
                                dict(edge_probability=1.5), dict(instance_family="hypergraph"),
                                dict(algorithms=["simplex"]), dict(epsilons=[0.5])])
def test_config_validation(kw):
    with pytest.raises(InvalidInput):
        small(**kw)


def test_config_from_dict_rejects_unknown_keys():
    with pytest.raises(InvalidInput):
        ExperimentConfig.from_dict({"n": 4, "colour": "blue"})


def test_generate_edge_cases():
    assert generate_instance(small(edge_probability=0.0), 0).graph.m == 0
    g = generate_instance(small(n=3, edge_probability=1.0), 0).graph
    assert g.m == 6 and g.directed
    g = generate_instance(small(n=4, edge_probability=1.0, instance_family="undirected_cut"), 0).graph
    assert g.m == 6 and not g.directed
    g = generate_instance(small(unit_weights=True, edge_probability=1.0), 0).graph
    assert set(g.weights.tolist()) == {1.0}


def test_generated_weights_in_range():
    g = generate_instance(small(n=12, weight_max=3.0), 1).graph
    assert g.m and np.all(g.weights > 0) and np.all(g.weights <= 3.0)


def test_generated_quadratic_is_valid():
    Q = generate_instance(small(instance_family="quadratic_dr", density=0.4), 2)
    assert np.all(Q.A >= 0) and np.all(np.abs(Q.b) <= 1)
    assert generate_instance(small(instance_family="quadratic_dr", density=0.0), 0).A.sum() == 0


def test_instances_are_deterministic_and_distinct():
    cfg = small()
    assert generate_instance(cfg, 0).graph.dumps() == generate_instance(cfg, 0).graph.dumps()
    assert generate_instance(cfg, 0).graph.dumps() != generate_instance(cfg, 1).graph.dumps()
    assert generate_instance(small(seed=1), 0).graph.dumps() != generate_instance(cfg, 0).graph.dumps()


def test_instance_files_round_trip(tmp_out):
    for family in ("directed_cut", "quadratic_dr"):
        cfg = small(instance_family=family, out=str(tmp_out / family))
        paths = write_instances(cfg)
        assert len(paths) == cfg.instances
        loaded = load_instance(paths[1])
        X = np.random.default_rng(0).random((5, cfg.n))
        assert loaded.values(X).tolist() == generate_instance(cfg, 1).values(X).tolist()


def test_run_experiment_rows_and_order(tmp_out):
    cfg = small(out=str(tmp_out), epsilons=[0.2, 0.1])
    rows, reports = run_experiment(cfg)
    assert len(rows) == 4 * 3 * 2 and reports == []
    keys = [(r.instance, cfg.algorithms.index(r.algorithm), cfg.epsilons.index(r.epsilon)) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        assert r.opt_kind == "exact" and 0 <= r.ratio <= 1 + 1e-9
        assert r.adaptive_rounds <= r.value_queries + r.gradient_queries
    assert all(r.adaptive_rounds == 0 for r in rows if r.algorithm == "random_half")
    text = (tmp_out / "results.csv").read_text()
    assert text.startswith(RESULTS_HEADER + "\n") and "wall_time" not in text
    assert read_results_csv(text) == [ResultRow(**{**r.__dict__, "wall_time": 0.0}) for r in rows]


def test_run_experiment_is_byte_deterministic(tmp_path):
    outs = []
    for k in range(2):
        cfg = small(out=str(tmp_path / str(k)), verify=True)
        run_experiment(cfg)
        outs.append([(tmp_path / str(k) / name).read_bytes()
                     for name in ("results.csv", "summary.json", "summary.txt", "checks.jsonl")])
    assert outs[0] == outs[1]


def test_parallel_jobs_match_serial(tmp_path):
    a, _ = run_experiment(small(out=str(tmp_path / "a")), write=False)
    b, _ = run_experiment(small(out=str(tmp_path / "b"), jobs=2), write=False)
    assert [(r.instance, r.algorithm, r.value) for r in a] == [(r.instance, r.algorithm, r.value) for r in b]


def test_timing_column_opt_in(tmp_out):
    run_experiment(small(out=str(tmp_out), timing=True, instances=1))
    assert "wall_time" in (tmp_out / "results.csv").read_text().splitlines()[1]


def test_verify_writes_traces_and_checks(tmp_out):
    run_experiment(small(out=str(tmp_out), verify=True))
    checks = [json.loads(ln) for ln in (tmp_out / "checks.jsonl").read_text().splitlines()]
    assert checks and all(c["passed"] for c in checks)
    assert {c["name"].rsplit("/", 1)[1] for c in checks} == {
        "approximation", "round_budget", "potential_decay", "disc_invariant", "trajectory_shape"}
    traces = sorted((tmp_out / "traces").iterdir())
    assert len(traces) == 4 and traces[0].read_text().startswith("t,phi,")


def test_quadratic_family_uses_lower_bound_and_guessing():
    cfg = small(instance_family="quadratic_dr", n=3, instances=2, grid_resolution=8,
                algorithms=["pardg", "pardg_guess", "seqdg_rand"], verify=True)
    rows, reports = run_experiment(cfg, write=False)
    assert all(r.opt_kind == "vs-lower-bound" for r in rows)
    pardg = [r for r in rows if r.algorithm == "pardg"]
    guess = [r for r in rows if r.algorithm == "pardg_guess"]
    assert [r.value for r in pardg] == [r.value for r in guess]
    assert reports and all(r.passed for r in reports)


def test_large_quadratic_has_no_reference():
    rows, _ = run_experiment(small(instance_family="quadratic_dr", n=8, instances=1,
                                   algorithms=["seqdg"]), write=False)
    assert rows[0].opt is None and rows[0].ratio is None and rows[0].opt_kind == "none"


def test_summary_single_row():
    row = ResultRow(0, "pardg", 0.1, 2.0, 4.0, "exact", 0.5, 3, 12, 40, 6)
    text, summary = emit_summary([row])
    g = summary["groups"][0]
    assert g["min_ratio"] == g["mean_ratio"] == 0.5
    assert g["mean_iterations"] == 3 and g["mean_adaptive_rounds"] == 12
    assert "pardg" in text
    with pytest.raises(InvalidInput):
        emit_summary([])


def test_random_half_ratio_on_complete_digraphs():
    cfg = small(n=6, instances=5, edge_probability=1.0, unit_weights=True, algorithms=["random_half"],
                random_trials=2000)
    rows, _ = run_experiment(cfg, write=False)
    _, summary = emit_summary(rows)
    assert summary["groups"][0]["mean_ratio"] >= 0.2


def test_rounds_grow_like_log_over_eps():
    cfg = small(n=10, instances=10, epsilons=[0.2, 0.1, 0.05], algorithms=["pardg"], unit_weights=True)
    rows, _ = run_experiment(cfg, write=False)
    _, summary = emit_summary(rows)
    mean = {g["epsilon"]: g["mean_adaptive_rounds"] for g in summary["groups"]}
    # fit c from the largest epsilon; smaller epsilons must stay within a constant factor of c log(1/eps)/eps
    c = mean[0.2] / (np.log(5) / 0.2)
    for eps, rounds in mean.items():
        assert rounds <= 4 * c * np.log(1 / eps) / eps


# cli


def test_cli_end_to_end(tmp_path, capsys):
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"n": 5, "instances": 2, "algorithms": ["pardg", "seqdg"], "random_trials": 5}))
    out = tmp_path / "o"
    assert cli.main(["gen", "--config", str(conf), "--out", str(out)]) == 0
    assert len(list((out / "instances").iterdir())) == 2
    assert cli.main(["run", "--config", str(conf), "--out", str(out), "--epsilon", "0.2,0.1",
                     "--verify", "--strict", "--seed", "3"]) == 0
    rows = read_results_csv((out / "results.csv").read_text())
    assert len(rows) == 2 * 2 * 2 and {r.epsilon for r in rows} == {0.2, 0.1}
    assert cli.main(["verify", "--config", str(conf), "--out", str(out), "--samples", "10", "--strict"]) == 0
    assert (out / "verify.jsonl").read_text().count("\n") > 0
    assert cli.main(["summary", str(out / "results.csv"), "--out", str(tmp_path / "s.json")]) == 0
    assert json.loads((tmp_path / "s.json").read_text())["groups"]
    assert "pardg" in capsys.readouterr().out


def test_cli_errors(tmp_path, capsys):
    conf = tmp_path / "bad.json"
    conf.write_text(json.dumps({"algorithms": []}))
    assert cli.main(["run", "--config", str(conf), "--out", str(tmp_path)]) == 2
    assert "algorithm list is empty" in capsys.readouterr().err
    assert cli.main(["summary", str(tmp_path / "missing.csv")]) == 2
    with pytest.raises(SystemExit):
        cli.main(["run", "--epsilon", "a,b"])


def test_cli_strict_exit_on_failed_check(tmp_path, monkeypatch):
    from pardg import harness
    from pardg.verification import CheckReport

    def failing(*args, **kwargs):
        return [CheckReport("forced", False, 1.0, 1, tolerance=0.0)]

    monkeypatch.setattr(harness, "verify_suite", failing)
    args = ["verify", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    assert cli.main(args + ["--strict"]) == 1
