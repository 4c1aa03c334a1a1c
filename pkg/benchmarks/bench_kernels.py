"""Time the compiled and numpy kernel backends on the same inputs.

    python3 benchmarks/bench_kernels.py [--n 14] [--repeat 5]

Prints one line per kernel and backend, and checks that both backends
return bit-identical results.
"""

import argparse
import timeit

import numpy as np

from pardg.harness import ExperimentConfig, generate_instance
from pardg.kernels import backends
from pardg.rng import Tag, uniform


def _cases(n, rows):
    g = generate_instance(ExperimentConfig(n=n, instances=1, edge_probability=0.5), 0).graph
    q = generate_instance(ExperimentConfig(instance_family="quadratic_dr", n=n, instances=1), 0)
    x = uniform(0, Tag.CHECK, n)
    X = uniform(1, Tag.CHECK, rows * n).reshape(rows, n)
    cut = (g.tails, g.heads, g.weights)
    return {
        "cut_value": lambda k: k.cut_value(*cut, x, g.directed),
        "cut_gradient": lambda k: k.cut_gradient(*cut, x, g.directed),
        f"cut_values[{rows}]": lambda k: k.cut_values(*cut, X, g.directed),
        f"brute_force_cut[n={n}]": lambda k: k.brute_force_cut(*cut, n, g.directed),
        "quad_value": lambda k: k.quad_value(q.c, q.b, q.A, x),
        "quad_gradient": lambda k: k.quad_gradient(q.b, q.A, x),
        f"quad_values[{rows}]": lambda k: k.quad_values(q.c, q.b, q.A, X),
    }


def _same(a, b):
    if isinstance(a, tuple):
        return a == b
    return np.array_equal(np.asarray(a), np.asarray(b))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=14)
    ap.add_argument("--rows", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    impls = backends()
    if "cython" not in impls:
        print("compiled backend not built; timing the numpy fallback only")
    print(f"{'kernel':<24} " + " ".join(f"{b:>12}" for b in impls) + "   speedup  identical")
    for name, fn in _cases(args.n, args.rows).items():
        times, outs = [], []
        for k in impls.values():
            number = 1 if name.startswith("brute") else 50
            t = min(timeit.repeat(lambda: fn(k), number=number, repeat=args.repeat)) / number
            times.append(t)
            outs.append(fn(k))
        same = all(_same(o, outs[0]) for o in outs)
        speed = f"{times[0] / times[-1]:8.1f}x" if len(times) > 1 else "       -"
        print(f"{name:<24} " + " ".join(f"{t * 1e6:10.1f}us" for t in times) + f"  {speed}  {same}")


if __name__ == "__main__":
    main()
