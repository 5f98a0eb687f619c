"""Time the pure-Python and compiled kernels on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--trials 20000] [--json out.json]
"""

import argparse
import json
import sys
import timeit

import numpy as np

from classfair import _kernels
from classfair.adversary import equal_filling_cef, example11_instance
from classfair.montecarlo import monte_carlo_ocs, monte_carlo_ranking


def random_graphs(seed, count, n_agents, n_items, p):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        like = rng.random((n_agents, n_items)) < p
        out.append([int(sum(1 << o for o in range(n_items) if like[a, o])) for a in range(n_agents)])
    return out


def cases(trials):
    graphs = random_graphs(0, 200, 10, 12, 0.4)
    full12 = (1 << 12) - 1
    small = random_graphs(1, 60, 4, 8, 0.5)
    mmm = random_graphs(2, 60, 8, 9, 0.4)
    ef = equal_filling_cef(6)
    ex = example11_instance()
    return {
        "max_matching x200 (10x12)": lambda k: [k.max_matching(g, full12) for g in graphs],
        "mms_value x60 (4 agents, 8 items, k=3)": lambda k: [k.mms_value(g, 8, 3) for g in small],
        "min_maximal_matching x60 (8x9)": lambda k: [k.min_maximal_matching(g, (1 << 9) - 1) for g in mmm],
        f"monte_carlo_ocs semi-ocs ({trials} trials)": lambda k: monte_carlo_ocs(ef, "semi-ocs", trials, 0, backend=k),
        f"monte_carlo_ranking ({trials} trials)": lambda k: monte_carlo_ranking(ex, trials, 0, backend=k),
    }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--trials", type=int, default=5000)
    p.add_argument("--json", help="also write results here")
    args = p.parse_args(argv)

    compiled = _kernels.compiled_backend
    if compiled is None:
        print("compiled extension not built; only the Python backend is available", file=sys.stderr)
    backends = {"python": _kernels.python_backend}
    if compiled is not None:
        backends["cython"] = compiled

    results = []
    print(f"{'case':<44}{'python s':>11}{'cython s':>11}{'speedup':>10}")
    for name, fn in cases(args.trials).items():
        row = {"case": name}
        for label, k in backends.items():
            row[label] = min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat))
        speed = row["python"] / row["cython"] if "cython" in row and row["cython"] > 0 else float("nan")
        row["speedup"] = speed
        results.append(row)
        print(f"{name:<44}{row['python']:>11.4f}{row.get('cython', float('nan')):>11.4f}{speed:>9.1f}x")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
