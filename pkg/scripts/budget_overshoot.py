"""Measure how far each bundled solver overruns a wall-clock budget."""
import argparse
import time

import numpy as np

from matchbench.harness import Budget
from matchbench.quantile import quantile
from matchbench.solvers import generate_qubo, solve_greedy, solve_sa


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--budget", type=float, default=0.05)
    ap.add_argument("--calls", type=int, default=100)
    ap.add_argument("--n", type=int, default=24)
    args = ap.parse_args()

    inst = generate_qubo(args.n, 0.25, 0)
    budget = Budget(args.budget)
    for solve in (solve_sa, solve_greedy):
        over = []
        for seed in range(args.calls):
            t0 = time.perf_counter()
            solve(inst, budget, seed)
            over.append(time.perf_counter() - t0 - budget.time_s)
        over_ms = np.array(over) * 1e3
        print(f"{solve.__name__:13s} overshoot ms: mean={over_ms.mean():.3f} "
              f"p95={quantile(over_ms.tolist(), 0.95):.3f} max={over_ms.max():.3f}")


if __name__ == "__main__":
    main()
