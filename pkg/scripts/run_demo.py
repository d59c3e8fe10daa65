"""Run the bundled QUBO demo (SA vs greedy, n=24, 50 ms, 20 instances, tau=0.70).

    python scripts/run_demo.py --out runs/demo
    python scripts/run_demo.py --out runs/demo_iter --iteration-budget 2000
"""
import argparse
import time

from matchbench.bench import DEMO_MANIFEST, run_bench
from matchbench.harness import RunManifest


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs/demo")
    ap.add_argument("--iteration-budget", type=int, default=None,
                    help="fixed flip count per solve; makes reruns bit-identical")
    ap.add_argument("--seed", type=int, default=None)
    args = ap.parse_args()

    manifest = RunManifest.from_dict(DEMO_MANIFEST)
    if args.iteration_budget is not None:
        manifest = manifest.with_overrides(iteration_budget=args.iteration_budget)
    if args.seed is not None:
        manifest = manifest.with_overrides(master_seed=args.seed)

    t0 = time.perf_counter()
    outcome = run_bench(manifest, args.out, sweep_taus=(0.5, 0.6, 0.7, 0.8, 0.9))
    wall = time.perf_counter() - t0

    for name, row in outcome.report["summary"].items():
        print(f"{name:8s} mean q={row['mean_quality']:.4f}  mean t={row['mean_time_s']:.4f}s")
    for entry in outcome.report.get("speedup", []):
        ci = entry["ci"]
        print(f"S_norm({entry['tau']}) {entry['solver_a']}/{entry['solver_b']} = "
              f"{entry['value']}  CI [{ci['lower']}, {ci['upper']}]")
    print(f"{len(outcome.records)} records in {wall:.2f}s -> {args.out}")


if __name__ == "__main__":
    main()
