"""Four benchmark starts under zero, constant-vertex and random disturbances.

Writes one CSV per run and a metrics table to ``--out`` (default ./benchmark_out).
"""
import argparse
from pathlib import Path

import numpy as np

from dubins_smc import fileio
from dubins_smc.controller import BENCHMARK_BOUNDS, benchmark_params
from dubins_smc.plant import DisturbanceSignal
from dubins_smc.sim import BENCHMARK_STARTS, benchmark_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--law", choices=("sign", "saturated"), default="sign")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="benchmark_out")
    args = ap.parse_args()

    params = benchmark_params(law=args.law)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    signals = {
        "zero": DisturbanceSignal.zero(BENCHMARK_BOUNDS),
        "vertex": DisturbanceSignal.constant(0.1, -0.1, BENCHMARK_BOUNDS),
        "random": DisturbanceSignal.uniform_random(BENCHMARK_BOUNDS, seed=args.seed),
    }
    print(f"{'signal':<8} {'start':<16} {'status':<10} {'t_conv':>7} {'max|y| after':>13} {'switches':>9}")
    for name, sig in signals.items():
        for (y0, th0), log in zip(BENCHMARK_STARTS, benchmark_suite(params, sig)):
            fileio.write_csv(log, out / f"{name}_{y0:+.1f}_{np.degrees(th0):+.0f}.csv")
            m = log.metrics
            tc = f"{m['convergence_time']:.2f}" if m["convergence_time"] is not None else "-"
            ya = f"{m['max_abs_y_after']:.4f}" if m["max_abs_y_after"] is not None else "-"
            print(f"{name:<8} ({y0:+.1f}, {np.degrees(th0):+.0f} deg)  {log.status:<10} {tc:>7} {ya:>13} "
                  f"{m['sign_switches']:>9}")


if __name__ == "__main__":
    main()
