"""Sign-switch counts of the sign law against the boundary-layer law for several widths."""
import argparse

from dubins_smc.controller import BENCHMARK_BOUNDS, benchmark_params
from dubins_smc.plant import DisturbanceSignal
from dubins_smc.sim import benchmark_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--phi", type=float, nargs="*", default=[0.01, 0.05, 0.1])
    args = ap.parse_args()
    sig = DisturbanceSignal.uniform_random(BENCHMARK_BOUNDS, seed=args.seed)
    runs = [("sign", None)] + [("saturated", phi) for phi in args.phi]
    print(f"{'law':<10} {'phi':>5} {'switches':>30} {'max|y| after entry':>20} {'max|sigma| after entry':>23}")
    for law, phi in runs:
        logs = benchmark_suite(benchmark_params(law=law, phi=phi or 0.05), sig, record=True)
        sw = [lg.metrics["sign_switches"] for lg in logs]
        y_after = max(abs(lg.y_err[lg.t >= lg.metrics["first_entry_time"]]).max() for lg in logs)
        s_after = max(lg.metrics["max_abs_sigma_after_entry"] for lg in logs)
        print(f"{law:<10} {phi if phi else '-':>5} {str(sw):>30} {y_after:>20.4f} {s_after:>23.4f}")


if __name__ == "__main__":
    main()
