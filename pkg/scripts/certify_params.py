"""Certificate outcomes over a (p, q) grid at fixed disturbance bounds."""
import argparse

import numpy as np

from dubins_smc import controller as ctl
from dubins_smc.invariant import InvariantSetSpec, attractiveness_certificate, nagumo_certificate
from dubins_smc.plant import DisturbanceBounds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d1", type=float, default=0.1)
    ap.add_argument("--d2", type=float, default=0.1)
    ap.add_argument("--kappa-max", type=float, default=0.5, help="curvature to certify for (benchmark: 0.5)")
    ap.add_argument("--mode", choices=("proof", "exact"), default="proof")
    args = ap.parse_args()
    bounds = DisturbanceBounds(args.d1, args.d2)
    print(f"min p = {ctl.min_p(bounds):.4f}, q window = {np.round(ctl.q_window(bounds), 4)}")
    ps = np.round(np.arange(0.0, 0.45, 0.05), 2)
    qs = np.round(np.arange(0.05, 1.0, 0.1), 2)
    print("rows p, columns q; N = invariance fails, A = attractiveness fails, . = both pass, x = gate")
    print("      " + " ".join(f"{q:4.2f}" for q in qs))
    for p in ps:
        row = []
        for q in qs:
            params = ctl.ControllerParams(p=p, q=q)
            if args.kappa_max * ctl.min_path_radius(params) > 1:
                row.append("   x")
                continue
            n = nagumo_certificate(InvariantSetSpec.from_params(params), params, bounds, args.kappa_max)
            a = attractiveness_certificate(params, bounds, args.kappa_max, mode=args.mode)
            row.append(f"{('N' if not n.passed else '') + ('A' if not a.passed else '') or '.':>4}")
        print(f"{p:4.2f}  " + " ".join(row))


if __name__ == "__main__":
    main()
