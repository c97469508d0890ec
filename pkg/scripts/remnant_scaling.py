"""Deviation of the decoupled pair evolution from the ideal two-spin evolution versus tau.

    python scripts/remnant_scaling.py
"""

import argparse

from hamtomo.verify import remnant_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n-spins", type=int, default=8)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--pulses", type=int, default=8)
    args = ap.parse_args()
    for kind in ("xy8", "xy4"):
        res = remnant_scaling(kind, n_spins=args.n_spins, seed=args.seed, n_pulses=args.pulses)
        print(f"{kind}: slope {res.slope:.2f}")
        for tau, dev in zip(res.taus, res.deviations):
            print(f"    tau J = {tau:<8g} trace distance {dev:.3e}")


if __name__ == "__main__":
    main()
