"""Reference-instance tomography of one pair and one spin under each pulse-error model.

Prints a table with one column per error model (estimate(sigma) per parameter
and the average deviation) and writes per-model outputs under --out.

    python scripts/reproduce_table.py --out runs/table
"""

import argparse
import time

from hamtomo.evolution import Propagator
from hamtomo.experiment import ExperimentConfig, TomographyExperiment
from hamtomo.verify import REFERENCE_PAIR, REFERENCE_SPIN, reference_system

MODELS = [("npe", 0.0), ("sae", 0.05), ("rae", 0.01), ("rre", 0.01)]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--hamiltonian-seed", type=int, default=2016)
    ap.add_argument("--bootstrap", type=int, default=1000)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    sys = reference_system(args.hamiltonian_seed)
    t0 = time.perf_counter()
    prop = Propagator(sys, 0.01)
    print(f"diagonalized H (dim {prop.dim}) in {time.perf_counter() - t0:.0f} s")

    columns = {}
    for model, mag in MODELS:
        cfg = ExperimentConfig(n_spins=12, pairs=[REFERENCE_PAIR], spins=[REFERENCE_SPIN], variants=["xx-yy"],
                               error_model=model, error_mag=mag, seed=args.seed, n_bootstrap=args.bootstrap,
                               jobs=args.jobs)
        exp = TomographyExperiment(cfg, sys, prop)
        rep = exp.run_full_scan()
        columns[rep.meta["error_model"]] = rep
        print(f"{rep.meta['error_model']:<10} AD {100 * rep.average_deviation():.2f}%  {rep.meta['wall_clock_s']:.0f} s")
        if args.out:
            exp.write_outputs(rep, f"{args.out}/{model}")

    names = [e.name for e in next(iter(columns.values())).entries]
    head = f"{'parameter':<10}{'true':>8}" + "".join(f"{m:>16}" for m in columns)
    print("\n" + head)
    for k, name in enumerate(names):
        truth = next(iter(columns.values())).entries[k].truth
        cells = "".join(f"{rep.entries[k].estimate:>10.3f}({1000 * rep.entries[k].sigma:>3.0f})" for rep in columns.values())
        print(f"{name:<10}{truth:>8.3f}{cells}")
    print(f"{'AD':<18}" + "".join(f"{100 * rep.average_deviation():>15.1f}%" for rep in columns.values()))


if __name__ == "__main__":
    main()
