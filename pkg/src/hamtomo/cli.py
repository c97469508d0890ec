"""Command-line entry point: ``hamtomo {generate,scan,pair,field,verify}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from .estimation import EstimationReport
from .experiment import ExperimentConfig, TomographyExperiment
from .spin_system import random_instance, save

log = logging.getLogger("hamtomo")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON/YAML experiment config")
    p.add_argument("--hamiltonian", help="Hamiltonian JSON document (default: random instance)")
    p.add_argument("--n-spins", type=int)
    p.add_argument("--hamiltonian-seed", type=int)
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--tau-j", type=float, dest="tau")
    p.add_argument("--shots", type=int, dest="n_shots")
    p.add_argument("--timepoints", type=int, dest="n_timepoints")
    p.add_argument("--error-model", choices=["npe", "sae", "rae", "rre"])
    p.add_argument("--error-mag", type=float)
    p.add_argument("--scheme", choices=["environment", "global-cancel"], dest="field_scheme")
    p.add_argument("--bootstrap", type=int, dest="n_bootstrap")
    p.add_argument("--variants", nargs="+", choices=["xx-yy", "xy-yz", "yx-zy"])
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int)


_OVERRIDES = ("hamiltonian", "n_spins", "hamiltonian_seed", "seed", "tau", "n_shots", "n_timepoints",
              "error_model", "error_mag", "field_scheme", "n_bootstrap", "variants", "out", "jobs")


def build_config(args, **extra) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    updates = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    updates.update({k: v for k, v in extra.items() if v is not None})
    return replace(cfg, **updates)


def _print_report(report: EstimationReport) -> None:
    print(f"{'parameter':<14}{'truth':>10}{'estimate':>12}{'sigma':>10}  flags")
    for e in report.entries:
        truth = "" if e.truth is None else f"{e.truth:.4f}"
        print(f"{e.name:<14}{truth:>10}{e.estimate:>12.4f}{e.sigma:>10.4f}  {','.join(e.flags)}")
    summary = report.summary()
    if summary["average_deviation"] is not None:
        print(f"average deviation {100 * summary['average_deviation']:.2f}% "
              f"(mean |est - truth| = {summary['mean_abs_deviation']:.4f} J)")


def _run(cfg: ExperimentConfig) -> int:
    exp = TomographyExperiment(cfg)
    report = exp.run_full_scan()
    _print_report(report)
    if cfg.out:
        out = exp.write_outputs(report, cfg.out)
        print(f"wrote {out}/report.csv, summary.json and {len(exp.curves)} curve(s)")
    return 0


def cmd_generate(args) -> int:
    sys_ = random_instance(args.n_spins, args.seed)
    save(sys_, args.output)
    print(f"wrote {sys_.n_coefficients} coefficients for {sys_.n_spins} spins to {args.output}")
    return 0


def cmd_scan(args) -> int:
    pairs = [tuple(p) for p in args.pairs] if args.pairs else None
    return _run(build_config(args, pairs=pairs, spins=args.spins))


def cmd_pair(args) -> int:
    return _run(build_config(args, pairs=[(args.i, args.j)], spins=[]))


def cmd_field(args) -> int:
    return _run(build_config(args, pairs=[], spins=[args.i]))


def cmd_verify(args) -> int:
    from . import verify

    failed = 0
    suites = args.suite or ["oracle", "survival", "scaling"]
    if "oracle" in suites:
        cases = verify.oracle_equivalence(args.cases, args.seed or 0)
        worst = max(c.distance for c in cases)
        ok = worst <= 1e-9
        failed += not ok
        print(f"[{'PASS' if ok else 'FAIL'}] oracle equivalence: {len(cases)} cases, worst trace distance {worst:.2e}")
    if "survival" in suites:
        rows = verify.variant_survival_table()
        bad = [r for r in rows if not r.ok]
        failed += bool(bad)
        print(f"[{'PASS' if not bad else 'FAIL'}] variant survival: {len(rows) - len(bad)}/{len(rows)} match the commutation rule")
        for r in rows:
            print(f"    {r.variant}  {r.term}  commutes={r.commutes!s:<5}  survived={r.survived!s:<5}  removed={r.removed}")
    if "scaling" in suites:
        for kind, want in (("xy8", 3.0), ("xy4", 2.0)):
            res = verify.remnant_scaling(kind)
            ok = abs(res.slope - want) <= 0.4
            failed += not ok
            devs = ", ".join(f"{d:.2e}" for d in res.deviations)
            print(f"[{'PASS' if ok else 'FAIL'}] {kind} remnant scaling slope {res.slope:.2f} (expect {want:g} +/- 0.4); D = {devs}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hamtomo", description="DD-based Hamiltonian tomography simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a random Hamiltonian document")
    p.add_argument("--n-spins", type=int, default=12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", dest="output", required=True, help="output JSON file")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("scan", help="full or partial tomography")
    _common(p)
    p.add_argument("--pairs", type=int, nargs=2, action="append", metavar=("I", "J"))
    p.add_argument("--spins", type=int, nargs="+")
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("pair", help="nine couplings of one pair")
    p.add_argument("i", type=int)
    p.add_argument("j", type=int)
    _common(p)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("field", help="local field of one spin")
    p.add_argument("i", type=int)
    _common(p)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("verify", help="oracle, survival-table and scaling suites")
    p.add_argument("--suite", action="append", choices=["oracle", "survival", "scaling"])
    p.add_argument("--cases", type=int, default=50)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    np.set_printoptions(precision=4)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
