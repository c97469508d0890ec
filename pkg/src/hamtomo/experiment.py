"""End-to-end tomography runs: simulate DD experiments, sample shots, fit, bootstrap."""

from __future__ import annotations

import hashlib
import itertools
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import FitFailure, InsufficientDataError
from .estimation import (
    EstimationReport,
    ParamEstimate,
    bootstrap_sigma,
    couplings_from_frequencies,
    disambiguate_signs,
    fit_local_field,
    fit_sine,
    sign_time,
    variant_settings,
)
from .evolution import (
    Propagator,
    evolve_checkpoints,
    product_state,
    random_product_state,
    reduced_density,
)
from .measurement import MeasSetting, ShotRecord, outcome_probabilities, sample_shots
from .pulses import (
    AxisVariant,
    PulseErrorModel,
    environment_sequence,
    global_cancel_sequence,
    pair_sequence,
    realize_pulses,
)
from .spin_system import SpinSystem, load, random_instance

FIELD_SETTINGS = (MeasSetting(("0",), ("0",)), MeasSetting(("+",), ("+",)))
SIGN_SETTINGS = (MeasSetting(("+",), ("0",)), MeasSetting(("I",), ("0",)))


def child_seed(master: int, *label) -> int:
    """Seed for a task, derived from the master seed and a task label only."""
    digest = hashlib.sha256(repr((int(master),) + tuple(label)).encode()).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass
class ExperimentConfig:
    hamiltonian: str | None = None  # JSON document; random instance when None
    n_spins: int = 12
    hamiltonian_seed: int = 0
    tau: float = 0.01  # tau*J
    n_shots: int = 100
    n_timepoints: int = 50
    cycle_step: int = 2  # time points at cycle_step * (1..n_timepoints) XY-8 cycles
    error_model: str = "npe"
    error_mag: float = 0.0
    pairs: list | None = None  # None -> all pairs
    spins: list | None = None  # None -> all spins
    variants: list = field(default_factory=lambda: [v.value for v in AxisVariant])
    field_scheme: str = "environment"  # or "global-cancel"
    seed: int = 0
    out: str | None = None
    n_bootstrap: int = 1000
    env_init: str = "zero"  # or "random-product"
    independent_runs: bool | None = None  # None -> independent only for random pulse errors
    truncation_radius: int | None = None
    backend: str = "auto"
    jobs: int = 1
    free_amplitude: bool = False
    exact_probabilities: bool = False  # infinite-shot records, for systematic studies

    def __post_init__(self):
        if not 0 < self.tau <= 0.1:
            raise ValueError("tau*J must lie in (0, 0.1]")
        if self.n_shots < 1 or self.n_timepoints < 1 or self.cycle_step < 1:
            raise ValueError("n_shots, n_timepoints and cycle_step must be >= 1")
        if self.field_scheme not in ("environment", "global-cancel"):
            raise ValueError(f"unknown field scheme {self.field_scheme!r}")
        if self.env_init not in ("zero", "random-product"):
            raise ValueError(f"unknown environment initialization {self.env_init!r}")
        self.variants = [AxisVariant.parse(v).value for v in self.variants]
        if self.pairs is not None:
            self.pairs = [tuple(sorted((int(p[0]), int(p[1])))) for p in self.pairs]
        if self.spins is not None:
            self.spins = [int(s) for s in self.spins]
        PulseErrorModel(self.error_model, self.error_mag)

    @property
    def error(self) -> PulseErrorModel:
        return PulseErrorModel(self.error_model, self.error_mag)

    @property
    def cycle_grid(self) -> np.ndarray:
        return self.cycle_step * np.arange(1, self.n_timepoints + 1)

    @property
    def times(self) -> np.ndarray:
        return 8 * self.cycle_grid * self.tau

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        text = path.read_text()
        if path.suffix in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config key(s) {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Curve:
    name: str
    record: ShotRecord
    p_fit: np.ndarray | None = None


class TomographyExperiment:
    """Holds the Hamiltonian and the shared (read-only) propagator for one config."""

    def __init__(self, cfg: ExperimentConfig, system: SpinSystem | None = None,
                 propagator: Propagator | None = None):
        self.cfg = cfg
        if system is None:
            system = load(cfg.hamiltonian) if cfg.hamiltonian else random_instance(cfg.n_spins, cfg.hamiltonian_seed)
        self.system = system
        self._prop = propagator
        self.curves: list[Curve] = []
        self.pulse_events = 0
        self.runs = 0
        self._count_lock = threading.Lock()

    @property
    def n_spins(self) -> int:
        return self.system.n_spins

    @property
    def propagator(self) -> Propagator:
        if self._prop is None:
            self._prop = Propagator(self.system, self.cfg.tau, backend=self.cfg.backend)
        return self._prop

    # ------------------------------------------------------------ simulation

    def _initial_states(self, prepared: list[dict], label) -> np.ndarray:
        env = {}
        if self.cfg.env_init == "random-product":
            env = random_product_state(self.n_spins, child_seed(self.cfg.seed, "init", *label))
        cols = [product_state(self.n_spins, {**env, **prep}) for prep in prepared]
        return np.stack(cols, axis=1)

    def simulate_probabilities(self, sched, prepared: list[dict], settings, keep, cycles, label,
                               err: PulseErrorModel | None = None) -> np.ndarray:
        """Exact outcome probabilities, shape ``(n_settings, len(cycles))``.

        One run per (setting, cycle count). Deterministic pulse models share a
        trajectory per setting; random models draw a fresh realization per run
        unless ``independent_runs`` is disabled.
        """
        err = self.cfg.error if err is None else err
        cycles = [int(n) for n in cycles]
        independent = self.cfg.independent_runs
        if independent is None:
            independent = err.is_random
        psi0 = self._initial_states(prepared, label)
        n_set = len(settings)
        if not err.is_random:
            real = realize_pulses(sched.truncated(max(cycles)), err)
            snaps = evolve_checkpoints(self.propagator, sched, psi0, [cycles] * n_set, real)
            key = {(s, k): (s, n) for s in range(n_set) for k, n in enumerate(cycles)}
        elif not independent:
            real = [
                realize_pulses(sched.truncated(max(cycles)), err, child_seed(self.cfg.seed, "pulses", *label, s))
                for s in range(n_set)
            ]
            snaps = evolve_checkpoints(self.propagator, sched, psi0, [cycles] * n_set, real)
            key = {(s, k): (s, n) for s in range(n_set) for k, n in enumerate(cycles)}
        else:
            cols = list(itertools.product(range(n_set), range(len(cycles))))
            block = psi0[:, [s for s, _ in cols]]
            real = [
                realize_pulses(sched.truncated(cycles[k]), err, child_seed(self.cfg.seed, "pulses", *label, s, cycles[k]))
                for s, k in cols
            ]
            snaps = evolve_checkpoints(self.propagator, sched, block, [[cycles[k]] for _, k in cols], real)
            key = {(s, k): (c, cycles[k]) for c, (s, k) in enumerate(cols)}
        probs = np.empty((n_set, len(cycles)))
        for s, setting in enumerate(settings):
            states = np.stack([snaps[key[(s, k)]] for k in range(len(cycles))], axis=1)
            rhos = reduced_density(states, keep, self.n_spins)
            probs[s] = outcome_probabilities(rhos, setting)
        with self._count_lock:
            self.runs += n_set * len(cycles)
            self.pulse_events += n_set * sched.pulses_per_cycle * int(np.sum(cycles))
        return probs

    def _records(self, probs, times, names, label) -> list[ShotRecord]:
        out = []
        for s, (p, name) in enumerate(zip(probs, names)):
            if self.cfg.exact_probabilities:
                out.append(ShotRecord.exact(times, p, self.cfg.n_shots, name))
            else:
                rng = np.random.default_rng(child_seed(self.cfg.seed, "shots", *label, s))
                out.append(ShotRecord.sample(times, p, self.cfg.n_shots, rng, name))
        return out

    # ------------------------------------------------------------ pairs

    def pair_records(self, i: int, j: int, variant) -> list[ShotRecord]:
        variant = AxisVariant.parse(variant)
        vs = variant_settings(variant)
        cfg = self.cfg
        sched = pair_sequence(i, j, variant, int(cfg.cycle_grid[-1]), cfg.tau)
        prepared = [dict(zip((i, j), st.prepared_states())) for st in vs.settings]
        label = ("pair", i, j, variant.value)
        probs = self.simulate_probabilities(sched, prepared, vs.settings, [i, j], cfg.cycle_grid, label)
        names = [f"pair_{i}_{j}_{variant.value}_{_slug(st.name)}" for st in vs.settings]
        return self._records(probs, cfg.times, names, label)

    def run_pair_tomography(self, i: int, j: int) -> list[ParamEstimate]:
        """Nine J_ij^ab estimates (three per configured axis variant) with bootstrap errors."""
        if i == j:
            raise ValueError("pair needs two distinct spins")
        cfg = self.cfg
        out = []
        for v in cfg.variants:
            variant = AxisVariant.parse(v)
            vs = variant_settings(variant)
            records = self.pair_records(i, j, variant)
            names = [f"J_{i}_{j}_{a}{b}" for a, b in vs.parameters]
            truths = [self.system.coupling(i, j, a, b) for a, b in vs.parameters]
            try:
                fits = [fit_sine(r, free_amplitude=cfg.free_amplitude) for r in records]
            except (FitFailure, InsufficientDataError) as exc:
                out.extend(ParamEstimate(n, np.nan, np.nan, t, cfg.n_shots, cfg.n_timepoints, [f"fit-failed: {exc}"])
                           for n, t in zip(names, truths))
                continue
            flags = ["fit-not-converged"] if not all(f.converged for f in fits) else []
            c = couplings_from_frequencies(*(f.omega for f in fits))

            def fit_fn(recs):
                return couplings_from_frequencies(*(fit_sine(r, free_amplitude=cfg.free_amplitude).omega for r in recs))

            boot = bootstrap_sigma(records, fit_fn, cfg.n_bootstrap, child_seed(cfg.seed, "bootstrap", i, j, variant.value))
            if boot.flagged:
                flags = flags + ["bootstrap-failures"]
            for rec, f in zip(records, fits):
                self.curves.append(Curve(rec.name, rec, f.predict(rec.times)))
            out.extend(
                ParamEstimate(n, float(est), float(sig), t, cfg.n_shots, cfg.n_timepoints, list(flags))
                for n, est, sig, t in zip(names, c, boot.sigma, truths)
            )
        return out

    # ------------------------------------------------------------ fields

    def field_schedule(self, i: int, n_cycles: int):
        build = environment_sequence if self.cfg.field_scheme == "environment" else global_cancel_sequence
        return build(i, self.n_spins, n_cycles, self.cfg.tau)

    def field_records(self, i: int) -> list[ShotRecord]:
        cfg = self.cfg
        sched = self.field_schedule(i, int(cfg.cycle_grid[-1]))
        prepared = [{i: st.prepared_states()[0]} for st in FIELD_SETTINGS]
        label = ("field", i, cfg.field_scheme)
        probs = self.simulate_probabilities(sched, prepared, FIELD_SETTINGS, [i], cfg.cycle_grid, label)
        names = [f"field_{i}_{_slug(st.name)}" for st in FIELD_SETTINGS]
        return self._records(probs, cfg.times, names, label)

    def sign_point(self, i: int, b_hat: float):
        """Measured P(+->0), P(I->0) after the whole number of cycles closest to b_hat T = pi/4."""
        cfg = self.cfg
        n_star = max(1, int(round(sign_time(b_hat) / (8 * cfg.tau))))
        t_star = 8 * n_star * cfg.tau
        sched = self.field_schedule(i, n_star)
        prepared = [{i: st.prepared_states()[0]} for st in SIGN_SETTINGS]
        label = ("sign", i, cfg.field_scheme)
        probs = self.simulate_probabilities(sched, prepared, SIGN_SETTINGS, [i], [n_star], label)[:, 0]
        if cfg.exact_probabilities:
            measured = probs
        else:
            rng = np.random.default_rng(child_seed(cfg.seed, "shots", *label))
            measured, _ = sample_shots(probs, cfg.n_shots, rng)
        return float(measured[0]), float(measured[1]), t_star

    def run_field_tomography(self, i: int) -> list[ParamEstimate]:
        """Signed (b_x, b_y, b_z) of spin ``i`` with bootstrap errors on the magnitudes."""
        cfg = self.cfg
        names = [f"b_{i}_{a}" for a in "xyz"]
        truths = list(self.system.field_vector(i))
        records = self.field_records(i)
        try:
            fit = fit_local_field(*records)
        except (FitFailure, InsufficientDataError) as exc:
            return [ParamEstimate(n, np.nan, np.nan, t, cfg.n_shots, cfg.n_timepoints, [f"fit-failed: {exc}"])
                    for n, t in zip(names, truths)]
        flags = list(fit.flags)
        if fit.b <= 1e-6:
            signed = disambiguate_signs(fit, 0.5, 0.5, 0.0)
        else:
            p_plus0, p_i0, t_star = self.sign_point(i, fit.b)
            signed = disambiguate_signs(fit, p_plus0, p_i0, t_star)
        if signed.undefined:
            flags.append("sign-undefined")
        elif signed.tie:
            flags.append("sign-tie")
        boot = bootstrap_sigma(records, lambda recs: fit_local_field(*recs).magnitudes, cfg.n_bootstrap,
                               child_seed(cfg.seed, "bootstrap", "field", i))
        if boot.flagged:
            flags.append("bootstrap-failures")
        pz, px = fit.predict(records[0].times)
        self.curves.append(Curve(records[0].name, records[0], pz))
        self.curves.append(Curve(records[1].name, records[1], px))
        return [
            ParamEstimate(n, float(est), float(sig), t, cfg.n_shots, cfg.n_timepoints, list(flags))
            for n, est, sig, t in zip(names, signed.vector, boot.sigma, truths)
        ]

    # ------------------------------------------------------------ full scan

    def selected_pairs(self) -> list[tuple[int, int]]:
        pairs = self.cfg.pairs
        if pairs is None:
            pairs = list(itertools.combinations(range(self.n_spins), 2))
        if self.cfg.truncation_radius is not None:
            pairs = [(i, j) for i, j in pairs if abs(i - j) <= self.cfg.truncation_radius]
        for i, j in pairs:
            if not (0 <= i < self.n_spins and 0 <= j < self.n_spins and i != j):
                raise ValueError(f"pair {(i, j)} outside the register")
        return pairs

    def selected_spins(self) -> list[int]:
        spins = list(range(self.n_spins)) if self.cfg.spins is None else self.cfg.spins
        for s in spins:
            if not 0 <= s < self.n_spins:
                raise ValueError(f"spin {s} outside the register")
        return spins

    def run_full_scan(self) -> EstimationReport:
        start = time.perf_counter()
        tasks = [("pair", p) for p in self.selected_pairs()] + [("field", s) for s in self.selected_spins()]

        def run(task):
            kind, arg = task
            return self.run_pair_tomography(*arg) if kind == "pair" else self.run_field_tomography(arg)

        if tasks:
            # the propagator must exist before worker threads share it
            _ = self.propagator
        if self.cfg.jobs > 1 and len(tasks) > 1:
            with ThreadPoolExecutor(self.cfg.jobs) as pool:
                results = list(pool.map(run, tasks))
        else:
            results = [run(t) for t in tasks]
        report = EstimationReport()
        for r in results:
            report.extend(r)
        report.meta = {
            "error_model": self.cfg.error.label,
            "n_spins": self.n_spins,
            "tau_J": self.cfg.tau,
            "n_shots": self.cfg.n_shots,
            "n_timepoints": self.cfg.n_timepoints,
            "field_scheme": self.cfg.field_scheme,
            "seed": self.cfg.seed,
            "wall_clock_s": time.perf_counter() - start,
            "total_runs": self.runs,
            "total_pulse_events": self.pulse_events,
        }
        return report

    def write_outputs(self, report: EstimationReport, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        report.to_csv(out / "report.csv")
        summary = report.summary()
        summary["average_deviation_by_error_model"] = {self.cfg.error.label: report.average_deviation()}
        (out / "summary.json").write_text(json.dumps(summary, indent=1))
        for c in self.curves:
            c.record.to_csv(out / "curves" / f"{c.name}.csv", c.p_fit)
        return out


def _slug(name: str) -> str:
    return name.replace("+", "p").replace("->", "-")


def run_pair_tomography(cfg: ExperimentConfig, i: int, j: int, system=None) -> list[ParamEstimate]:
    return TomographyExperiment(cfg, system).run_pair_tomography(i, j)


def run_field_tomography(cfg: ExperimentConfig, i: int, system=None) -> list[ParamEstimate]:
    return TomographyExperiment(cfg, system).run_field_tomography(i)


def run_full_scan(cfg: ExperimentConfig, system=None) -> EstimationReport:
    return TomographyExperiment(cfg, system).run_full_scan()
