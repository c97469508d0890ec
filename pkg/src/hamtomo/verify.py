"""Independent checks of the simulator: dense matrix-product oracle, term survival, remnant scaling.

The oracle builds every operator explicitly with Kronecker products and
``scipy.linalg.expm`` so it shares no code with the propagation path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .evolution import Propagator, product_state, reduced_density, run_schedule, trace_distance
from .pulses import (
    AxisVariant,
    PulseErrorModel,
    environment_sequence,
    global_cancel_sequence,
    pair_sequence,
    realize_pulses,
)
from .spin_system import AXES, PAULI, SpinSystem, random_instance


def kron_operator(n_spins: int, ops: dict) -> np.ndarray:
    """Dense operator with ``ops[q]`` (2x2) on qubit q and identity elsewhere; qubit 0 leftmost."""
    out = np.ones((1, 1), dtype=complex)
    for q in range(n_spins):
        out = np.kron(out, ops.get(q, PAULI["i"]))
    return out


def kron_hamiltonian(sys: SpinSystem) -> np.ndarray:
    """Term-by-term Kronecker construction of H."""
    dim = 1 << sys.n_spins
    h = np.zeros((dim, dim), dtype=complex)
    for coeff, ops in sys.pauli_terms():
        h += coeff * kron_operator(sys.n_spins, {q: PAULI[a] for q, a in ops.items()})
    return h


def dense_schedule_oracle(sys: SpinSystem, tau: float, sched, realization, psi0) -> np.ndarray:
    """Explicit matrix product of free-evolution and pulse-layer matrices."""
    h = kron_hamiltonian(sys)
    n = sys.n_spins
    psi = np.array(psi0, dtype=complex)
    t_prev = 0.0
    for e, ev in enumerate(sched.events):
        psi = expm(-1j * h * (ev.t - t_prev)) @ psi
        t_prev = ev.t
        for s, (q, _) in enumerate(ev.slots):
            psi = kron_operator(n, {q: realization[e][s]}) @ psi
    return expm(-1j * h * (sched.total_time - t_prev)) @ psi


def pure_state_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Trace distance between two pure states.

    Taken from the spectrum of the density-matrix difference; the closed form
    sqrt(1 - |<a|b>|^2) loses half the digits near zero.
    """
    return trace_distance(np.outer(a, a.conj()), np.outer(b, b.conj()))


@dataclass
class OracleCase:
    n_spins: int
    description: str
    distance: float


def oracle_equivalence(n_cases: int = 50, seed: int = 0, tol_tau=(0.01, 0.05)) -> list[OracleCase]:
    """Random (system, schedule, error model, error seed) cases, N <= 4."""
    rng = np.random.default_rng(seed)
    cases = []
    kinds = ["pair", "environment", "global-cancel", "xy4-pair"]
    errors = [("NPE", 0.0), ("SAE", 0.05), ("RAE", 0.05), ("RRE", 0.05)]
    for c in range(n_cases):
        n = int(rng.integers(2, 5))
        sys = random_instance(n, int(rng.integers(2**31)))
        tau = float(rng.uniform(*tol_tau))
        n_cycles = int(rng.integers(1, 4))
        kind = kinds[c % len(kinds)]
        if kind in ("pair", "xy4-pair"):
            i, j = (int(q) for q in rng.choice(n, size=2, replace=False))
            variant = list(AxisVariant)[int(rng.integers(3))]
            sched = pair_sequence(i, j, variant, n_cycles, tau, kind="xy4" if kind == "xy4-pair" else "xy8")
            desc = f"{kind} ({i},{j}) {variant.value}"
        else:
            i = int(rng.integers(n))
            build = environment_sequence if kind == "environment" else global_cancel_sequence
            sched = build(i, n, n_cycles, tau)
            desc = f"{kind} i={i}"
        err = PulseErrorModel(*errors[int(rng.integers(len(errors)))])
        real = realize_pulses(sched, err, int(rng.integers(2**31)))
        psi0 = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
        psi0 /= np.linalg.norm(psi0)
        prop = Propagator(sys, tau)
        got = run_schedule(psi0, prop, sched, realization=real)
        want = dense_schedule_oracle(sys, tau, sched, real, psi0)
        cases.append(OracleCase(n, f"{desc}, {err.label}, N_c={n_cycles}", pure_state_distance(got, want)))
    return cases


def _phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Spectral-norm distance between unitaries after removing the best global phase."""
    overlap = np.trace(a.conj().T @ b)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(a * phase - b, 2))


@dataclass
class SurvivalRow:
    variant: str
    term: str
    commutes: bool
    survived: bool
    removed: bool
    dist_kept: float
    dist_removed: float

    @property
    def ok(self) -> bool:
        if self.commutes:
            return self.survived and not self.removed
        return self.removed and not self.survived


def variant_survival_table(value: float = 0.6, tau: float = 0.05, n_cycles: int = 3,
                           tol: float = 1e-9) -> list[SurvivalRow]:
    """Brute-force 2-qubit check of which single coupling terms each variant keeps."""
    rows = []
    basis = np.eye(4, dtype=complex)
    for variant in AxisVariant:
        ops = [kron_operator(2, {0: ai.matrix, 1: aj.matrix}) for ai, aj in variant.pulse_axes]
        for a in AXES:
            for b in AXES:
                term = kron_operator(2, {0: a.matrix, 1: b.matrix})
                commutes = all(np.allclose(term @ p, p @ term) for p in ops)
                sys = SpinSystem(2, {(0, 1, a, b): value})
                sched = pair_sequence(0, 1, variant, n_cycles, tau)
                u_dd = run_schedule(basis, Propagator(sys, tau), sched)
                kept = expm(-1j * value * sched.total_time * term)
                d_kept = _phase_distance(u_dd, kept)
                d_removed = _phase_distance(u_dd, np.eye(4))
                rows.append(SurvivalRow(variant.value, a.value + b.value, commutes,
                                        d_kept < tol, d_removed < tol, d_kept, d_removed))
    return rows


def two_spin_reference(sys: SpinSystem, i: int, j: int, t: float, target_states) -> np.ndarray:
    """Pure two-spin state under H = c1 XX + c2 YY + c3 ZZ for time t (i first)."""
    h0 = sum(sys.coupling(i, j, a, a) * np.kron(a.matrix, a.matrix) for a in AXES)
    psi = np.kron(target_states[0], target_states[1])
    out = expm(-1j * t * h0) @ psi
    return np.outer(out, out.conj())


@dataclass
class ScalingResult:
    kind: str
    taus: np.ndarray
    deviations: np.ndarray
    slope: float


def _random_qubit(rng) -> np.ndarray:
    v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return v / np.linalg.norm(v)


def remnant_scaling(kind: str = "xy8", n_spins: int = 8, seed: int = 7, pair=(2, 5),
                    taus=(0.0025, 0.005, 0.01, 0.02), n_pulses: int = 8, n_states: int = 20) -> ScalingResult:
    """Trace distance of the DD-evolved pair state from the ideal two-spin evolution vs tau.

    The total pulse count is fixed, so the per-cycle remnant order sets the
    slope as long as n_pulses * tau * ||H|| stays moderate; longer windows
    average the part of the remnant that does not commute with the kept terms
    and flatten the slope. D(tau) is the mean over ``n_states`` random product
    states of all spins.
    """
    sys = random_instance(n_spins, seed)
    i, j = pair
    per = 8 if kind == "xy8" else 4
    n_cycles = max(1, n_pulses // per)
    rng = np.random.default_rng(seed + 1)
    states = [{q: _random_qubit(rng) for q in range(n_spins)} for _ in range(n_states)]
    psi0 = np.stack([product_state(n_spins, st) for st in states], axis=1)
    devs = []
    for tau in taus:
        sched = pair_sequence(i, j, AxisVariant.XX_YY, n_cycles, tau, kind=kind)
        rhos = reduced_density(run_schedule(psi0, Propagator(sys, tau), sched), [i, j], n_spins)
        devs.append(np.mean([
            trace_distance(rho, two_spin_reference(sys, i, j, sched.total_time, (st[i], st[j])))
            for rho, st in zip(rhos, states)
        ]))
    taus = np.asarray(taus, dtype=float)
    devs = np.asarray(devs)
    slope = float(np.polyfit(np.log(taus), np.log(devs), 1)[0])
    return ScalingResult(kind, taus, devs, slope)


# reference instance for end-to-end benchmarks: a random 12-spin system with one
# pair and one spin overwritten by fixed values
REFERENCE_PAIR = (7, 9)
REFERENCE_SPIN = 6
REFERENCE_COUPLINGS = {"xx": -0.378, "yy": 0.863, "zz": 0.679}
REFERENCE_FIELD = (0.334, 0.569, -0.431)


def reference_system(seed: int = 2016, n_spins: int = 12) -> SpinSystem:
    i, j = REFERENCE_PAIR
    couplings = {(i, j, ab[0], ab[1]): v for ab, v in REFERENCE_COUPLINGS.items()}
    fields = {(REFERENCE_SPIN, a): v for a, v in zip("xyz", REFERENCE_FIELD)}
    return random_instance(n_spins, seed).with_terms(couplings=couplings, fields=fields)
