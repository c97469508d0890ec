"""State-vector propagation under exp(-iH tau) interleaved with instantaneous pulses.

States are plain complex numpy arrays of length ``2**n`` (or ``(2**n, k)``
blocks of ``k`` independent runs); qubit 0 is the most significant bit.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse.linalg as spla

from .errors import ResourceLimitError, ScheduleMismatchError
from .pulses import NPE, PulseErrorModel, PulseSchedule, ideal_pulse, realize_pulses
from .spin_system import DENSE_CAP, SpinSystem, matrix_representation, sparse_hamiltonian

DESK_CAP = 14

_SQ = 1 / np.sqrt(2)
STATE_VECTORS = {
    "0": np.array([1, 0], dtype=complex),
    "1": np.array([0, 1], dtype=complex),
    "+": np.array([_SQ, _SQ], dtype=complex),
    "-": np.array([_SQ, -_SQ], dtype=complex),
    "I": np.array([_SQ, 1j * _SQ], dtype=complex),
    "-I": np.array([_SQ, -1j * _SQ], dtype=complex),
}


def single_qubit_state(label) -> np.ndarray:
    if isinstance(label, str):
        try:
            return STATE_VECTORS[label].copy()
        except KeyError:
            raise ValueError(f"unknown state label {label!r}") from None
    vec = np.asarray(label, dtype=complex).reshape(2)
    return vec / np.linalg.norm(vec)


def product_state(n_spins: int, states=None) -> np.ndarray:
    """Product state; ``states`` maps qubit -> label or 2-vector, others are |0>."""
    states = states or {}
    psi = np.ones(1, dtype=complex)
    for q in range(n_spins):
        psi = np.kron(psi, single_qubit_state(states.get(q, "0")))
    return psi


def random_product_state(n_spins: int, rng) -> dict[int, np.ndarray]:
    """Haar-random single-qubit states for every spin, as a ``product_state`` mapping."""
    rng = np.random.default_rng(rng)
    vecs = rng.standard_normal((n_spins, 2)) + 1j * rng.standard_normal((n_spins, 2))
    return {q: vecs[q] / np.linalg.norm(vecs[q]) for q in range(n_spins)}


class Propagator:
    """Repeated application of exp(-iH tau) and its half power for a fixed (H, tau).

    ``backend="dense"`` diagonalizes H once and caches the two step matrices;
    ``"sparse"`` uses a truncated Taylor action (``expm_multiply``) per call.
    """

    def __init__(self, sys: SpinSystem, tau: float, tol: float = 1e-10, backend: str = "auto"):
        if tau <= 0:
            raise ValueError("tau must be positive")
        if sys.n_spins > DESK_CAP:
            raise ResourceLimitError(f"{sys.n_spins} spins exceeds the desk cap of {DESK_CAP}")
        if backend == "auto":
            backend = "dense" if sys.n_spins <= DENSE_CAP else "sparse"
        if backend not in ("dense", "sparse"):
            raise ValueError(f"unknown backend {backend!r}")
        self.n_spins = sys.n_spins
        self.dim = 1 << sys.n_spins
        self.tau = float(tau)
        self.tol = tol
        self.backend = backend
        if backend == "dense":
            h = matrix_representation(sys, cap=DENSE_CAP)
            self.energies, self.vectors = np.linalg.eigh(h)
            del h
            self._steps = {h: self._dense_step(h) for h in (1, 2)}
        else:
            self.hamiltonian = sparse_hamiltonian(sys)

    def _dense_step(self, halves: int) -> np.ndarray:
        phases = np.exp(-0.5j * halves * self.tau * self.energies)
        return (self.vectors * phases) @ self.vectors.conj().T

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        """exp(-iH t) psi for arbitrary ``t``."""
        if self.backend == "dense":
            coeffs = self.vectors.conj().T @ psi
            phases = np.exp(-1j * t * self.energies)
            if coeffs.ndim == 2:
                phases = phases[:, None]
            return self.vectors @ (phases * coeffs)
        if t == 0:
            return np.array(psi, dtype=complex)
        return spla.expm_multiply(-1j * t * self.hamiltonian, psi)

    def apply(self, psi: np.ndarray, halves: int = 2) -> np.ndarray:
        """exp(-iH * halves * tau/2) psi; ``halves=2`` is one full interval."""
        if halves < 0:
            raise ValueError("halves must be non-negative")
        if halves == 0:
            return psi
        if self.backend == "sparse":
            return self.evolve(psi, 0.5 * halves * self.tau)
        full, half = divmod(halves, 2)
        for _ in range(full):
            psi = self._steps[2] @ psi
        if half:
            psi = self._steps[1] @ psi
        return psi


def build_propagator(sys: SpinSystem, tau: float, tol: float = 1e-10, backend: str = "auto") -> Propagator:
    return Propagator(sys, tau, tol=tol, backend=backend)


# ---------------------------------------------------------------- pulses


def _apply_one(psi: np.ndarray, n_spins: int, q: int, u: np.ndarray) -> np.ndarray:
    """Apply a 2x2 unitary on qubit ``q``; ``u`` is (2,2) or per-column (k,2,2)."""
    batch = psi.ndim == 2
    k = psi.shape[1] if batch else 1
    view = psi.reshape(1 << q, 2, 1 << (n_spins - q - 1), k)
    if u.ndim == 3:
        # per-column matrices: explicit 2x2 product, broadcast over the last axis
        v0, v1 = view[:, 0], view[:, 1]
        out = np.empty_like(view)
        out[:, 0] = u[:, 0, 0] * v0 + u[:, 0, 1] * v1
        out[:, 1] = u[:, 1, 0] * v0 + u[:, 1, 1] * v1
    else:
        out = np.einsum("ab,ibjk->iajk", u, view)
    return out.reshape(psi.shape)


def apply_pulse(psi: np.ndarray, targets, unitaries=None, n_spins: int | None = None) -> np.ndarray:
    """Tensor-product application of single-qubit pulses.

    ``targets`` is a sequence of ``(qubit, axis)``; ``unitaries`` supplies the
    realized 2x2 matrix per target (ideal pi pulses when omitted).
    """
    targets = list(targets)
    qubits = [q for q, _ in targets]
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"duplicate pulse target in {qubits}")
    if n_spins is None:
        n_spins = int(np.log2(psi.shape[0]))
    if unitaries is None:
        unitaries = [ideal_pulse(a) for _, a in targets]
    out = np.asarray(psi, dtype=complex)
    for (q, _), u in zip(targets, unitaries):
        if not 0 <= q < n_spins:
            raise ValueError(f"qubit {q} outside register of {n_spins}")
        out = _apply_one(out, n_spins, q, np.asarray(u))
    return out


def _halves(dt: float, tau: float) -> int:
    h = dt / (0.5 * tau)
    k = int(round(h))
    if k < 0 or abs(h - k) > 1e-6:
        raise ScheduleMismatchError(f"interval {dt} is not a multiple of tau/2 = {tau / 2}")
    return k


def _gaps(sched: PulseSchedule, tau: float) -> list[int]:
    """Free-evolution gaps (in half steps) before each event and after the last."""
    times = [0.0] + [ev.t for ev in sched.events] + [sched.total_time]
    return [_halves(b - a, tau) for a, b in zip(times[:-1], times[1:])]


def _check_tau(prop: Propagator, sched: PulseSchedule) -> None:
    # schedules built for a different tau are fine as long as gaps quantize
    if sched.events and abs(sched.tau - prop.tau) > 1e-12 * prop.tau:
        _gaps(sched, prop.tau)


def run_schedule(psi0: np.ndarray, prop: Propagator, sched: PulseSchedule,
                 err: PulseErrorModel = NPE, rng=None, realization=None) -> np.ndarray:
    """Evolve ``psi0`` through ``sched``: free evolution between realized pulses.

    Error draws come from ``rng`` in (event, target) order unless a
    precomputed ``realization`` (see ``realize_pulses``) is given.
    """
    if not sched.events:
        return prop.evolve(np.asarray(psi0, dtype=complex), sched.total_time)
    _check_tau(prop, sched)
    gaps = _gaps(sched, prop.tau)
    if realization is None:
        realization = realize_pulses(sched, err, rng)
    psi = np.array(psi0, dtype=complex)
    for e, ev in enumerate(sched.events):
        psi = prop.apply(psi, gaps[e])
        for s, (q, _) in enumerate(ev.slots):
            psi = _apply_one(psi, prop.n_spins, q, realization[e][s])
    return prop.apply(psi, gaps[-1])


def evolve_checkpoints(prop: Propagator, sched: PulseSchedule, psi0: np.ndarray, checkpoints,
                       realizations=None) -> dict[tuple[int, int], np.ndarray]:
    """Run many cycle-truncated copies of ``sched`` as one block.

    Column ``c`` of ``psi0`` (shape ``(dim, k)``) is evolved through the
    ``n``-cycle truncation of ``sched`` for every ``n`` in ``checkpoints[c]``;
    the result maps ``(c, n)`` to the final state. ``realizations`` is either
    one array for all columns or a list with one array per column, each
    covering at least that column's longest run. Equivalent to calling
    ``run_schedule`` once per ``(c, n)`` with the matching realization prefix.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.ndim != 2:
        raise ValueError("psi0 must be a (dim, k) block")
    k = psi0.shape[1]
    checkpoints = [sorted(set(int(n) for n in cp)) for cp in checkpoints]
    if len(checkpoints) != k:
        raise ValueError("one checkpoint list per column required")
    n_max = max((cp[-1] for cp in checkpoints if cp), default=0)
    if n_max == 0:
        return {}
    if n_max > sched.n_cycles:
        raise ValueError("checkpoint beyond schedule length")
    _check_tau(prop, sched)
    per = sched.pulses_per_cycle
    events = sched.events[: per * n_max]
    gaps = _gaps(sched.truncated(n_max), prop.tau)
    shared = realizations is None or not isinstance(realizations, (list, tuple))
    if realizations is None:
        realizations = realize_pulses(sched.truncated(n_max))

    last = np.array([cp[-1] if cp else 0 for cp in checkpoints])
    cols = np.flatnonzero(last > 0)
    psi = psi0[:, cols].copy()
    results: dict[tuple[int, int], np.ndarray] = {}
    psi = prop.apply(psi, gaps[0])
    for e, ev in enumerate(events):
        for s, (q, _) in enumerate(ev.slots):
            if shared:
                u = realizations[e][s]
            else:
                u = np.stack([realizations[c][e][s] for c in cols])
            psi = _apply_one(psi, prop.n_spins, q, u)
        if (e + 1) % per == 0:
            n = (e + 1) // per
            done = [a for a, c in enumerate(cols) if n in checkpoints[c]]
            if done:
                tail = _halves(n * per * sched.tau - ev.t, prop.tau)
                snap = prop.apply(psi[:, done], tail)
                for idx, a in enumerate(done):
                    results[(int(cols[a]), n)] = snap[:, idx].copy()
            keep = last[cols] > n
            if not keep.all():
                cols = cols[keep]
                psi = psi[:, keep]
            if cols.size == 0:
                break
        if e + 1 < len(events):
            psi = prop.apply(psi, gaps[e + 1])
    return results


# ---------------------------------------------------------------- reduced states


def reduced_density(psi: np.ndarray, keep, n_spins: int | None = None) -> np.ndarray:
    """Partial trace onto ``keep`` (in the given order); batched over columns if 2-D."""
    psi = np.asarray(psi)
    if n_spins is None:
        n_spins = int(np.log2(psi.shape[0]))
    keep = list(keep)
    if len(set(keep)) != len(keep) or any(not 0 <= q < n_spins for q in keep):
        raise ValueError(f"invalid qubit selection {keep}")
    batch = psi.ndim == 2
    k = psi.shape[1] if batch else 1
    t = psi.reshape((2,) * n_spins + (k,))
    t = np.moveaxis(t, keep, list(range(len(keep))))
    m = t.reshape(1 << len(keep), -1, k)
    rho = np.einsum("ark,brk->kab", m, m.conj())
    return rho if batch else rho[0]


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("ab,ba->", rho, rho)))


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = rho - sigma
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def pure_density(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi)
    return np.outer(psi, psi.conj())
