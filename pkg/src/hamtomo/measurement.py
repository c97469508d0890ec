"""Outcome probabilities for product-state preparation/measurement and binomial shot noise."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evolution import single_qubit_state

LABELS = ("0", "1", "+", "I")


@dataclass(frozen=True)
class MeasSetting:
    """Prepare ``prepared`` on the target qubits, project onto ``measured``.

    Labels are listed target by target (first label = first target).
    ``rotations`` optionally holds one 2x2 basis rotation R per target (None
    for identity); the physical states are then R^dagger|label>.
    """

    prepared: tuple[str, ...]
    measured: tuple[str, ...]
    rotations: tuple = field(default=())

    def __post_init__(self):
        prepared, measured = tuple(self.prepared), tuple(self.measured)
        if len(prepared) != len(measured) or len(prepared) not in (1, 2):
            raise ValueError("settings cover one or two target qubits")
        for lab in prepared + measured:
            if lab not in LABELS:
                raise ValueError(f"state label {lab!r} not in {LABELS}")
        rotations = tuple(self.rotations) or (None,) * len(prepared)
        if len(rotations) != len(prepared):
            raise ValueError("one rotation per target required")
        object.__setattr__(self, "prepared", prepared)
        object.__setattr__(self, "measured", measured)
        object.__setattr__(self, "rotations", rotations)

    @property
    def n_targets(self) -> int:
        return len(self.prepared)

    def _vectors(self, labels) -> list[np.ndarray]:
        out = []
        for lab, rot in zip(labels, self.rotations):
            v = single_qubit_state(lab)
            if rot is not None:
                v = np.asarray(rot).conj().T @ v
            out.append(v)
        return out

    def prepared_states(self) -> list[np.ndarray]:
        """Physical single-qubit states to prepare, one per target."""
        return self._vectors(self.prepared)

    def measured_vector(self) -> np.ndarray:
        vec = np.ones(1, dtype=complex)
        for v in self._vectors(self.measured):
            vec = np.kron(vec, v)
        return vec

    @property
    def name(self) -> str:
        return f"{''.join(self.prepared)}->{''.join(self.measured)}"


def outcome_probability(rho: np.ndarray, setting: MeasSetting) -> float:
    """<m| rho |m>, clamped to [0, 1]."""
    rho = np.asarray(rho)
    dim = 1 << setting.n_targets
    if rho.shape != (dim, dim):
        raise ValueError(f"density matrix of shape {rho.shape} does not match {setting.n_targets} target(s)")
    m = setting.measured_vector()
    p = float(np.real(m.conj() @ rho @ m))
    return min(max(p, 0.0), 1.0)


def outcome_probabilities(rhos: np.ndarray, setting: MeasSetting) -> np.ndarray:
    """Vectorized ``outcome_probability`` over a stack ``(k, d, d)``."""
    m = setting.measured_vector()
    p = np.real(np.einsum("a,kab,b->k", m.conj(), rhos, m))
    return np.clip(p, 0.0, 1.0)


def sample_shots(p, n_shots: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Binomial estimate ``p_m = k / n_shots`` and its uncertainty sqrt(p_m(1-p_m)/n_shots)."""
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    rng = np.random.default_rng(rng)
    p_m = rng.binomial(n_shots, p) / n_shots
    return p_m, np.sqrt(p_m * (1.0 - p_m) / n_shots)


@dataclass
class ShotRecord:
    """One measured probability curve."""

    times: np.ndarray
    p_m: np.ndarray
    n_shots: int
    p_true: np.ndarray | None = None
    name: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.p_m = np.asarray(self.p_m, dtype=float)
        if self.times.shape != self.p_m.shape:
            raise ValueError("times and p_m must have the same length")
        if self.p_true is not None:
            self.p_true = np.asarray(self.p_true, dtype=float)

    @property
    def sigma_m(self) -> np.ndarray:
        return np.sqrt(self.p_m * (1.0 - self.p_m) / self.n_shots)

    @property
    def counts(self) -> np.ndarray:
        return np.rint(self.p_m * self.n_shots).astype(int)

    def __len__(self) -> int:
        return self.times.size

    @classmethod
    def sample(cls, times, p_true, n_shots: int, rng, name: str = "") -> "ShotRecord":
        p_m, _ = sample_shots(p_true, n_shots, rng)
        return cls(times, p_m, n_shots, np.asarray(p_true, dtype=float), name)

    @classmethod
    def exact(cls, times, p_true, n_shots: int = 100, name: str = "") -> "ShotRecord":
        """Noiseless record (``p_m = p_true``), for infinite-shot studies."""
        p_true = np.clip(np.asarray(p_true, dtype=float), 0.0, 1.0)
        return cls(times, p_true.copy(), n_shots, p_true, name)

    def resampled(self, rng) -> "ShotRecord":
        """Parametric bootstrap replicate: counts redrawn from Binomial(N_m, p_m)."""
        p_m, _ = sample_shots(self.p_m, self.n_shots, rng)
        return ShotRecord(self.times, p_m, self.n_shots, self.p_true, self.name)

    def to_csv(self, path, p_fit=None) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            header = ["T", "p_m", "sigma_m", "n_shots"]
            if self.p_true is not None:
                header.insert(1, "p_true")
            if p_fit is not None:
                header.append("p_fit")
            w.writerow(header)
            for k in range(len(self)):
                row = [repr(float(v)) for v in (self.times[k], self.p_m[k], self.sigma_m[k])]
                row.append(self.n_shots)
                if self.p_true is not None:
                    row.insert(1, repr(float(self.p_true[k])))
                if p_fit is not None:
                    row.append(repr(float(p_fit[k])))
                w.writerow(row)

    @classmethod
    def from_csv(cls, path, name: str = "") -> "ShotRecord":
        with Path(path).open() as fh:
            rows = list(csv.DictReader(fh))
        times = [float(r["T"]) for r in rows]
        p_m = [float(r["p_m"]) for r in rows]
        n_shots = int(rows[0]["n_shots"]) if rows else 1
        p_true = [float(r["p_true"]) for r in rows] if rows and "p_true" in rows[0] else None
        return cls(times, p_m, n_shots, p_true, name)
