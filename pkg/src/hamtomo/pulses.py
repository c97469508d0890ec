"""Dynamical-decoupling schedules and pulse-error realizations.

A schedule is a time-ordered list of instantaneous pulse events; free
evolution fills the gaps. Every cycle starts and ends with a half interval,
so within a multi-cycle run pulses sit at ``(k + 1/2) * tau``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .spin_system import PAULI, PauliAxis

X, Y, Z = PauliAxis.X, PauliAxis.Y, PauliAxis.Z

_AXIS_INDEX = {X: 0, Y: 1, Z: 2}
_SIGMA = np.stack([PAULI["x"], PAULI["y"], PAULI["z"]])


class AxisVariant(str, enum.Enum):
    """Which pair of two-qubit pulse operators a synchronized sequence alternates."""

    XX_YY = "xx-yy"
    XY_YZ = "xy-yz"
    YX_ZY = "yx-zy"

    @classmethod
    def parse(cls, value) -> "AxisVariant":
        if isinstance(value, AxisVariant):
            return value
        return cls(str(value).lower().replace("_", "-"))

    @property
    def pulse_axes(self) -> tuple[tuple[PauliAxis, PauliAxis], tuple[PauliAxis, PauliAxis]]:
        """((axis_i, axis_j) of the first pulse type, (axis_i, axis_j) of the second)."""
        return {
            AxisVariant.XX_YY: ((X, X), (Y, Y)),
            AxisVariant.XY_YZ: ((X, Y), (Y, Z)),
            AxisVariant.YX_ZY: ((Y, X), (Z, Y)),
        }[self]

    @property
    def surviving_terms(self) -> tuple[tuple[PauliAxis, PauliAxis], ...]:
        """(a, b) of the three s_i^a s_j^b terms left by the sequence, in (c1, c2, c3) order."""
        return {
            AxisVariant.XX_YY: ((X, X), (Y, Y), (Z, Z)),
            AxisVariant.XY_YZ: ((X, Y), (Y, Z), (Z, X)),
            AxisVariant.YX_ZY: ((Y, X), (Z, Y), (X, Z)),
        }[self]


@dataclass(frozen=True)
class PulseEvent:
    t: float
    targets: tuple[tuple[int, PauliAxis], ...]
    # second simultaneous layer, composed after ``targets`` (global-plus-cancel scheme)
    cancel: tuple[tuple[int, PauliAxis], ...] = ()

    @property
    def slots(self) -> tuple[tuple[int, PauliAxis], ...]:
        return self.targets + self.cancel


@dataclass(frozen=True)
class PulseSchedule:
    tau: float
    events: tuple[PulseEvent, ...]
    n_cycles: int
    total_time: float
    kind: str = "xy8"

    @property
    def n_pulses(self) -> int:
        return len(self.events)

    @property
    def pulses_per_cycle(self) -> int:
        return len(self.events) // self.n_cycles if self.n_cycles else 0

    def truncated(self, n_cycles: int) -> "PulseSchedule":
        """The same sequence run for fewer cycles."""
        if not 1 <= n_cycles <= self.n_cycles:
            raise ValueError("n_cycles out of range")
        per = self.pulses_per_cycle
        return PulseSchedule(
            self.tau,
            self.events[: per * n_cycles],
            n_cycles,
            per * n_cycles * self.tau,
            self.kind,
        )

    def to_json(self) -> str:
        """Debug dump: ``[{t, targets: [{q, axis}]}]`` (plus ``cancel`` when present)."""
        out = []
        for ev in self.events:
            item = {"t": ev.t, "targets": [{"q": q, "axis": a.value} for q, a in ev.targets]}
            if ev.cancel:
                item["cancel"] = [{"q": q, "axis": a.value} for q, a in ev.cancel]
            out.append(item)
        return json.dumps(out)


def _cycle_pattern(kind: str) -> tuple[int, ...]:
    """Indices (0 = first pulse type, 1 = second) of one cycle in time order."""
    if kind == "xy4":
        return (0, 1, 0, 1)
    if kind == "xy8":
        # XY-4 followed by its time reversal
        return (0, 1, 0, 1, 1, 0, 1, 0)
    raise ValueError(f"unknown sequence kind {kind!r}")


def _build(tau: float, n_cycles: int, kind: str, layers) -> PulseSchedule:
    """``layers[p]`` gives ``(targets, cancel)`` for pulse type ``p``."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    if n_cycles < 1:
        raise ValueError("n_cycles must be >= 1")
    pattern = _cycle_pattern(kind)
    events = []
    for c in range(n_cycles):
        for k, p in enumerate(pattern):
            idx = c * len(pattern) + k
            targets, cancel = layers[p]
            events.append(PulseEvent((idx + 0.5) * tau, targets, cancel))
    return PulseSchedule(tau, tuple(events), n_cycles, len(pattern) * n_cycles * tau, kind)


def pair_sequence(i: int, j: int, variant=AxisVariant.XX_YY, n_cycles: int = 1,
                  tau: float = 0.01, kind: str = "xy8") -> PulseSchedule:
    """Synchronized DD on target spins ``i`` and ``j``."""
    if i == j:
        raise ValueError("pair_sequence needs two distinct spins")
    if i < 0 or j < 0:
        raise ValueError("negative spin index")
    variant = AxisVariant.parse(variant)
    layers = [
        (tuple(sorted(((i, ai), (j, aj)))), ())
        for ai, aj in variant.pulse_axes
    ]
    return _build(tau, n_cycles, kind, layers)


def environment_sequence(i: int, n_spins: int, n_cycles: int = 1, tau: float = 0.01,
                         kind: str = "xy8") -> PulseSchedule:
    """Synchronized XY-8 on every spin except ``i``."""
    if n_spins < 2:
        raise ValueError("environment_sequence needs n_spins >= 2")
    if not 0 <= i < n_spins:
        raise ValueError(f"spin {i} outside [0, {n_spins})")
    env = [q for q in range(n_spins) if q != i]
    layers = [(tuple((q, ax) for q in env), ()) for ax in (X, Y)]
    return _build(tau, n_cycles, kind, layers)


def global_cancel_sequence(i: int, n_spins: int, n_cycles: int = 1, tau: float = 0.01,
                           kind: str = "xy8") -> PulseSchedule:
    """Global XY-8 on all spins plus a focused, identical pulse on ``i`` that undoes it."""
    if n_spins < 2:
        raise ValueError("global_cancel_sequence needs n_spins >= 2")
    if not 0 <= i < n_spins:
        raise ValueError(f"spin {i} outside [0, {n_spins})")
    layers = [(tuple((q, ax) for q in range(n_spins)), ((i, ax),)) for ax in (X, Y)]
    return _build(tau, n_cycles, kind, layers)


# ------------------------------------------------------------------ pulse errors

ERROR_KINDS = ("NPE", "SAE", "RAE", "RRE")


@dataclass(frozen=True)
class PulseErrorModel:
    """Pulse imperfection model.

    ``magnitude`` is epsilon for SAE, the half-width of the uniform delta for
    RAE and the norm of the random axis tilt for RRE; NPE ignores it.
    """

    kind: str = "NPE"
    magnitude: float = 0.0

    def __post_init__(self):
        kind = str(self.kind).upper()
        if kind not in ERROR_KINDS:
            raise ValueError(f"unknown pulse-error kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "magnitude", float(self.magnitude))

    @property
    def is_random(self) -> bool:
        return self.kind in ("RAE", "RRE") and self.magnitude != 0.0

    @property
    def label(self) -> str:
        if self.kind == "NPE":
            return "NPE"
        return f"{self.kind}({100 * self.magnitude:g}%)"


NPE = PulseErrorModel("NPE")


def rotation_unitaries(vectors: np.ndarray) -> np.ndarray:
    """exp(i pi/2 v.sigma) for an array of generator vectors ``(..., 3)``."""
    vectors = np.asarray(vectors, dtype=float)
    norm = np.linalg.norm(vectors, axis=-1)
    safe = np.where(norm > 0, norm, 1.0)
    unit = vectors / safe[..., None]
    angle = 0.5 * np.pi * norm
    gen = np.einsum("...k,kab->...ab", unit, _SIGMA)
    eye = np.eye(2, dtype=complex)
    return np.cos(angle)[..., None, None] * eye + 1j * np.sin(angle)[..., None, None] * gen


def ideal_pulse(axis) -> np.ndarray:
    """exp(i pi/2 sigma^axis) = i sigma^axis."""
    return 1j * PauliAxis.parse(axis).matrix


def error_vectors(axes_index: np.ndarray, err: PulseErrorModel, rng) -> np.ndarray:
    """Generator vectors for pulses with ideal axes ``axes_index`` (ints 0..2), any shape.

    Draws are consumed in C order of ``axes_index`` (event-major, then target).
    """
    axes_index = np.asarray(axes_index)
    ideal = np.eye(3)[axes_index]
    if err.kind == "NPE":
        return ideal
    if err.kind == "SAE":
        return (1.0 + err.magnitude) * ideal
    rng = np.random.default_rng(rng)
    if err.kind == "RAE":
        delta = rng.uniform(-err.magnitude, err.magnitude, size=axes_index.shape)
        return (1.0 + delta)[..., None] * ideal
    if err.kind == "RRE":
        direction = rng.standard_normal(size=axes_index.shape + (3,))
        direction /= np.linalg.norm(direction, axis=-1, keepdims=True)
        return ideal + err.magnitude * direction
    raise ValueError(f"unknown pulse-error kind {err.kind!r}")


def realize_pulses(sched: PulseSchedule, err: PulseErrorModel = NPE, rng=None) -> np.ndarray:
    """One 2x2 unitary per (event, slot): array of shape ``(n_events, n_slots, 2, 2)``.

    Slots are the event's targets followed by its cancel pulses.
    """
    if not isinstance(err, PulseErrorModel):
        raise ValueError(f"expected a PulseErrorModel, got {err!r}")
    if not sched.events:
        return np.zeros((0, 0, 2, 2), dtype=complex)
    n_slots = {len(ev.slots) for ev in sched.events}
    if len(n_slots) != 1:
        raise ValueError("realize_pulses needs a fixed number of slots per event")
    axes = np.array([[_AXIS_INDEX[a] for _, a in ev.slots] for ev in sched.events])
    return rotation_unitaries(error_vectors(axes, err, rng))
