"""Two-body qubit Hamiltonians: data model, random instances, dense/sparse matrices, JSON I/O.

All coefficients are in units of the largest coupling J (J = 1 internally).
Bit convention used throughout the package: qubit 0 is the most significant
bit of a computational-basis index, i.e. the operator on qubit ``q`` of an
``n``-qubit register is ``kron(I_{2^q}, sigma, I_{2^(n-q-1)})``.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from dataclasses import field as dc_field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .errors import HamiltonianParseError, HamiltonianValidationError, ResourceLimitError

DENSE_CAP = 12


class PauliAxis(str, enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"

    def successor(self) -> "PauliAxis":
        """Cyclic successor x -> y -> z -> x."""
        order = (PauliAxis.X, PauliAxis.Y, PauliAxis.Z)
        return order[(order.index(self) + 1) % 3]

    @property
    def matrix(self) -> np.ndarray:
        return PAULI[self.value]

    @classmethod
    def parse(cls, value) -> "PauliAxis":
        if isinstance(value, PauliAxis):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown Pauli axis {value!r}") from None


AXES = (PauliAxis.X, PauliAxis.Y, PauliAxis.Z)

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _coupling_key(m: int, n: int, a, b) -> tuple[int, int, PauliAxis, PauliAxis]:
    a, b = PauliAxis.parse(a), PauliAxis.parse(b)
    if m == n:
        raise ValueError("a coupling needs two distinct spins")
    if m > n:
        return n, m, b, a
    return m, n, a, b


@dataclass(frozen=True)
class SpinSystem:
    """Coefficients of H = sum J_mn^ab s_m^a s_n^b + sum b_m^a s_m^a.

    ``couplings`` is keyed by ``(m, n, a, b)`` with ``m < n``; ``fields`` by
    ``(m, a)``. Missing entries are zero. Instances are immutable.
    """

    n_spins: int
    couplings: Mapping[tuple[int, int, PauliAxis, PauliAxis], float] = dc_field(default_factory=dict)
    fields: Mapping[tuple[int, PauliAxis], float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if int(self.n_spins) < 1:
            raise ValueError("n_spins must be positive")
        couplings = {}
        for (m, n, a, b), v in dict(self.couplings).items():
            key = _coupling_key(int(m), int(n), a, b)
            self._check_spin(key[0])
            self._check_spin(key[1])
            couplings[key] = float(v)
        fields = {}
        for (m, a), v in dict(self.fields).items():
            self._check_spin(int(m))
            fields[(int(m), PauliAxis.parse(a))] = float(v)
        object.__setattr__(self, "n_spins", int(self.n_spins))
        object.__setattr__(self, "couplings", MappingProxyType(dict(sorted(couplings.items()))))
        object.__setattr__(self, "fields", MappingProxyType(dict(sorted(fields.items()))))

    def _check_spin(self, m: int) -> None:
        if not 0 <= m < self.n_spins:
            raise ValueError(f"spin index {m} outside [0, {self.n_spins})")

    def coupling(self, m: int, n: int, a, b) -> float:
        """J_mn^ab; for m > n this resolves to the stored (n, m, b, a) entry."""
        return self.couplings.get(_coupling_key(m, n, a, b), 0.0)

    def field(self, m: int, a) -> float:
        return self.fields.get((m, PauliAxis.parse(a)), 0.0)

    def field_vector(self, m: int) -> np.ndarray:
        return np.array([self.field(m, a) for a in AXES])

    def with_terms(self, couplings=None, fields=None) -> "SpinSystem":
        """Copy with some coefficients overwritten."""
        new_c = dict(self.couplings)
        for (m, n, a, b), v in (couplings or {}).items():
            new_c[_coupling_key(m, n, a, b)] = v
        new_f = dict(self.fields)
        for (m, a), v in (fields or {}).items():
            new_f[(m, PauliAxis.parse(a))] = v
        return SpinSystem(self.n_spins, new_c, new_f)

    @property
    def n_coefficients(self) -> int:
        return len(self.couplings) + len(self.fields)

    def pauli_terms(self):
        """Yield ``(coefficient, {qubit: axis_letter})`` for every stored term."""
        for (m, n, a, b), v in self.couplings.items():
            yield v, {m: a.value, n: b.value}
        for (m, a), v in self.fields.items():
            yield v, {m: a.value}


def random_instance(n_spins: int, seed=None) -> SpinSystem:
    """All 9 couplings per pair and 3 fields per spin drawn i.i.d. from U[-1, 1]."""
    if n_spins < 2:
        raise ValueError("random_instance needs n_spins >= 2")
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n_spins), 2))
    c_vals = rng.uniform(-1.0, 1.0, size=(len(pairs), 3, 3))
    f_vals = rng.uniform(-1.0, 1.0, size=(n_spins, 3))
    couplings = {
        (m, n, a, b): c_vals[k, ia, ib]
        for k, (m, n) in enumerate(pairs)
        for ia, a in enumerate(AXES)
        for ib, b in enumerate(AXES)
    }
    fields = {(m, a): f_vals[m, ia] for m in range(n_spins) for ia, a in enumerate(AXES)}
    return SpinSystem(n_spins, couplings, fields)


def _pauli_string_action(n_spins: int, ops: Mapping[int, str]):
    """Column -> row map and phases of a Pauli string in the computational basis.

    Returns ``(rows, phases)`` with ``P[rows[r], r] = phases[r]``.
    """
    dim = 1 << n_spins
    cols = np.arange(dim)
    flip = 0
    phase = np.ones(dim, dtype=complex)
    for q, letter in ops.items():
        shift = n_spins - 1 - q
        bit = (cols >> shift) & 1
        if letter == "x":
            flip |= 1 << shift
        elif letter == "y":
            flip |= 1 << shift
            phase *= np.where(bit == 0, 1j, -1j)
        elif letter == "z":
            phase *= np.where(bit == 0, 1.0, -1.0)
        else:
            raise ValueError(letter)
    return cols ^ flip, phase


def sparse_hamiltonian(sys: SpinSystem) -> sp.csr_matrix:
    """CSR matrix of H; duplicate entries from different terms are summed."""
    dim = 1 << sys.n_spins
    rows, cols, vals = [], [], []
    col_idx = np.arange(dim)
    for coeff, ops in sys.pauli_terms():
        if coeff == 0.0:
            continue
        r, ph = _pauli_string_action(sys.n_spins, ops)
        rows.append(r)
        cols.append(col_idx)
        vals.append(coeff * ph)
    if not rows:
        return sp.csr_matrix((dim, dim), dtype=complex)
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim)
    )
    return mat.tocsr()


def matrix_representation(sys: SpinSystem, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense Hermitian matrix of H (qubit 0 = most significant bit)."""
    if sys.n_spins > cap:
        raise ResourceLimitError(f"dense matrix for {sys.n_spins} spins exceeds cap {cap}")
    h = sparse_hamiltonian(sys).toarray()
    # exact Hermitian symmetrisation; entries are already Hermitian up to round-off
    return 0.5 * (h + h.conj().T)


# ---------------------------------------------------------------- JSON document


def to_document(sys: SpinSystem) -> dict:
    return {
        "n_spins": sys.n_spins,
        "couplings": [
            {"m": m, "n": n, "a": a.value, "b": b.value, "value": v}
            for (m, n, a, b), v in sys.couplings.items()
        ],
        "fields": [{"m": m, "a": a.value, "value": v} for (m, a), v in sys.fields.items()],
    }


def _require(entry: dict, key: str, where: str):
    if not isinstance(entry, dict) or key not in entry:
        raise HamiltonianParseError(f"missing key {key!r} in {where}")
    return entry[key]


def _as_int(value, key: str, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise HamiltonianParseError(f"key {key!r} in {where} must be an integer, got {value!r}")
    return value


def _as_axis(value, key: str, where: str) -> PauliAxis:
    if value not in ("x", "y", "z"):
        raise HamiltonianParseError(f"key {key!r} in {where} must be one of 'x','y','z', got {value!r}")
    return PauliAxis(value)


def _as_value(value, key: str, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise HamiltonianParseError(f"key {key!r} in {where} must be a number, got {value!r}")
    value = float(value)
    if not -1.0 <= value <= 1.0:
        raise HamiltonianValidationError(f"key {key!r} in {where}: {value} outside [-1, 1]")
    return value


def from_document(doc: dict) -> SpinSystem:
    if not isinstance(doc, dict):
        raise HamiltonianParseError("document must be a JSON object")
    unknown = set(doc) - {"n_spins", "couplings", "fields"}
    if unknown:
        raise HamiltonianParseError(f"unknown key(s) {sorted(unknown)}")
    n_spins = _as_int(_require(doc, "n_spins", "document"), "n_spins", "document")
    if n_spins < 1:
        raise HamiltonianValidationError("key 'n_spins' must be positive")
    couplings, fields = {}, {}
    for k, entry in enumerate(doc.get("couplings", [])):
        where = f"couplings[{k}]"
        m = _as_int(_require(entry, "m", where), "m", where)
        n = _as_int(_require(entry, "n", where), "n", where)
        a = _as_axis(_require(entry, "a", where), "a", where)
        b = _as_axis(_require(entry, "b", where), "b", where)
        value = _as_value(_require(entry, "value", where), "value", where)
        if not m < n:
            raise HamiltonianValidationError(f"{where}: require m < n, got m={m}, n={n}")
        if n >= n_spins or m < 0:
            raise HamiltonianValidationError(f"{where}: spin index out of range")
        if (m, n, a, b) in couplings:
            raise HamiltonianValidationError(f"{where}: duplicate term")
        couplings[(m, n, a, b)] = value
    for k, entry in enumerate(doc.get("fields", [])):
        where = f"fields[{k}]"
        m = _as_int(_require(entry, "m", where), "m", where)
        a = _as_axis(_require(entry, "a", where), "a", where)
        value = _as_value(_require(entry, "value", where), "value", where)
        if not 0 <= m < n_spins:
            raise HamiltonianValidationError(f"{where}: spin index out of range")
        if (m, a) in fields:
            raise HamiltonianValidationError(f"{where}: duplicate term")
        fields[(m, a)] = value
    return SpinSystem(n_spins, couplings, fields)


def load(path) -> SpinSystem:
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise HamiltonianParseError(f"invalid JSON: {exc}") from exc
    return from_document(doc)


def save(sys: SpinSystem, path) -> None:
    # float repr is the shortest string that round-trips bit-exactly
    Path(path).write_text(json.dumps(to_document(sys), indent=1))
