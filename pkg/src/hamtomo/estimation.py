"""Parameter recovery from shot records.

Couplings come from one-parameter sinusoid fits p(T) = (1 + sin(wT))/4;
local fields from a joint fit of two sin^2 curves sharing one frequency,
followed by a discrete sign search at a single extra time point.
"""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .errors import FitFailure, InsufficientDataError
from .measurement import MeasSetting, ShotRecord
from .pulses import AxisVariant

MIN_POINTS = 8
B_MAX = np.sqrt(3) * 1.05

# (I + i(X+Y+Z))/2 conjugates y->x, z->y, x->z
CYCLIC_ROTATION = 0.5 * np.array([[1 + 1j, 1 + 1j], [-1 + 1j, 1 - 1j]])


def fit_weights(record: ShotRecord) -> np.ndarray:
    """1/sigma^2 with sigma floored at a tenth of the p = 1/2 shot noise."""
    floor = np.sqrt(0.25 / record.n_shots) / 10
    return 1.0 / np.maximum(record.sigma_m, floor) ** 2


def _sorted(record: ShotRecord):
    order = np.argsort(record.times, kind="stable")
    return record.times[order], record.p_m[order], fit_weights(record)[order]


def nyquist(times: np.ndarray) -> float:
    steps = np.diff(np.unique(times))
    steps = steps[steps > 0]
    if steps.size == 0:
        raise InsufficientDataError("need at least two distinct time points")
    return np.pi / steps.min()


# ---------------------------------------------------------------- sinusoid fit


@dataclass
class CouplingFit:
    omega: float
    residual: float
    stderr: float
    converged: bool = True
    amplitude: float = 0.25
    offset: float = 0.25

    def predict(self, times) -> np.ndarray:
        return self.offset + self.amplitude * np.sin(self.omega * np.asarray(times))


@lru_cache(maxsize=32)
def _sine_grid(times: tuple, n_grid: int):
    t = np.asarray(times)
    w_ny = nyquist(t)
    omegas = np.linspace(-w_ny, w_ny, n_grid)
    s = np.sin(np.outer(omegas, t))
    return omegas, s, s * s, w_ny


def _linear_sine(omega: float, t, y, w):
    """Weighted LS of y ~ o + a sin(omega t); returns (o, a, sse)."""
    s = np.sin(omega * t)
    a_mat = np.array([[w.sum(), w @ s], [w @ s, w @ (s * s)]])
    rhs = np.array([w @ y, w @ (s * y)])
    if abs(np.linalg.det(a_mat)) < 1e-12 * max(1.0, a_mat[0, 0] ** 2):
        o, a = rhs[0] / a_mat[0, 0], 0.0
    else:
        o, a = np.linalg.solve(a_mat, rhs)
    r = y - o - a * s
    return o, a, float(w @ (r * r))


def fit_sine(record: ShotRecord, n_grid: int = 4001, free_amplitude: bool = False,
             n_candidates: int = 3) -> CouplingFit:
    """Signed frequency of p(T) = 1/4 [1 + sin(omega T)] by grid search plus bounded refinement.

    With ``free_amplitude`` the offset and amplitude are profiled out
    (linear least squares at every trial frequency).
    """
    if len(record) < MIN_POINTS:
        raise InsufficientDataError(f"fit_sine needs >= {MIN_POINTS} points, got {len(record)}")
    t, y, w = _sorted(record)
    omegas, s, s2, w_ny = _sine_grid(tuple(t), n_grid)

    if free_amplitude:
        sw, sy = w.sum(), w @ y
        ss, sss, ssy = s @ w, s2 @ w, s @ (w * y)
        det = sw * sss - ss * ss
        ok = det > 1e-12 * sw * sw
        safe = np.where(ok, det, 1.0)
        o = np.where(ok, (sss * sy - ss * ssy) / safe, sy / sw)
        a = np.where(ok, (sw * ssy - ss * sy) / safe, 0.0)
        sse_grid = w @ (y * y) - o * sy - a * ssy

        def objective(om):
            return _linear_sine(om, t, y, w)[2]
    else:
        r0 = y - 0.25
        sse_grid = w @ (r0 * r0) - 0.5 * (s @ (w * r0)) + (s2 @ w) / 16

        def objective(om):
            r = r0 - 0.25 * np.sin(om * t)
            return float(w @ (r * r))

    # at +-Nyquist the model vanishes on every grid time, tying with omega = 0; refine the
    # best few local minima and break ties toward the smaller |omega|
    step = omegas[1] - omegas[0]
    padded = np.concatenate([[np.inf], sse_grid, [np.inf]])
    minima = np.flatnonzero((padded[1:-1] <= padded[:-2]) & (padded[1:-1] <= padded[2:]))
    candidates = minima[np.argsort(sse_grid[minima], kind="stable")[:n_candidates]]
    best = None
    for k in candidates:
        lo, hi = max(omegas[k] - 2 * step, -w_ny), min(omegas[k] + 2 * step, w_ny)
        res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        grid_sse = objective(omegas[k])
        ok = bool(res.success) and res.fun <= grid_sse + 1e-12 * max(1.0, grid_sse)
        om = float(res.x) if ok else float(omegas[k])
        val = objective(om)
        key = (val, abs(om))
        if best is None or val < best[0][0] - 1e-12 * max(1.0, val) or (
                abs(val - best[0][0]) <= 1e-12 * max(1.0, val) and abs(om) < best[0][1]):
            best = (key, om, ok)
    (sse, _), omega, converged = best
    if free_amplitude:
        off, amp, _ = _linear_sine(omega, t, y, w)
        if amp < 0:
            # a sin(wT) = -a sin(-wT); keep the amplitude positive so the sign of w means something
            omega, amp = -omega, -amp
    else:
        off, amp = 0.25, 0.25
    jac = amp * t * np.cos(omega * t)
    info = float(w @ (jac * jac))
    stderr = float(1.0 / np.sqrt(info)) if info > 0 else float("inf")
    return CouplingFit(omega, sse, stderr, converged, float(amp), float(off))


def couplings_from_frequencies(omega_minus: float, omega_plus: float, omega_mid: float):
    """(c1, c2, c3) from the frequencies 2(c1-c2), 2(c1+c2), 2(c2-c3)."""
    c1 = (omega_minus + omega_plus) / 4
    c2 = (omega_plus - omega_minus) / 4
    c3 = c2 - omega_mid / 2
    return c1, c2, c3


def frequencies_from_couplings(c1: float, c2: float, c3: float):
    return 2 * (c1 - c2), 2 * (c1 + c2), 2 * (c2 - c3)


def pair_probability_curves(c, times) -> list[np.ndarray]:
    """Ideal P(|+I>->|00>), P(|+I>->|10>), P(|0I>->|++>) for H = c1 XX + c2 YY + c3 ZZ."""
    times = np.asarray(times)
    return [0.25 * (1 + np.sin(om * times)) for om in frequencies_from_couplings(*c)]


# ---------------------------------------------------------------- axis variants


BASE_PAIR_SETTINGS = (
    (("+", "I"), ("0", "0")),
    (("+", "I"), ("1", "0")),
    (("0", "I"), ("+", "+")),
)


@dataclass(frozen=True)
class VariantSettings:
    variant: AxisVariant
    rotated_target: int | None  # 0 -> spin i, 1 -> spin j, None -> no rotation
    rotation: np.ndarray
    settings: tuple[MeasSetting, ...]
    parameters: tuple[tuple[str, str], ...]  # (a, b) of J_ij^ab for c1, c2, c3


def variant_settings(variant) -> VariantSettings:
    """Settings and parameter map that reduce a variant to the diagonal XX/YY/ZZ problem."""
    variant = AxisVariant.parse(variant)
    target = {AxisVariant.XX_YY: None, AxisVariant.XY_YZ: 1, AxisVariant.YX_ZY: 0}[variant]
    rotation = np.eye(2, dtype=complex) if target is None else CYCLIC_ROTATION
    rotations = [None, None]
    if target is not None:
        rotations[target] = rotation
    settings = tuple(MeasSetting(p, m, tuple(rotations)) for p, m in BASE_PAIR_SETTINGS)
    params = tuple((a.value, b.value) for a, b in variant.surviving_terms)
    return VariantSettings(variant, target, rotation, settings, params)


# ---------------------------------------------------------------- local fields


@dataclass
class FieldFit:
    b: float
    amp_z: float
    amp_x: float
    residual: float
    discriminant: float
    flags: list[str] = field(default_factory=list)

    @property
    def magnitudes(self) -> np.ndarray:
        """(|b_x|, |b_y|, |b_z|)."""
        amp_y = max(0.0, self.discriminant)
        return self.b * np.sqrt(np.array([self.amp_x, amp_y, self.amp_z]))

    def predict(self, times) -> tuple[np.ndarray, np.ndarray]:
        s = np.sin(self.b * np.asarray(times)) ** 2
        return 1 + (self.amp_z - 1) * s, 1 + (self.amp_x - 1) * s


def field_probability_curves(bvec, times) -> tuple[np.ndarray, np.ndarray]:
    """Ideal P(|0>->|0>) and P(|+>->|+>) under H = b.sigma."""
    bvec = np.asarray(bvec, dtype=float)
    b = np.linalg.norm(bvec)
    s = np.sin(b * np.asarray(times)) ** 2
    if b == 0:
        return np.ones_like(s), np.ones_like(s)
    return 1 + ((bvec[2] / b) ** 2 - 1) * s, 1 + ((bvec[0] / b) ** 2 - 1) * s


def sign_probabilities(bvec, t: float) -> tuple[float, float]:
    """Ideal P(|+>->|0>) and P(|I>->|0>) at time t."""
    bx, by, bz = np.asarray(bvec, dtype=float)
    b = np.sqrt(bx * bx + by * by + bz * bz)
    if b == 0:
        return 0.5, 0.5
    s2, s2b = np.sin(b * t) ** 2, np.sin(2 * b * t)
    p_plus = 0.5 * (1 + 2 * bx * bz / b**2 * s2 - by / b * s2b)
    p_i = 0.5 * (1 + 2 * by * bz / b**2 * s2 + bx / b * s2b)
    return float(p_plus), float(p_i)


@lru_cache(maxsize=32)
def _field_grid(times: tuple, n_grid: int):
    bs = np.linspace(B_MAX / n_grid, B_MAX, n_grid)
    s = np.sin(np.outer(bs, np.asarray(times))) ** 2
    return bs, s, s * s


def _amp_profile(s, s2, y, w):
    """Best clipped (amp - 1) and SSE of y ~ 1 + (amp - 1) s for each grid row."""
    r = y - 1
    num, den = s @ (w * r), s2 @ w
    coef = np.clip(np.where(den > 0, num / np.where(den > 0, den, 1), 0.0), -1.0, 0.0)
    sse = w @ (r * r) - 2 * coef * num + coef * coef * den
    return coef, sse


def fit_local_field(record_zz: ShotRecord, record_xx: ShotRecord, n_grid: int = 2000,
                    discriminant_tol: float = 0.02, flat_tol: float = 1e-4) -> FieldFit:
    """Joint fit of P(0->0) = 1 + (amp_z - 1) sin^2(bT) and P(+->+) = 1 + (amp_x - 1) sin^2(bT)."""
    for rec in (record_zz, record_xx):
        if len(rec) < MIN_POINTS:
            raise InsufficientDataError(f"fit_local_field needs >= {MIN_POINTS} points per curve")
    if not np.array_equal(np.sort(record_zz.times), np.sort(record_xx.times)):
        raise ValueError("both records must share one time grid")
    tz, yz, wz = _sorted(record_zz)
    tx, yx, wx = _sorted(record_xx)
    bs, s, s2 = _field_grid(tuple(tz), n_grid)
    cz, sse_z = _amp_profile(s, s2, yz, wz)
    cx, sse_x = _amp_profile(s, s2, yx, wx)
    k = int(np.argmin(sse_z + sse_x))
    x0 = np.array([bs[k], 1 + cz[k], 1 + cx[k]])

    sqz, sqx = np.sqrt(wz), np.sqrt(wx)

    def resid(p):
        sb = np.sin(p[0] * tz) ** 2
        return np.concatenate([sqz * (yz - 1 - (p[1] - 1) * sb), sqx * (yx - 1 - (p[2] - 1) * sb)])

    lb, ub = np.array([1e-9, 0.0, 0.0]), np.array([B_MAX, 1.0, 1.0])
    flags = []
    try:
        res = least_squares(resid, np.clip(x0, lb, ub), bounds=(lb, ub), method="trf",
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
        p = res.x if 2 * res.cost <= float(resid(x0) @ resid(x0)) + 1e-12 else x0
        if res.status <= 0:
            flags.append("refine-not-converged")
    except ValueError:
        p = x0
        flags.append("refine-failed")
    b, amp_z, amp_x = (float(v) for v in p)
    depth = (2 - amp_z - amp_x) * float(np.max(np.sin(b * tz) ** 2))
    if depth < flat_tol:
        # flat curves: b is unidentifiable, report a zero field
        b, amp_z, amp_x = 0.0, 1.0, 0.0
        p = np.array([b, amp_z, amp_x])
        flags.append("no-oscillation")
    r = resid(p)
    disc = 1.0 - amp_z - amp_x
    if disc < -discriminant_tol and "no-oscillation" not in flags:
        flags.append("negative-discriminant")
    return FieldFit(b, amp_z, amp_x, float(r @ r), disc, flags)


@dataclass
class SignedField:
    vector: np.ndarray
    signs: tuple[int, int, int]
    residual: float
    tie: bool = False
    undefined: bool = False


def sign_time(b_hat: float) -> float:
    """Time with b_hat * T = pi/4."""
    if b_hat <= 0:
        raise ValueError("sign time undefined for b <= 0")
    return np.pi / (4 * b_hat)


def disambiguate_signs(fit: FieldFit, p_plus0: float, p_i0: float, t_star: float,
                       tie_tol: float = 1e-10) -> SignedField:
    """Pick the sign triple whose predicted P(+->0), P(I->0) at ``t_star`` best match."""
    mags = fit.magnitudes
    if fit.b <= 0 or not np.isfinite(fit.b):
        return SignedField(mags.copy(), (1, 1, 1), np.nan, tie=True, undefined=True)
    cands = []
    for signs in itertools.product((1, -1), repeat=3):
        vec = np.array(signs) * mags
        pp, pi = sign_probabilities(vec, t_star)
        cands.append(((pp - p_plus0) ** 2 + (pi - p_i0) ** 2, signs))
    best = min(c[0] for c in cands)
    tied = [c for c in cands if c[0] - best <= tie_tol * max(1.0, best)]
    # ties go to +1 on every ambiguous component
    resid, signs = max(tied, key=lambda c: (sum(c[1]), c[1]))
    return SignedField(np.array(signs) * mags, signs, resid, tie=len(tied) > 1)


# ---------------------------------------------------------------- bootstrap


@dataclass
class BootstrapResult:
    sigma: np.ndarray
    samples: np.ndarray
    n_failed: int
    flagged: bool


def bootstrap_sigma(records, fit_fn, n_resamples: int = 1000, seed=0) -> BootstrapResult:
    """Parametric bootstrap: redraw every point from Binomial(N_m, p_m), refit, take the SD.

    ``fit_fn`` maps a list of records to a parameter vector. Resample ``k``
    uses the generator seeded by ``(seed, k)``.
    """
    if n_resamples < 2:
        raise ValueError("n_resamples must be >= 2")
    records = list(records)
    samples, failed = [], 0
    for k in range(n_resamples):
        rng = np.random.default_rng([int(seed), k])
        replica = [rec.resampled(rng) for rec in records]
        try:
            est = np.atleast_1d(np.asarray(fit_fn(replica), dtype=float))
        except (FitFailure, InsufficientDataError, ValueError, np.linalg.LinAlgError):
            failed += 1
            continue
        if not np.all(np.isfinite(est)):
            failed += 1
            continue
        samples.append(est)
    samples = np.array(samples)
    if len(samples) >= 2:
        sigma = samples.std(axis=0, ddof=1)
    else:
        sigma = np.full(samples.shape[1] if samples.ndim == 2 else 1, np.nan)
    return BootstrapResult(sigma, samples, failed, failed > 0.1 * n_resamples)


# ---------------------------------------------------------------- reports


@dataclass
class ParamEstimate:
    name: str
    estimate: float
    sigma: float
    truth: float | None = None
    n_shots: int = 0
    n_timepoints: int = 0
    flags: list[str] = field(default_factory=list)

    @property
    def deviation(self) -> float | None:
        return None if self.truth is None else abs(self.estimate - self.truth)


@dataclass
class EstimationReport:
    entries: list[ParamEstimate] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def extend(self, entries) -> None:
        self.entries.extend(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, name: str) -> ParamEstimate:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def mean_abs_deviation(self) -> float | None:
        devs = [e.deviation for e in self.entries if e.truth is not None]
        return float(np.mean(devs)) if devs else None

    def average_deviation(self) -> float | None:
        """Mean of |estimate - truth| / |truth| (zero truths skipped)."""
        devs = [e.deviation / abs(e.truth) for e in self.entries if e.truth]
        return float(np.mean(devs)) if devs else None

    def summary(self) -> dict:
        return {
            **self.meta,
            "n_parameters": len(self.entries),
            "average_deviation": self.average_deviation(),
            "mean_abs_deviation": self.mean_abs_deviation(),
            "n_flagged": sum(bool(e.flags) for e in self.entries),
        }

    def to_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["parameter", "truth", "estimate", "sigma", "n_shots", "n_timepoints", "flags"])
            for e in self.entries:
                w.writerow([e.name, "" if e.truth is None else repr(float(e.truth)), repr(float(e.estimate)),
                            repr(float(e.sigma)), e.n_shots, e.n_timepoints, ";".join(e.flags)])

    def to_json(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        doc = {"summary": self.summary(), "entries": [asdict(e) for e in self.entries]}
        path.write_text(json.dumps(doc, indent=1, default=float))
