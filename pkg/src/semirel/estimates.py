"""Empirical verification of the pointwise weight estimates.

Each check produces an :class:`EstimateReport` holding the sampled left-hand
side, the comparison function on the right and the worst ratio between them.
For estimates that only assert the existence of a constant (decay of the half
Laplacian of weights, kernel envelopes) the ratio is the empirical constant.
For inequalities with explicit constants the right-hand side is the full
bound and the report passes when the worst ratio is at most one.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .fractional import (
    KERNEL_R_MAX,
    KERNEL_R_MIN,
    RadialProfile,
    bessel_kernel,
    frac_laplacian_point,
    kernel_weighted_l1,
)
from .spectral import ComplexField, SymbolSpec, apply_symbol, make_grid, weight_field

__all__ = [
    "EstimateReport",
    "MassiveEstimate",
    "SAMPLE_POINTS",
    "weight_decay_report",
    "massive_estimate_report",
    "kernel_bound_report",
    "cordoba_check",
    "lemma_constant",
    "atilde",
]

SAMPLE_POINTS = np.concatenate([[0.0], np.geomspace(1e-2, 100.0, 200)])
TAIL_WINDOW = (10.0, 100.0)
CORDOBA_TOL = 1e-8


@dataclass
class EstimateReport:
    estimate_id: str
    params: dict
    samples: np.ndarray
    lhs: np.ndarray
    rhs_shape: np.ndarray
    empirical_constant: float
    passed: bool
    regime: str | None = None
    extras: dict = field(default_factory=dict)

    @property
    def ratio(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.rhs_shape != 0, self.lhs / self.rhs_shape, np.nan)

    def to_dict(self) -> dict:
        return {
            "estimate_id": self.estimate_id,
            "params": self.params,
            "regime": self.regime,
            "empirical_constant": float(self.empirical_constant),
            "passed": bool(self.passed),
            "extras": {k: _jsonable(v) for k, v in self.extras.items()},
            "samples": self.samples.tolist(),
            "lhs": self.lhs.tolist(),
            "rhs_shape": self.rhs_shape.tolist(),
        }

    def to_json(self, path, header: dict | None = None):
        payload = self.to_dict()
        if header is not None:
            payload = {"header": header, **payload}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["x", "lhs", "rhs_shape", "ratio"])
            for row in zip(self.samples, self.lhs, self.rhs_shape, self.ratio):
                w.writerow([repr(float(v)) for v in row])


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def _bracket(x):
    return np.sqrt(1.0 + np.asarray(x, dtype=float) ** 2)


def _loglog_slope(x, y, window=TAIL_WINDOW):
    sel = (x >= window[0]) & (x <= window[1]) & (y > 0)
    return float(np.polyfit(np.log(x[sel]), np.log(y[sel]), 1)[0])


def _regime(n, q):
    if math.isclose(q, n):
        return "q=n"
    return "q<n" if q < n else "q>n"


def _decay_shape(n, q, x):
    regime = _regime(n, q)
    if regime == "q<n":
        return _bracket(x) ** (-q - 1)
    if regime == "q=n":
        return _bracket(x) ** (-n - 1) * (1.0 + np.log1p(x))
    return _bracket(x) ** (-n - 1)


@lru_cache(maxsize=None)
def _half_laplacian_of_weight(n: int, q: float) -> tuple:
    prof = RadialProfile.weight(q)
    return tuple(frac_laplacian_point(prof, float(x), n_dim=n) for x in SAMPLE_POINTS)


def weight_decay_report(n: int, q: float) -> EstimateReport:
    """Decay of ``|(-Delta)^{1/2} <.>^{-q}|`` against the shape for its regime.

    ``extras`` carries the log-log slope of the left side and of the ratio
    over ``10 <= |x| <= 100``; a bounded ratio has a tail slope near zero.
    """
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n}")
    if not q > 0:
        raise ValueError(f"q must be positive, got {q}")
    x = SAMPLE_POINTS
    lhs = np.abs(np.array(_half_laplacian_of_weight(int(n), float(q))))
    shape = _decay_shape(n, q, x)
    ratio = lhs / shape
    const = float(np.max(ratio))
    passed = bool(np.isfinite(const) and np.all(lhs <= const * shape * (1 + 1e-12)))
    extras = {
        "lhs_tail_slope": _loglog_slope(x, lhs),
        "ratio_tail_slope": _loglog_slope(x, ratio),
        "power_ratio_tail_slope": _loglog_slope(x, lhs * _bracket(x) ** (min(q, n) + 1)),
    }
    return EstimateReport(
        "weight-decay", {"n": n, "q": q}, x.copy(), lhs, shape, const, passed, _regime(n, q), extras
    )


def lemma_constant(n: int, q: float) -> float:
    """Empirical constant of the half-Laplacian weight decay over the sample set."""
    return weight_decay_report(n, q).empirical_constant


@lru_cache(maxsize=None)
def atilde(n: int) -> float:
    """``A_{n,n+1} + 2^{(n+1)/2} ||<.>^{n+1} K||_{L^1}`` with the empirical first term."""
    q = n + 1
    return lemma_constant(n, q) + 2.0 ** (q / 2) * kernel_weighted_l1(n, q)


def _power_of_two_at_least(v: float) -> int:
    return int(2 ** math.ceil(math.log2(max(v, 8))))


def estimate_grid(n: int, q: float, reach: float, max_points: int | None = None):
    """Grid for spectral evaluation of weights ``<x>^{-q}`` out to ``|x| = reach``.

    The half width makes the weight at the boundary smaller than 1e-6 of its
    center value; the spacing resolves unit-scale structure.
    """
    if max_points is None:
        max_points = {1: 1 << 16, 2: 1024, 3: 128}[n]
    half = max(math.sqrt(10 ** (12.0 / q) - 1.0), 4.0 * reach, 40.0)
    N = min(_power_of_two_at_least(2 * half / 0.1), max_points)
    return make_grid(n, half, N)


def _line_interp(grid, values, points):
    line = grid.line(values)
    return CubicSpline(grid.axis, line)(points)


def _spectral_on_samples(n, q, mass, kind, points):
    grid = estimate_grid(n, q, float(np.max(points)))
    out = apply_symbol(weight_field(grid, q), SymbolSpec(kind, mass=mass)).values
    return _line_interp(grid, out.real, points), grid


@dataclass
class MassiveEstimate:
    remainder: EstimateReport
    splitting: EstimateReport
    scaled: EstimateReport

    @property
    def reports(self):
        return (self.remainder, self.splitting, self.scaled)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)


def _bound_report(eid, params, x, lhs, rhs, extras=None):
    ratio = lhs / rhs
    worst = float(np.max(ratio))
    extras = dict(extras or {})
    extras["min_slack"] = float(np.min(rhs - lhs))
    return EstimateReport(eid, params, x.copy(), lhs, rhs, worst, bool(worst <= 1.0), None, extras)


def massive_estimate_report(n: int, q: float, m: float, R: float) -> MassiveEstimate:
    """Check the remainder bound, the massive splitting bound and its rescaled form.

    The remainder and massive operators are applied spectrally to sampled
    weights and interpolated to :data:`SAMPLE_POINTS`.  The rescaled check
    uses ``q = n + 1`` and the identity
    ``(m^2-Delta)^{1/2} <./R>^{-q} (x) = R^{-1} ((R^2 m^2 - Delta)^{1/2} <.>^{-q})(x/R)``.
    """
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n}")
    if not q > n / 2:
        raise ValueError(f"q must exceed n/2 = {n / 2}, got {q}")
    if not R > 0:
        raise ValueError("R must be positive")
    m = abs(float(m))
    x = SAMPLE_POINTS
    params = {"n": n, "q": q, "m": m, "R": R}

    kq = kernel_weighted_l1(n, q)
    coeff = 2.0 ** (q / 2) * kq * _bracket(m) ** (q + 1)
    remainder_rhs = coeff * _bracket(x) ** (-q)
    rem, _ = _spectral_on_samples(n, q, m, "remainder", x)
    remainder = _bound_report(
        "remainder-bound", params, x, np.abs(rem), remainder_rhs, {"kernel_norm": kq, "coefficient": coeff}
    )

    massive, _ = _spectral_on_samples(n, q, m, "massive", x)
    massless_point = np.abs(np.array(_half_laplacian_of_weight(int(n), float(q))))
    splitting = _bound_report(
        "massive-splitting", params, x, np.abs(massive), massless_point + remainder_rhs
    )

    qs = n + 1
    a_t = atilde(n)
    y = x / R
    scaled_vals, _ = _spectral_on_samples(n, qs, R * m, "massive", y)
    lhs_scaled = np.abs(scaled_vals) / R
    rhs_scaled = a_t * _bracket(R * m) ** (n + 2) * _bracket(y) ** (-n - 1) / R
    scaled = _bound_report(
        "massive-scaled", {**params, "q": qs}, x, lhs_scaled, rhs_scaled,
        {"atilde": a_t, "coefficient": a_t * _bracket(R * m) ** (n + 2)},
    )
    return MassiveEstimate(remainder, splitting, scaled)


def kernel_bound_report(n: int, count: int = 120) -> EstimateReport:
    """Envelopes of the Bessel potential kernel near the origin and at infinity."""
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n}")
    near = np.geomspace(KERNEL_R_MIN, 2.0, count, endpoint=False)
    far = np.geomspace(2.0, KERNEL_R_MAX, count)
    r = np.concatenate([near, far])
    K = np.array([bessel_kernel(n, v) for v in r])
    if n == 1:
        near_shape = np.log(2.0 / near) + 1.0
    else:
        near_shape = 1.0 + near ** (1.0 - n)
    shape = np.concatenate([near_shape, np.exp(-far / 2.0)])
    ratio = K / shape
    k_near, k_far = ratio[:count], ratio[count:]
    const = float(np.max(ratio))
    extras = {
        "near_sup": float(np.max(k_near)),
        "far_sup": float(np.max(k_far)),
        "far_argmax": float(far[np.argmax(k_far)]),
        "near_r_pow_n_minus_1": (K[:count] * near ** (n - 1)).tolist(),
    }
    passed = bool(np.isfinite(const) and np.all(K > 0))
    return EstimateReport("kernel-envelope", {"n": n}, r, K, shape, const, passed, None, extras)


def cordoba_check(n: int, profile, grid=None) -> EstimateReport:
    """Check ``L(phi^2) <= 2 phi L(phi) + 1e-8`` pointwise for ``L = (-Delta)^{1/2}``.

    ``profile`` is a :class:`ComplexField` or a callable taking the grid
    coordinate arrays.  Both sides are computed spectrally.
    """
    if n not in (1, 2):
        raise ValueError(f"cordoba_check supports n = 1, 2, got {n}")
    if isinstance(profile, ComplexField):
        grid = profile.grid
        vals = profile.values
    else:
        if grid is None:
            grid = make_grid(n, 40.0, 1024) if n == 1 else make_grid(2, 20.0, 256)
        vals = np.asarray(profile(*grid.coords))
    if grid.n_dim != n:
        raise ValueError("profile grid dimension does not match n")
    if np.iscomplexobj(vals) and np.any(np.abs(np.imag(vals)) > 0):
        raise ValueError("cordoba_check requires a real-valued profile")
    phi = np.real(vals).astype(float)

    half = SymbolSpec("massless")
    L_phi = apply_symbol(ComplexField(grid, phi), half).values.real
    L_sq = apply_symbol(ComplexField(grid, phi**2), half).values.real
    rhs = 2.0 * phi * L_phi
    excess = L_sq - rhs
    worst = float(np.max(excess))
    return EstimateReport(
        "cordoba", {"n": n, "s": 1}, (grid.axis if n == 1 else grid.radius.ravel()), L_sq.ravel(), rhs.ravel(),
        worst, bool(worst <= CORDOBA_TOL), None, {"min_margin": float(-worst)},
    )
