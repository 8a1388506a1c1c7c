"""Explicit blow-up thresholds, lifespan bounds and their scaling in the amplitude.

Notation
--------
``W_n = int <x>^{-n-1} dx``, ``p' = p/(p-1)`` and ``a = 1/(p-1)``.  For a radius
``R`` the weighted mass is ``M_R = -Im(alpha int u0 <x/R>^{-n-1} dx)``.  A
certificate exists when ``M_R`` exceeds

    threshold = Ctilde <R m>^{(n+2)/(p-1)} R^{n - a},

and the lifespan bound is the blow-up time of ``y' = C2 y^p`` started from
``M_R - threshold`` with ``C2 = D R^{-n(p-1)}``.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from .fractional import sphere_area
from .spectral import ComplexField

__all__ = [
    "DatumSpec",
    "ProblemSpec",
    "BlowupCertificate",
    "CorollaryRadius",
    "holder_conjugate",
    "weight_mass",
    "amplitude_constants",
    "weighted_mass",
    "certify",
    "optimize_radius",
    "corollary_radii",
    "integrable_radius",
    "datum_profile",
]

DATUM_KINDS = ("grid-field", "inner-singular", "outer-decay", "plain-integrable")


def _bracket(v):
    return math.sqrt(1.0 + v * v)


@dataclass(frozen=True)
class DatumSpec:
    """Initial datum family.

    The canonical realization is ``u0 = -i conj(alpha) g / |alpha|^2`` so that
    ``-Im(alpha u0) = g`` with the nonnegative radial shape

    inner-singular    ``g = mu |x|^{-k}`` on ``|x| <= 1``, zero outside
    outer-decay       ``g = mu |x|^{-k}`` on ``|x| > 1``, zero inside
    plain-integrable  ``g = mu exp(-|x|^2 / 2)``

    ``grid-field`` wraps explicit samples in ``field``.
    """

    kind: str
    mu: float = 1.0
    k: float = 0.0
    field: ComplexField | None = None

    def __post_init__(self):
        if self.kind not in DATUM_KINDS:
            raise ValueError(f"unknown datum kind {self.kind!r}; use one of {DATUM_KINDS}")
        if self.kind == "grid-field":
            if self.field is None:
                raise ValueError("grid-field datum needs a field")
            return
        if not self.mu > 0:
            raise ValueError(f"amplitude mu must be positive, got {self.mu}")
        if self.k < 0:
            raise ValueError(f"exponent k must be nonnegative, got {self.k}")


@dataclass(frozen=True)
class ProblemSpec:
    n: int
    p: float
    lam: complex
    m: float = 0.0
    alpha: complex | None = None
    datum: DatumSpec | None = None

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if not self.p > 1:
            raise ValueError(f"p must exceed 1, got {self.p}")
        lam = complex(self.lam)
        if lam == 0:
            raise ValueError("lambda must be nonzero")
        object.__setattr__(self, "lam", lam)
        if self.alpha is None:
            object.__setattr__(self, "alpha", lam.conjugate() / abs(lam))
        else:
            object.__setattr__(self, "alpha", complex(self.alpha))
        if not (self.alpha * lam).real > 0:
            raise ValueError(
                f"Re(alpha*lambda) must be positive, got {(self.alpha * lam).real:g}"
            )
        # the symbol only sees m^2
        object.__setattr__(self, "m", abs(float(self.m)))
        d = self.datum
        if d is None:
            return
        a = 1.0 / (self.p - 1.0)
        if d.kind == "inner-singular" and not d.k < min(self.n / 2, a):
            raise ValueError(
                f"inner-singular datum needs k < min(n/2, 1/(p-1)) = {min(self.n / 2, a):g}, "
                f"got k={d.k:g}"
            )
        if d.kind == "outer-decay" and not self.n / 2 < d.k < a:
            raise ValueError(
                f"outer-decay datum needs n/2 < k < 1/(p-1), i.e. {self.n / 2:g} < k < {a:g}, "
                f"got k={d.k:g}"
            )
        if d.kind == "grid-field" and d.field.grid.n_dim != self.n:
            raise ValueError("datum grid dimension does not match n")

    @property
    def p_conj(self) -> float:
        return holder_conjugate(self.p)

    @property
    def re_alpha_lam(self) -> float:
        return (self.alpha * self.lam).real

    def echo(self) -> dict:
        d = self.datum
        datum = None if d is None else {"kind": d.kind, "mu": d.mu, "k": d.k}
        return {
            "n": self.n,
            "p": self.p,
            "lam": [self.lam.real, self.lam.imag],
            "m": self.m,
            "alpha": [self.alpha.real, self.alpha.imag],
            "datum": datum,
        }


@dataclass
class BlowupCertificate:
    R: float
    alpha: complex
    M0: float
    threshold: float
    Ctilde: float
    D: float
    Tbound: float
    C1: float
    C2: float
    spec: ProblemSpec | None = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if k != "spec"}
        out["alpha"] = [self.alpha.real, self.alpha.imag]
        if self.spec is not None:
            out["spec"] = self.spec.echo()
        return out

    def to_json(self, path, header: dict | None = None):
        payload = self.to_dict()
        if header is not None:
            payload = {"header": header, **payload}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


def holder_conjugate(p: float) -> float:
    if not p > 1:
        raise ValueError(f"p must exceed 1, got {p}")
    return p / (p - 1.0)


def weight_mass(n: int) -> float:
    """``int_{R^n} <x>^{-n-1} dx`` by radial quadrature."""
    val, _ = integrate.quad(
        lambda r: r ** (n - 1) * (1.0 + r * r) ** (-(n + 1) / 2), 0.0, np.inf,
        epsabs=0, epsrel=1e-12, limit=200,
    )
    return sphere_area(n) * val


def amplitude_constants(spec: ProblemSpec, Atilde: float) -> tuple[float, float]:
    """Return ``(Ctilde, D)`` for the given weight-estimate constant ``Atilde``."""
    if not Atilde > 0:
        raise ValueError("Atilde must be positive")
    ral = spec.re_alpha_lam
    if not ral > 0:
        raise ValueError("Re(alpha*lambda) must be positive")
    p, pc = spec.p, spec.p_conj
    W = weight_mass(spec.n)
    aa = abs(spec.alpha)
    log_ct_p = (
        (1 + pc / p) * math.log(2.0)
        - (pc / p) * math.log(p)
        - math.log(pc)
        - pc * math.log(ral)
        + (p + pc) * math.log(aa)
        + pc * math.log(Atilde)
        + p * math.log(W)
    )
    Ctilde = math.exp(log_ct_p / p)
    D = 0.5 * ral * aa ** (-p) * W ** (1 - p)
    return Ctilde, D


def datum_profile(datum: DatumSpec):
    """Radial shape ``g(r)`` with ``-Im(alpha u0) = g``."""
    mu, k = datum.mu, datum.k
    if datum.kind == "inner-singular":
        return lambda r: np.where(r <= 1.0, mu * np.power(np.maximum(r, 1e-300), -k), 0.0)
    if datum.kind == "outer-decay":
        return lambda r: np.where(r > 1.0, mu * np.power(np.maximum(r, 1.0), -k), 0.0)
    if datum.kind == "plain-integrable":
        return lambda r: mu * np.exp(-0.5 * np.asarray(r) ** 2)
    raise ValueError(f"datum kind {datum.kind!r} has no radial profile")


def datum_field(datum: DatumSpec, alpha: complex, grid, mollify: bool = True) -> ComplexField:
    """Sample the canonical realization of a datum family on ``grid``.

    With ``mollify`` the singular value at the origin is capped at its value
    at radius ``h`` and the jump at ``|x| = 1`` is replaced by a smooth
    transition of width ``h``.
    """
    if datum.kind == "grid-field":
        return datum.field
    r = grid.radius
    h = grid.spacing
    mu, k = datum.mu, datum.k
    if datum.kind == "plain-integrable":
        g = mu * np.exp(-0.5 * r**2)
    else:
        rr = np.maximum(r, h) if mollify else np.maximum(r, 1e-300)
        power = mu * rr ** (-k)
        if mollify:
            step = 0.5 * (1.0 + np.tanh((r - 1.0) / h))
        else:
            step = (r > 1.0).astype(float)
        g = power * ((1.0 - step) if datum.kind == "inner-singular" else step)
    u0 = -1j * np.conj(alpha) * g / abs(alpha) ** 2
    return ComplexField(grid, u0)


def _radial_mass(g_kind, n, mu, k, R):
    """``mu |S^{n-1}| int r^{n-1-k} <r/R>^{-n-1} dr`` over the datum support.

    Written in ``s = r/R``; the algebraic endpoint weight absorbs ``s^{n-1-k}``
    at the origin.
    """
    area = sphere_area(n)
    if g_kind == "plain-integrable":
        val, _ = integrate.quad(
            lambda r: r ** (n - 1) * np.exp(-0.5 * r * r) * (1.0 + (r / R) ** 2) ** (-(n + 1) / 2),
            0.0, np.inf, epsabs=0, epsrel=1e-12, limit=200,
        )
        return mu * area * val
    beta = n - 1 - k

    def F(s):
        return (1.0 + s * s) ** (-(n + 1) / 2)

    def head(c):  # int_0^c, c <= 1
        v, _ = integrate.quad(F, 0.0, c, weight="alg", wvar=(beta, 0.0), epsabs=0, epsrel=1e-13)
        return v

    def upper(lo, hi):  # lo >= 1
        v, _ = integrate.quad(lambda s: s**beta * F(s), lo, hi, epsabs=0, epsrel=1e-13, limit=400)
        return v

    c = 1.0 / R
    if g_kind == "inner-singular":
        val = head(c) if c <= 1 else head(1.0) + upper(1.0, c)
    else:
        val = head(1.0) - head(c) + upper(1.0, np.inf) if c <= 1 else upper(c, np.inf)
    return mu * area * R ** (beta + 1) * val


def weighted_mass(u0, alpha: complex, R: float, n: int | None = None, guard: float = 1e-6) -> float:
    """``M_R = -Im(alpha int u0(x) <x/R>^{-n-1} dx)``.

    ``u0`` is a :class:`ComplexField` (grid quadrature) or a
    :class:`DatumSpec` family member (radial quadrature, canonical
    realization).  For grid fields the weighted integrand on the boundary
    must stay below ``guard`` times its maximum.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    alpha = complex(alpha)
    if isinstance(u0, DatumSpec) and u0.kind == "grid-field":
        u0 = u0.field
    if isinstance(u0, ComplexField):
        grid = u0.grid
        n = grid.n_dim
        w = (1.0 + (grid.radius / R) ** 2) ** (-(n + 1) / 2)
        dens = np.abs(u0.values) * w
        peak = dens.max()
        if peak > 0:
            edge = max(
                np.abs(np.take(dens, [0], axis=ax)).max() for ax in range(n)
            )
            if edge > guard * peak:
                raise ValueError(
                    f"weighted datum does not decay on the grid (boundary/peak = {edge / peak:.2e})"
                )
        total = np.sum(u0.values * w) * grid.cell_volume
        return float(-(alpha * total).imag)
    if isinstance(u0, DatumSpec):
        if n is None:
            raise ValueError("dimension n is required for a datum family")
        # canonical realization: -Im(alpha u0) = g, independent of alpha
        return _radial_mass(u0.kind, n, u0.mu, u0.k, R)
    raise TypeError("u0 must be a ComplexField or a DatumSpec")


def _resolve_atilde(spec, Atilde):
    if Atilde is not None:
        return Atilde
    from .estimates import atilde

    return atilde(spec.n)


def threshold(spec: ProblemSpec, R: float, Ctilde: float) -> float:
    n, p = spec.n, spec.p
    a = 1.0 / (p - 1.0)
    return Ctilde * _bracket(R * spec.m) ** ((n + 2) * a) * R ** (n - a)


def certify(spec: ProblemSpec, R: float, Atilde: float | None = None, M0: float | None = None):
    """Return a :class:`BlowupCertificate` at radius ``R``, or ``None``.

    ``M0`` overrides the weighted mass of ``spec.datum``.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    A = _resolve_atilde(spec, Atilde)
    Ct, D = amplitude_constants(spec, A)
    if M0 is None:
        if spec.datum is None:
            raise ValueError("spec has no datum and no M0 was given")
        M0 = weighted_mass(spec.datum, spec.alpha, R, n=spec.n)
    thr = threshold(spec, R, Ct)
    if not M0 > thr:
        return None
    p, n = spec.p, spec.n
    C2 = D * R ** (-n * (p - 1))
    T = (M0 - thr) ** (1 - p) / ((p - 1) * D) * R ** (n * (p - 1))
    return BlowupCertificate(
        R=float(R), alpha=spec.alpha, M0=float(M0), threshold=float(thr), Ctilde=Ct, D=D,
        Tbound=float(T), C1=float(thr), C2=float(C2), spec=spec,
    )


def optimize_radius(
    spec: ProblemSpec,
    R_range: tuple[float, float] = (1e-2, 1e2),
    grid_points: int = 200,
    Atilde: float | None = None,
):
    """Minimize the lifespan bound over a geometric grid of radii."""
    lo, hi = R_range
    if not 0 < lo <= hi:
        raise ValueError("R_range must be a nonempty positive interval")
    A = _resolve_atilde(spec, Atilde)
    best = None
    for R in np.geomspace(lo, hi, max(int(grid_points), 1)):
        cert = certify(spec, float(R), Atilde=A)
        # strict comparison keeps the smaller radius on ties
        if cert is not None and (best is None or cert.Tbound < best.Tbound):
            best = cert
    return best


@dataclass
class CorollaryRadius:
    I: float
    R_star: float
    exponent: float
    Tbound_at_R_star: float
    mass_limit: float
    Ctilde: float
    D: float

    def mass_admissible(self, m: float) -> bool:
        return abs(m) <= self.mass_limit


def corollary_radii(spec: ProblemSpec, Atilde: float | None = None) -> CorollaryRadius:
    """Radius and lifespan bound for the singular and slowly decaying data families.

    ``Tbound_at_R_star`` is the closed-form upper bound on the lifespan at
    ``R_star``, an exact power of ``mu``.  ``mass_limit = 1/R_star`` is the
    largest mass for which the bound is established.
    """
    d = spec.datum
    if d is None or d.kind not in ("inner-singular", "outer-decay"):
        raise ValueError("corollary_radii needs an inner-singular or outer-decay datum")
    n, p, k, mu = spec.n, spec.p, d.k, d.mu
    a = 1.0 / (p - 1.0)
    A = _resolve_atilde(spec, Atilde)
    Ct, D = amplitude_constants(spec, A)
    omega = sphere_area(n)
    if d.kind == "inner-singular":
        if not k < min(n / 2, a):
            raise ValueError(f"k must satisfy k < min(n/2, 1/(p-1)) = {min(n / 2, a):g}")
        I = omega * 2.0 ** (-n - 1) / (n - k)
        kk = k
    else:
        if not n / 2 < k < a:
            raise ValueError(f"k must satisfy n/2 < k < 1/(p-1): {n / 2:g} < k < {a:g}")
        if k < n:
            I = 2.0 ** (-n - 2) * omega / (n - k)
        else:
            integral = math.log(2.0) if k == n else (2.0 ** (n - k) - 1.0) / (n - k)
            I = 2.0 ** (-n - 1) * omega * integral
        kk = min(n, k)
    base = 2.0 ** ((n + p + 1) * a) * Ct
    R_star = (mu * I / base) ** (1.0 / (kk - a))
    exponent = -1.0 / (a - kk)
    T = (
        2.0 ** (p - 1) / ((p - 1) * D)
        * base ** (-kk * (p - 1) / (kk - a))
        * (mu * I) ** exponent
    )
    return CorollaryRadius(
        I=I, R_star=R_star, exponent=exponent, Tbound_at_R_star=T,
        mass_limit=1.0 / R_star, Ctilde=Ct, D=D,
    )


def integrable_radius(spec: ProblemSpec, Atilde: float | None = None, margin: float = 1.01):
    """Radius for integrable data with positive total mass and small mass ``m``.

    Requires ``1 < p < 1 + 1/n``.  Returns ``(R, certificate)``; the radius is
    large enough that half the total mass beats the threshold with
    ``<R m>`` replaced by its bound at ``R m <= 1``, and the certificate is
    ``None`` when ``m >= 1/R``.
    """
    n, p = spec.n, spec.p
    if not 1 < p < 1 + 1.0 / n:
        raise ValueError(f"integrable-data radius needs 1 < p < 1 + 1/n = {1 + 1 / n:g}")
    d = spec.datum
    if d is None:
        raise ValueError("spec has no datum")
    a = 1.0 / (p - 1.0)
    A = _resolve_atilde(spec, Atilde)
    Ct, _ = amplitude_constants(spec, A)
    if d.kind == "grid-field":
        total = float(-(spec.alpha * d.field.integral()).imag)
    else:
        total = _radial_mass(d.kind, n, d.mu, d.k, 1e12)
    if not total > 0:
        raise ValueError("datum needs -Im(alpha int u0) > 0")
    # R0: weighted mass already exceeds half the total mass
    R0 = 1.0
    while weighted_mass(d, spec.alpha, R0, n=n) <= 0.5 * total:
        R0 *= 2.0
    R_min = (0.5 * total / (Ct * 2.0 ** ((n + 2) * a))) ** (1.0 / (n - a))
    R = margin * max(R0, R_min)
    cert = certify(spec, R, Atilde=A) if spec.m < 1.0 / R else None
    return R, cert
