"""Grid-free evaluation of the half Laplacian and of the Bessel potential kernel.

Pointwise values of ``(-Delta)^{1/2} f`` are computed from the singular
integral

    (-Delta)^{1/2} f(x) = B_n  PV int (f(x) - f(x+y)) / |y|^{n+1} dy,

split into three absolutely convergent pieces: a Taylor-corrected ball
``|y| < eps``, a middle shell integrated over spherical means, and the
outer region ``|y| > tail_cut``.  Only radial profiles are supported, which
reduces the angular integral to one variable.

The kernel ``K`` of ``(1 - Delta)^{-1/2}`` is evaluated by subordination to
the heat kernel, an integral with a positive integrand.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

__all__ = [
    "QuadratureError",
    "RadialProfile",
    "KernelTable",
    "sphere_area",
    "frac_laplacian_point",
    "normalization_constant",
    "bessel_kernel",
    "kernel_table",
    "kernel_weighted_l1",
]

KERNEL_R_MIN = 1e-3
KERNEL_R_MAX = 40.0


class QuadratureError(RuntimeError):
    """Raised when an adaptive quadrature cannot reach the requested tolerance."""


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere S^{n-1} (2 for n = 1)."""
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


@dataclass(frozen=True)
class RadialProfile:
    """A radial function ``f(x) = g(|x|)`` with a declared algebraic decay rate.

    Use the constructors :meth:`weight`, :meth:`gaussian` and :meth:`custom`.
    """

    kind: str
    decay: float
    q: float | None = None
    sigma: float | None = None
    func: Callable | None = field(default=None, compare=False)

    @classmethod
    def weight(cls, q: float) -> "RadialProfile":
        """``<x>^{-q}``."""
        if not q > 0:
            raise ValueError(f"weight exponent must be positive, got {q}")
        return cls("weight", decay=float(q), q=float(q))

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "RadialProfile":
        """``exp(-|x|^2 / (2 sigma^2))``; decays faster than any power."""
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        return cls("gaussian", decay=math.inf, sigma=float(sigma))

    @classmethod
    def custom(cls, func: Callable, decay: float, smooth: bool = False) -> "RadialProfile":
        """Wrap a radial callable ``g(r)``.

        ``smooth=True`` declares that ``g(|x|)`` is C^2 with bounded second
        derivatives; the singular integral is not absolutely convergent
        without it, so undeclared profiles are rejected.
        """
        if not smooth:
            raise ValueError("custom profile must declare C^2 smoothness (smooth=True)")
        if not decay > 0:
            raise ValueError(f"decay exponent must be positive, got {decay}")
        prof = cls("custom", decay=float(decay), func=func)
        prof._check_decay()
        return prof

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.kind == "weight":
            return (1.0 + r * r) ** (-self.q / 2.0)
        if self.kind == "gaussian":
            return np.exp(-0.5 * (r / self.sigma) ** 2)
        return np.asarray(self.func(r), dtype=float)

    def laplacian(self, r: float, n: int) -> float:
        """Laplacian of ``g(|x|)`` at ``|x| = r`` in dimension ``n``."""
        if self.kind == "weight":
            q = self.q
            s = 1.0 + r * r
            return -q * n * s ** (-q / 2 - 1) + q * (q + 2) * r * r * s ** (-q / 2 - 2)
        if self.kind == "gaussian":
            s2 = self.sigma**2
            return (r * r / s2**2 - n / s2) * math.exp(-0.5 * r * r / s2)
        h = 1e-3 * max(1.0, r)
        g = self.func
        if r == 0:
            # g is even in r, so Delta g(0) = n g''(0)
            return float(n * 2.0 * (g(h) - g(0.0)) / h**2)
        d2 = (g(r + h) - 2 * g(r) + g(abs(r - h))) / h**2
        d1 = (g(r + h) - g(abs(r - h))) / (2 * h)
        return float(d2 + (n - 1) * d1 / r)

    def _check_decay(self):
        radii = np.array([1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0])
        ratio = np.abs(self(radii)) * (1 + radii**2) ** (self.decay / 2)
        if not np.all(np.isfinite(ratio)):
            raise ValueError("profile values must be finite")
        head, tail = ratio[radii <= 10].max(), ratio[radii > 10].max()
        if tail > 10.0 * max(head, 1e-300):
            raise ValueError(
                f"declared decay exponent {self.decay} is not honored by the profile"
            )


# Composite Gauss-Legendre rule on theta in [0, pi], graded towards theta = pi,
# where the sphere |y| = r passes closest to the origin when r ~ |x|.
def _graded_theta_rule(levels: int = 24, order: int = 16):
    z, w = np.polynomial.legendre.leggauss(order)
    edges = [0.0, 0.5 * math.pi] + [math.pi - 0.5 * math.pi * 2.0**-j for j in range(1, levels)]
    edges.append(math.pi)
    nodes, weights = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        nodes.append(0.5 * (b - a) * z + 0.5 * (a + b))
        weights.append(0.5 * (b - a) * w)
    return np.concatenate(nodes), np.concatenate(weights)


_THETA, _THETA_W = _graded_theta_rule()
_COS_THETA = np.cos(_THETA)


def _angular_weights(n: int) -> np.ndarray:
    # dω on S^{n-1} reduced to theta with |S^{n-2}| sin^{n-2}(theta)
    return sphere_area(n - 1) * np.sin(_THETA) ** (n - 2) * _THETA_W


def _sphere_integral(profile: RadialProfile, rho: float, r: float, n: int, wts) -> float:
    """``int_{S^{n-1}} f(x + r w) dw`` for ``|x| = rho``."""
    if n == 1:
        return float(profile(abs(rho + r)) + profile(abs(rho - r)))
    d2 = rho * rho + r * r + 2.0 * r * rho * _COS_THETA
    return float(np.dot(wts, profile(np.sqrt(np.maximum(d2, 0.0)))))


def _quad(func, a, b, tol):
    val, err = integrate.quad(func, a, b, epsabs=tol, epsrel=1e-10, limit=500)
    return val, err


def frac_laplacian_point(
    profile: RadialProfile,
    x,
    eps: float = 1e-2,
    tail_cut: float = 100.0,
    n_dim: int | None = None,
    tol: float = 1e-9,
) -> float:
    """Evaluate ``((-Delta)^{1/2} f)(x)`` for a radial profile.

    Parameters
    ----------
    profile : RadialProfile
    x : float or array_like
        Evaluation point.  A scalar is placed on the first axis of R^{n_dim}.
    eps, tail_cut : float
        Inner ball radius (Taylor corrected) and outer cutoff, with
        ``0 < eps < 1 < tail_cut``.
    n_dim : int, optional
        Dimension; required when ``x`` is a scalar, otherwise ``len(x)``.
    tol : float
        Absolute tolerance for the summed quadrature error estimates.

    Raises
    ------
    QuadratureError
        If the estimated quadrature error exceeds ``tol * max(1, |value|)``.
    """
    if not isinstance(profile, RadialProfile):
        raise TypeError("profile must be a RadialProfile")
    if not 0 < eps < 1 < tail_cut:
        raise ValueError("need 0 < eps < 1 < tail_cut")
    xv = np.atleast_1d(np.asarray(x, dtype=float))
    if xv.size == 1 and n_dim is not None:
        n = int(n_dim)
    else:
        n = xv.size
        if n_dim is not None and n_dim != n:
            raise ValueError("n_dim does not match the dimension of x")
    if n not in (1, 2, 3):
        raise ValueError(f"dimension must be 1, 2 or 3, got {n}")
    rho = float(np.linalg.norm(xv))

    area = sphere_area(n)
    wts = _angular_weights(n) if n > 1 else None
    f0 = float(profile(rho))

    inner = -eps * area * profile.laplacian(rho, n) / (2.0 * n)

    def shell(r):
        return (area * f0 - _sphere_integral(profile, rho, r, n, wts)) / (r * r)

    def outer(r):
        return -_sphere_integral(profile, rho, r, n, wts) / (r * r)

    feats = [rho - 2.0, rho, rho + 2.0]
    total, err_total = inner, 0.0

    cuts = sorted({eps, tail_cut, *[c for c in feats if eps < c < tail_cut]})
    for a, b in zip(cuts[:-1], cuts[1:]):
        v, e = _quad(shell, a, b, tol)
        total += v
        err_total += e

    # outer region: the f(x) part is exact, the rest by quadrature
    total += area * f0 / tail_cut
    tail_edges = sorted({tail_cut, *[c for c in feats if c > tail_cut]})
    tail_edges.append(max(tail_edges[-1], 2.0 * rho + 10.0))
    tail_edges = sorted(set(tail_edges))
    for a, b in zip(tail_edges[:-1], tail_edges[1:]):
        v, e = _quad(outer, a, b, tol)
        total += v
        err_total += e
    v, e = _quad(outer, tail_edges[-1], np.inf, tol)
    total += v
    err_total += e

    value = normalization_constant(n) * total
    if err_total > tol * max(1.0, abs(total)) * 10:
        raise QuadratureError(
            f"quadrature error estimate {err_total:.3e} exceeds tolerance at |x|={rho}"
        )
    return value


@lru_cache(maxsize=None)
def normalization_constant(n_dim: int) -> float:
    """``(int_{R^n} (1 - cos xi_1) / |xi|^{n+1} dxi)^{-1}``.

    In polar coordinates the radial integral is ``|w_1| int_0^oo (1-cos t)/t^2 dt``,
    which leaves a one-dimensional angular integral of ``|w_1|``.
    """
    n = int(n_dim)
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n_dim}")
    near, _ = integrate.quad(
        lambda t: 2.0 * (math.sin(0.5 * t) / t) ** 2 if t > 0 else 0.5,
        0.0, 1.0, epsabs=1e-14, epsrel=1e-12,
    )
    osc, _ = integrate.quad(lambda t: 1.0 / t**2, 1.0, np.inf, weight="cos", wvar=1.0)
    radial = near + 1.0 - osc
    if n == 1:
        angular = 2.0
    else:
        ang, _ = integrate.quad(
            lambda th: abs(math.cos(th)) * math.sin(th) ** (n - 2),
            0.0, math.pi, points=[0.5 * math.pi], epsabs=1e-14, epsrel=1e-12,
        )
        angular = sphere_area(n - 1) * ang
    return 1.0 / (radial * angular)


def _kernel_subordination(n: int, r: float) -> float:
    """``pi^{-1/2} int_0^oo t^{-1/2} e^{-t} (4 pi t)^{-n/2} e^{-r^2/(4t)} dt`` for any r > 0.

    Integrated in ``s = log t`` around the maximum of the integrand.
    """
    a = 0.5 * (1 - n)
    r2 = r * r
    u_star = r2 / (2.0 * (math.sqrt(a * a + r2) - a))  # a <= 0, no cancellation
    s_star = math.log(u_star)

    def phi(s):
        return a * s - math.exp(s) - 0.25 * r2 * math.exp(-s)

    p_star = phi(s_star)

    def integrand(s):
        return math.exp(phi(s) - p_star)

    # outside [s_lo, s_hi] the integrand is below exp(-700) of its peak
    s_lo = min(s_star, math.log(0.25 * r2 / 800.0)) - 1.0
    s_hi = max(s_star, math.log(800.0)) + 1.0
    left, e1 = integrate.quad(integrand, s_lo, s_star, epsabs=0, epsrel=1e-11, limit=200)
    right, e2 = integrate.quad(integrand, s_star, s_hi, epsabs=0, epsrel=1e-11, limit=200)
    if (e1 + e2) > 1e-8 * (left + right):
        raise QuadratureError(f"kernel quadrature did not converge at r={r}")
    return math.exp(p_star) * (left + right) / (math.sqrt(math.pi) * (4 * math.pi) ** (n / 2))


def bessel_kernel(n_dim: int, r: float) -> float:
    """Kernel ``K`` of ``(1 - Delta)^{-1/2}`` at ``|x| = r``, for ``1e-3 <= r <= 40``."""
    n = int(n_dim)
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n_dim}")
    if not KERNEL_R_MIN <= r <= KERNEL_R_MAX:
        raise ValueError(f"r={r} outside the supported range [{KERNEL_R_MIN}, {KERNEL_R_MAX}]")
    return _kernel_subordination(n, float(r))


@dataclass
class KernelTable:
    n_dim: int
    radii: np.ndarray
    values: np.ndarray
    weighted_l1: dict = field(default_factory=dict)

    def norm(self, q: float) -> float:
        if q not in self.weighted_l1:
            self.weighted_l1[q] = kernel_weighted_l1(self.n_dim, q)
        return self.weighted_l1[q]

    def is_positive(self) -> bool:
        return bool(np.all(self.values > 0))

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) <= 0))

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            writer = csv.writer(fh)
            writer.writerow(["r", "K_r", "n_dim"])
            for r, k in zip(self.radii, self.values):
                writer.writerow([repr(float(r)), repr(float(k)), self.n_dim])


def kernel_table(n_dim: int, count: int = 200) -> KernelTable:
    """Tabulate ``K`` on a geometric grid covering ``[1e-3, 40]``."""
    radii = np.geomspace(KERNEL_R_MIN, KERNEL_R_MAX, count)
    values = np.array([bessel_kernel(n_dim, r) for r in radii])
    return KernelTable(int(n_dim), radii, values)


@lru_cache(maxsize=None)
def kernel_weighted_l1(n_dim: int, q: float) -> float:
    """``int K(y) <y>^q dy`` by radial quadrature.

    The radial integral runs in ``log r`` up to ``r = 40``; beyond it ``K`` is
    replaced by the envelope ``K(40) e^{-(r-40)}``, which overestimates the
    (exponentially small) remainder.
    """
    n = int(n_dim)
    if n not in (1, 2, 3):
        raise ValueError(f"unsupported dimension {n_dim}")
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")
    area = sphere_area(n)

    def integrand(u):
        r = math.exp(u)
        return _kernel_subordination(n, r) * (1 + r * r) ** (q / 2) * r**n

    lo, hi = math.log(1e-14), math.log(KERNEL_R_MAX)
    pts = [math.log(0.1), 0.0, math.log(5.0)]
    body, err = integrate.quad(integrand, lo, hi, points=pts, epsabs=0, epsrel=1e-10, limit=400)
    k_end = _kernel_subordination(n, KERNEL_R_MAX)
    tail, _ = integrate.quad(
        lambda r: k_end * math.exp(-(r - KERNEL_R_MAX)) * (1 + r * r) ** (q / 2) * r ** (n - 1),
        KERNEL_R_MAX, np.inf,
    )
    if err > 1e-8 * body:
        raise QuadratureError("weighted kernel norm did not converge")
    return area * (body + tail)

