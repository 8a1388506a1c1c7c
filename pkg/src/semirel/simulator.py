"""Pseudospectral integration of ``i u_t + (m^2-Delta)^{1/2} u = lam |u|^p``.

The equation is advanced as ``u_t = i A u - i lam |u|^p`` with the linear part
solved exactly by the propagator ``exp(i t A)`` (integrating-factor, Lawson
form of classical RK4).  Step sizes are controlled by step doubling.
"""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .lifespan import BlowupCertificate, DatumSpec, ProblemSpec, datum_field
from .spectral import ComplexField, SpectralGrid, make_grid, symbol_values

__all__ = [
    "SimConfig",
    "TrajectoryRecord",
    "OdeInequalityReport",
    "evolve",
    "initial_field",
    "mollified_spec",
    "ode_inequality_report",
    "comparison_solution",
]

log = logging.getLogger(__name__)

TERMINATIONS = ("t_max", "blowup", "dt_underflow")


@dataclass
class SimConfig:
    grid: SpectralGrid
    dt_initial: float = 1e-3
    dt_min: float = 1e-12
    t_max: float = 1.0
    blowup_sup_threshold: float = 1e6
    R: float = 1.0
    alpha: complex | None = None
    dealias: bool = False
    tol: float = 1e-8
    adaptive: bool = True
    free_flow: bool = False
    max_steps: int = 1_000_000
    # sup-norm growth (relative to the datum) separating blow-up from an
    # inconclusive step-size underflow
    growth_factor: float = 10.0

    def __post_init__(self):
        if not 0 < self.dt_min < self.dt_initial:
            raise ValueError("need 0 < dt_min < dt_initial")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if not self.R > 0:
            raise ValueError("R must be positive")
        if not self.blowup_sup_threshold > 0:
            raise ValueError("blowup_sup_threshold must be positive")


@dataclass
class TrajectoryRecord:
    R: float
    alpha: complex
    times: np.ndarray
    M: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    M_err: np.ndarray
    accepted: int
    rejected: int
    terminated_reason: str
    blowup_time: float | None = None
    final_values: np.ndarray | None = field(default=None, repr=False)
    refinement_delta: float | None = None

    def summary(self) -> dict:
        return {
            "blowup_time": self.blowup_time,
            "terminated_reason": self.terminated_reason,
            "accepted_steps": self.accepted,
            "rejected_steps": self.rejected,
            "final_time": float(self.times[-1]),
            "R": self.R,
            "alpha": [self.alpha.real, self.alpha.imag],
            "refinement_delta": self.refinement_delta,
        }

    def to_csv(self, path, header_lines=()):
        with open(path, "w", newline="") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["t", "M_R", "l2", "linf"])
            for row in zip(self.times, self.M, self.l2, self.linf):
                w.writerow([repr(float(v)) for v in row])

    def to_json(self, path, header: dict | None = None):
        payload = self.summary()
        if header is not None:
            payload = {"header": header, **payload}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


def initial_field(spec: ProblemSpec, grid: SpectralGrid) -> ComplexField:
    """Datum on ``grid``; datum families are sampled in mollified form."""
    d = spec.datum
    if d is None:
        raise ValueError("spec has no datum")
    if d.kind == "grid-field":
        if d.field.grid != grid:
            raise ValueError("grid-field datum lives on a different grid")
        return d.field
    return datum_field(d, spec.alpha, grid, mollify=True)


def mollified_spec(spec: ProblemSpec, grid: SpectralGrid) -> ProblemSpec:
    """Copy of ``spec`` whose datum is the sampled, mollified field on ``grid``.

    Certificates for simulations are computed from this spec so that theory
    and numerics see the same datum.
    """
    u0 = initial_field(spec, grid)
    return replace(spec, datum=DatumSpec("grid-field", field=u0))


class _Stepper:
    def __init__(self, spec: ProblemSpec, grid: SpectralGrid, free_flow: bool):
        self.sigma = symbol_values("massive", grid.freq_norm, spec.m)
        self.coef = 0.0 if free_flow else -1j * spec.lam
        self.p = spec.p
        self._cache = {}

    def prop(self, h):
        E = self._cache.get(h)
        if E is None:
            if len(self._cache) > 64:
                self._cache.clear()
            E = np.exp(1j * h * self.sigma)
            self._cache[h] = E
        return E

    def nonlinear_hat(self, uhat):
        if self.coef == 0:
            return np.zeros_like(uhat)
        u = np.fft.ifftn(uhat)
        # |u|^p as (|u|^2)^{p/2}
        return np.fft.fftn(self.coef * (u.real**2 + u.imag**2) ** (0.5 * self.p))

    def step(self, uhat, h):
        E, E2 = self.prop(h), self.prop(0.5 * h)
        k1 = self.nonlinear_hat(uhat)
        k2 = self.nonlinear_hat(E2 * (uhat + 0.5 * h * k1))
        k3 = self.nonlinear_hat(E2 * uhat + 0.5 * h * k2)
        k4 = self.nonlinear_hat(E * uhat + h * E2 * k3)
        return E * uhat + (h / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def _functional(uhat, w, alpha, dv):
    u = np.fft.ifftn(uhat)
    M = -(alpha * np.sum(u * w) * dv).imag
    mag2 = u.real**2 + u.imag**2
    return float(M), float(math.sqrt(mag2.sum() * dv)), float(math.sqrt(mag2.max()))


def evolve(spec: ProblemSpec, config: SimConfig) -> TrajectoryRecord:
    """Integrate from ``t = 0`` until ``t_max``, blow-up, or step-size underflow."""
    grid = config.grid
    if grid.n_dim != spec.n:
        raise ValueError("grid dimension does not match the problem")
    alpha = spec.alpha if config.alpha is None else complex(config.alpha)
    u0 = initial_field(spec, grid)
    w = (1.0 + (grid.radius / config.R) ** 2) ** (-(spec.n + 1) / 2)
    dv = grid.cell_volume
    stepper = _Stepper(spec, grid, config.free_flow)

    uhat = np.fft.fftn(u0.values)
    M, l2, linf = _functional(uhat, w, alpha, dv)
    sup0 = linf
    times, Ms, l2s, linfs, errs = [0.0], [M], [l2], [linf], [0.0]
    t, dt = 0.0, config.dt_initial
    accepted = rejected = 0
    reason, blowup_time = None, None

    while accepted < config.max_steps:
        if t >= config.t_max * (1 - 1e-14):
            reason = "t_max"
            break
        if dt < config.dt_min:
            if linfs[-1] > config.growth_factor * sup0:
                reason, blowup_time = "blowup", t
            else:
                reason = "dt_underflow"
            break
        h = min(dt, config.t_max - t)
        with np.errstate(over="ignore", invalid="ignore"):
            full = stepper.step(uhat, h)
            if config.adaptive:
                half = stepper.step(stepper.step(uhat, 0.5 * h), 0.5 * h)
            else:
                half = full
        if not (np.all(np.isfinite(half)) and np.all(np.isfinite(full))):
            rejected += 1
            dt = 0.5 * h
            continue
        if config.adaptive:
            u_f, u_c = np.fft.ifftn(half), np.fft.ifftn(full)
            scale = max(1.0, float(np.max(np.abs(u_f))))
            err = float(np.max(np.abs(u_f - u_c))) / (15.0 * scale)
            if err > config.tol:
                rejected += 1
                dt = 0.5 * h
                continue
            M_err = abs(float(-(alpha * np.sum((u_f - u_c) * w) * dv).imag)) / 15.0
            growth = 2.0 if err == 0 else min(2.0, max(0.5, 0.9 * (config.tol / err) ** 0.2))
        else:
            M_err, growth = 0.0, 1.0
        uhat = half
        t += h
        accepted += 1
        M, l2, linf = _functional(uhat, w, alpha, dv)
        times.append(t)
        Ms.append(M)
        l2s.append(l2)
        linfs.append(linf)
        errs.append(M_err)
        if linf > config.blowup_sup_threshold:
            reason, blowup_time = "blowup", t
            break
        if config.adaptive:
            dt = h * growth if h == dt else max(dt, h)
    else:
        reason = "dt_underflow" if linfs[-1] <= config.growth_factor * sup0 else "blowup"
        if reason == "blowup":
            blowup_time = t
        log.warning("step budget exhausted at t=%g", t)

    rec = TrajectoryRecord(
        R=config.R, alpha=alpha, times=np.array(times), M=np.array(Ms), l2=np.array(l2s),
        linf=np.array(linfs), M_err=np.array(errs), accepted=accepted, rejected=rejected,
        terminated_reason=reason, blowup_time=blowup_time,
        final_values=np.fft.ifftn(uhat),
    )
    if config.dealias:
        rec.refinement_delta = _refinement_delta(spec, config, rec)
    return rec


def _refinement_delta(spec, config, rec):
    # rerun on the doubled grid up to the last time before any blow-up and
    # compare the weighted mass there
    if rec.terminated_reason != "t_max":
        t_end = rec.times[max(len(rec.times) // 2, 1)]
    else:
        t_end = rec.times[-1]
    g = config.grid
    fine = make_grid(g.n_dim, g.half_width, 2 * g.points_per_axis)
    if spec.datum.kind == "grid-field":
        return None
    coarse_cfg = SimConfig(**{**config.__dict__, "t_max": float(t_end), "dealias": False})
    fine_cfg = SimConfig(**{**coarse_cfg.__dict__, "grid": fine})
    a = evolve(spec, coarse_cfg).M[-1]
    b = evolve(spec, fine_cfg).M[-1]
    return float(abs(a - b) / max(abs(a), 1e-300))


def comparison_solution(t, y0: float, C2: float, p: float):
    """Closed-form solution of ``y' = C2 y^p``, ``y(0) = y0 > 0`` (inf past blow-up)."""
    t = np.asarray(t, dtype=float)
    base = y0 ** (1 - p) - (p - 1) * C2 * t
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(base > 0, np.abs(base) ** (-1.0 / (p - 1)), np.inf)


@dataclass
class OdeInequalityReport:
    checked: int
    satisfied: int
    min_slack: float
    integrated_checked: int
    integrated_satisfied: int
    fraction_required: float = 0.99

    @property
    def fraction(self) -> float:
        return 1.0 if self.checked == 0 else self.satisfied / self.checked

    @property
    def integrated_fraction(self) -> float:
        return 1.0 if self.integrated_checked == 0 else self.integrated_satisfied / self.integrated_checked

    @property
    def passed(self) -> bool:
        return self.fraction >= self.fraction_required

    def to_dict(self) -> dict:
        return {
            "checked": self.checked,
            "satisfied": self.satisfied,
            "fraction": self.fraction,
            "min_slack": self.min_slack,
            "integrated_checked": self.integrated_checked,
            "integrated_fraction": self.integrated_fraction,
            "passed": self.passed,
        }


def ode_inequality_report(
    traj: TrajectoryRecord, cert: BlowupCertificate, p: float, safety: float = 10.0
) -> OdeInequalityReport:
    """Check ``dM/dt >= C2 (M - C1)^p`` along the accepted steps of ``traj``.

    The step tolerance is ``safety`` times the step-doubling estimate of the
    error in ``M`` divided by the step length.
    """
    if not math.isclose(traj.R, cert.R, rel_tol=1e-12):
        raise ValueError(f"trajectory radius {traj.R} differs from certificate radius {cert.R}")
    if abs(complex(traj.alpha) - complex(cert.alpha)) > 1e-12 * max(1.0, abs(cert.alpha)):
        raise ValueError("trajectory and certificate use different alpha")
    t, M = traj.times, traj.M
    C1, C2 = cert.C1, cert.C2
    dt = np.diff(t)
    above = M[:-1] > C1
    dq = np.diff(M) / dt
    rhs = C2 * np.clip(M[:-1] - C1, 0.0, None) ** p
    tol = safety * (traj.M_err[1:] + traj.M_err[:-1]) / dt
    slack = dq - rhs
    ok = slack >= -tol
    checked = int(above.sum())
    satisfied = int((ok & above).sum())
    min_slack = float(slack[above].min()) if checked else math.inf

    integ_checked = integ_ok = 0
    y0 = M[0] - C1
    if y0 > 0:
        y = comparison_solution(t, y0, C2, p)
        lower = M - C1
        # past the comparison blow-up (y = inf) no finite value can pass
        finite = np.isfinite(y)
        yf = np.where(finite, y, 0.0)
        good = finite & (lower >= yf - 1e-9 * np.maximum(1.0, np.abs(yf)))
        integ_checked = len(t)
        integ_ok = int(good.sum())
    return OdeInequalityReport(checked, satisfied, min_slack, integ_checked, integ_ok)
