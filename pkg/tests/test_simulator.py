import json

import numpy as np
import pytest

from semirel.estimates import atilde
from semirel.lifespan import BlowupCertificate, DatumSpec, ProblemSpec, optimize_radius
from semirel.simulator import (
    SimConfig,
    TrajectoryRecord,
    comparison_solution,
    evolve,
    mollified_spec,
    ode_inequality_report,
)
from semirel.spectral import ComplexField, make_grid


@pytest.fixture(scope="module")
def grid1():
    return make_grid(1, 40.0, 1024)


def gaussian_spec(grid, amp, m=0.5, p=2, lam=-1j, alpha=1j, width=1.0):
    u0 = ComplexField(grid, amp * np.exp(-sum(c**2 for c in grid.coords) / (2 * width**2)))
    return ProblemSpec(grid.n_dim, p, lam, m, alpha, DatumSpec("grid-field", field=u0))


def test_config_validation(grid1):
    with pytest.raises(ValueError):
        SimConfig(grid1, dt_initial=1e-3, dt_min=1e-2)
    with pytest.raises(ValueError):
        SimConfig(grid1, t_max=0)
    with pytest.raises(ValueError):
        SimConfig(grid1, R=-1)


def test_free_flow_plane_wave(grid1):
    xi0 = grid1.frequency_axis[5]
    pw = ComplexField(grid1, np.exp(1j * xi0 * grid1.axis))
    spec = ProblemSpec(1, 2, -1j, 1.0, 1j, DatumSpec("grid-field", field=pw))
    rec = evolve(spec, SimConfig(grid1, dt_initial=0.1, dt_min=1e-6, t_max=10.0, free_flow=True,
                                 blowup_sup_threshold=1e9))
    assert rec.terminated_reason == "t_max"
    assert rec.times[-1] == pytest.approx(10.0)
    assert np.max(np.abs(rec.l2 - rec.l2[0])) / rec.l2[0] < 1e-10
    exact = np.exp(1j * 10.0 * np.hypot(1.0, xi0)) * pw.values
    assert np.max(np.abs(rec.final_values - exact)) < 1e-10


def test_free_flow_conserves_l2_two_dim():
    g = make_grid(2, 10.0, 64)
    x, y = g.coords
    u0 = ComplexField(g, (x + 1j * y) * np.exp(-(x**2 + y**2)))
    spec = ProblemSpec(2, 2, -1j, 0.3, 1j, DatumSpec("grid-field", field=u0))
    rec = evolve(spec, SimConfig(g, dt_initial=0.5, dt_min=1e-6, t_max=10.0, free_flow=True))
    assert np.max(np.abs(rec.l2 - rec.l2[0])) / rec.l2[0] < 1e-10


def test_self_convergence_order(grid1):
    spec = gaussian_spec(grid1, 2.0)
    finals = [
        evolve(spec, SimConfig(grid1, dt_initial=dt, dt_min=1e-9, t_max=0.2, adaptive=False)).final_values
        for dt in (0.02, 0.01, 0.005)
    ]
    e1 = np.max(np.abs(finals[0] - finals[1]))
    e2 = np.max(np.abs(finals[1] - finals[2]))
    assert np.log2(e1 / e2) >= 2.0


def test_deterministic(grid1):
    spec = gaussian_spec(grid1, 2.0)
    cfg = SimConfig(grid1, t_max=0.1)
    a, b = evolve(spec, cfg), evolve(spec, cfg)
    assert np.array_equal(a.M, b.M) and np.array_equal(a.times, b.times)
    assert np.array_equal(a.final_values, b.final_values)


def test_grid_refinement_stability():
    g = make_grid(1, 40.0, 512)
    spec = ProblemSpec(1, 2, -1j, 0.5, 1j, DatumSpec("plain-integrable", 1.0))
    rec = evolve(spec, SimConfig(g, t_max=0.2, dealias=True))
    assert rec.terminated_reason == "t_max"
    assert rec.refinement_delta < 1e-4


def test_dt_underflow_is_inconclusive(grid1):
    spec = gaussian_spec(grid1, 2.0)
    rec = evolve(spec, SimConfig(grid1, dt_initial=0.1, dt_min=0.09, t_max=1.0, tol=1e-14))
    assert rec.terminated_reason == "dt_underflow"
    assert rec.blowup_time is None


@pytest.fixture(scope="module")
def certified_run(grid1):
    spec = mollified_spec(ProblemSpec(1, 2, -1j, 0.0, 1j, DatumSpec("inner-singular", 30.0, 0.25)), grid1)
    cert = optimize_radius(spec, (0.1, 10.0), 100, Atilde=atilde(1))
    rec = evolve(spec, SimConfig(grid1, t_max=1.5 * cert.Tbound, R=cert.R))
    return spec, cert, rec


def test_certified_blowup_before_bound(certified_run):
    _, cert, rec = certified_run
    assert rec.terminated_reason == "blowup"
    assert rec.blowup_time == rec.times[-1]
    assert rec.blowup_time <= cert.Tbound
    assert np.all(np.diff(rec.times) > 0)


def test_certified_ode_inequality(certified_run):
    spec, cert, rec = certified_run
    rep = ode_inequality_report(rec, cert, spec.p)
    assert rep.checked > 0
    assert rep.fraction >= 0.99 and rep.passed
    assert rep.integrated_fraction >= 0.99


def test_certified_mass_nondecreasing(certified_run):
    _, cert, rec = certified_run
    above = rec.M[:-1] > cert.C1
    dM = np.diff(rec.M)[above]
    assert np.all(dM >= -10 * (rec.M_err[1:][above] + rec.M_err[:-1][above]))


def _cert(C1=1.0, C2=2.0, R=1.0, alpha=1j, M0=2.0):
    return BlowupCertificate(R=R, alpha=alpha, M0=M0, threshold=C1, Ctilde=1.0, D=C2,
                             Tbound=(M0 - C1) ** -1 / C2, C1=C1, C2=C2)


def _traj(t, M, R=1.0, alpha=1j):
    t = np.asarray(t, float)
    z = np.zeros_like(t)
    return TrajectoryRecord(R=R, alpha=alpha, times=t, M=np.asarray(M, float), l2=z, linf=z,
                            M_err=z, accepted=len(t) - 1, rejected=0, terminated_reason="t_max")


def test_ode_report_on_exact_comparison_solution():
    cert = _cert()
    t = np.linspace(0, 0.9 * cert.Tbound, 4000)
    y = comparison_solution(t, cert.M0 - cert.C1, cert.C2, 2.0)
    rep = ode_inequality_report(_traj(t, cert.C1 + y), cert, 2.0)
    # secant slopes of a convex solution dominate the left-point derivative
    assert rep.fraction == 1.0
    assert 0 <= rep.min_slack < 1e-2
    assert rep.integrated_fraction == 1.0


def test_ode_report_constant_trajectory_fails():
    cert = _cert()
    t = np.linspace(0, 1, 50)
    rep = ode_inequality_report(_traj(t, np.full(50, cert.C1 + 1)), cert, 2.0)
    assert rep.checked == 49 and rep.satisfied == 0 and not rep.passed


def test_ode_report_below_threshold_is_vacuous():
    cert = _cert()
    t = np.linspace(0, 1, 20)
    rep = ode_inequality_report(_traj(t, np.full(20, cert.C1 - 0.5)), cert, 2.0)
    assert rep.checked == 0 and rep.passed


def test_ode_report_mismatch():
    cert = _cert()
    t = np.linspace(0, 1, 5)
    with pytest.raises(ValueError):
        ode_inequality_report(_traj(t, t, R=2.0), cert, 2.0)
    with pytest.raises(ValueError):
        ode_inequality_report(_traj(t, t, alpha=1.0), cert, 2.0)


def test_comparison_solution_closed_form():
    t = np.array([0.0, 0.1, 0.2])
    y = comparison_solution(t, 1.0, 2.0, 3.0)
    np.testing.assert_allclose(y, (1 - 4 * t) ** -0.5)
    assert np.isinf(comparison_solution(1.0, 1.0, 1.0, 2.0))


def test_record_exports(tmp_path, grid1):
    rec = evolve(gaussian_spec(grid1, 1.0), SimConfig(grid1, t_max=0.05))
    rec.to_csv(tmp_path / "t.csv", ["v: 1"])
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[:2] == ["# v: 1", "t,M_R,l2,linf"]
    assert len(lines) == 2 + len(rec.times)
    rec.to_json(tmp_path / "t.json")
    data = json.loads((tmp_path / "t.json").read_text())
    assert data["terminated_reason"] == "t_max"
    assert data["accepted_steps"] == rec.accepted


def test_grid_mismatch():
    g1, g2 = make_grid(1, 10.0, 64), make_grid(1, 10.0, 128)
    spec = gaussian_spec(g1, 1.0)
    with pytest.raises(ValueError):
        evolve(spec, SimConfig(g2, t_max=0.1))
