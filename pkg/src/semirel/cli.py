"""Command-line front end.

::

    semirel kernel --dim N
    semirel estimate --dim N --q Q [--mass M --radius R]
    semirel certify CONFIG
    semirel scaling CONFIG
    semirel simulate CONFIG

Exit status is 0 on success, 1 on invalid input and 2 on numerical failure.
Every output file starts with a header echoing the parameters and the
package version; outputs of a failed run are removed.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field

import numpy as np
from pydantic import ValidationError

from . import __version__
from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .estimates import massive_estimate_report, weight_decay_report
from .fractional import QuadratureError, kernel_table
from .lifespan import certify, corollary_radii, optimize_radius, threshold, weighted_mass
from .simulator import evolve, mollified_spec, ode_inequality_report

__all__ = ["main", "scaling_study", "ScalingResult"]

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class RangeError(ValueError):
    """A sweep left the validity range of the bound being evaluated."""


@dataclass
class _Outputs:
    """Tracks written files so a failed run can be rolled back."""

    directory: str
    formats: str
    header: dict
    written: list = field(default_factory=list)
    created: bool = False

    def __post_init__(self):
        self.created = not os.path.isdir(self.directory)
        os.makedirs(self.directory, exist_ok=True)

    @property
    def csv(self) -> bool:
        return self.formats in ("csv", "both")

    @property
    def json(self) -> bool:
        return self.formats in ("json", "both")

    def path(self, name: str) -> str:
        p = os.path.join(self.directory, name)
        self.written.append(p)
        return p

    def header_lines(self) -> list[str]:
        return [f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in self.header.items()]

    def write_json(self, name: str, payload: dict):
        with open(self.path(name), "w") as fh:
            json.dump({"header": self.header, **payload}, fh, indent=2)

    def write_csv_rows(self, name: str, columns, rows):
        with open(self.path(name), "w") as fh:
            for line in self.header_lines():
                fh.write(f"# {line}\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(_fmt(v) for v in row) + "\n")

    def rollback(self):
        for p in self.written:
            try:
                os.remove(p)
            except FileNotFoundError:
                pass
        self.written.clear()
        if self.created and not os.listdir(self.directory):
            os.rmdir(self.directory)


def _fmt(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def _header(command: str, params: dict) -> dict:
    return {"artifact": "semirel", "version": __version__, "command": command, "parameters": params}


# -- subcommands --------------------------------------------------------------


def _run_kernel(args, out: _Outputs) -> str:
    table = kernel_table(args.dim, count=args.count)
    if out.csv:
        table.to_csv(out.path(f"kernel_n{args.dim}.csv"), out.header_lines())
    if out.json:
        out.write_json(
            f"kernel_n{args.dim}.json",
            {
                "n_dim": table.n_dim,
                "radii": table.radii.tolist(),
                "K_r": table.values.tolist(),
                "weighted_l1": {str(q): v for q, v in table.weighted_l1.items()},
                "positive": table.is_positive(),
                "monotone": table.is_monotone(),
            },
        )
    return (
        f"kernel n={args.dim}: {len(table.radii)} radii, ||K||_1={table.norm(0):.9f}, "
        f"positive={table.is_positive()}, monotone={table.is_monotone()}"
    )


def _write_report(out: _Outputs, report, stem: str):
    if out.csv:
        report.to_csv(out.path(f"{stem}.csv"), out.header_lines())
    if out.json:
        report.to_json(out.path(f"{stem}.json"), out.header)


def _run_estimate(args, out: _Outputs) -> str:
    n, q = args.dim, args.q
    if args.mass is None and args.radius is None:
        rep = weight_decay_report(n, q)
        _write_report(out, rep, f"weight-decay_n{n}_q{q:g}")
        return (
            f"estimate {rep.estimate_id} n={n} q={q:g} regime={rep.regime}: "
            f"A={rep.empirical_constant:.6g}, tail slope={rep.extras['lhs_tail_slope']:.4f}, "
            f"passed={rep.passed}"
        )
    m = 0.0 if args.mass is None else args.mass
    R = 1.0 if args.radius is None else args.radius
    est = massive_estimate_report(n, q, m, R)
    parts = []
    for rep in est.reports:
        _write_report(out, rep, f"{rep.estimate_id}_n{n}_q{q:g}_m{m:g}_R{R:g}")
        parts.append(f"{rep.estimate_id} worst ratio={rep.empirical_constant:.4g} passed={rep.passed}")
    return f"estimate n={n} q={q:g} m={m:g} R={R:g}: " + "; ".join(parts)


def _certificate_radius(cfg: ExperimentConfig, spec, A):
    """Explicit radius, else the corollary radius, else the optimizer."""
    if cfg.radius is not None:
        return certify(spec, cfg.radius, Atilde=A)
    if spec.datum.kind in ("inner-singular", "outer-decay"):
        return certify(spec, corollary_radii(spec, Atilde=A).R_star, Atilde=A)
    r = cfg.R_range
    return optimize_radius(spec, (r.start, r.stop), r.count, Atilde=A)


def _run_certify(cfg: ExperimentConfig, out: _Outputs) -> str:
    spec = cfg.problem_spec()
    cert = _certificate_radius(cfg, spec, cfg.Atilde)
    payload = {"certified": cert is not None, "spec": spec.echo()}
    if cert is not None:
        payload.update(cert.to_dict())
    if out.json:
        out.write_json("certificate.json", payload)
    if out.csv:
        keys = ["R", "M0", "threshold", "Ctilde", "D", "Tbound", "C1", "C2"]
        rows = [[getattr(cert, k) for k in keys]] if cert is not None else []
        out.write_csv_rows("certificate.csv", keys, rows)
    if cert is None:
        return "certify: no certificate (weighted mass does not exceed the threshold)"
    return (
        f"certify: R={cert.R:.6g} M0={cert.M0:.6g} threshold={cert.threshold:.6g} "
        f"Tbound={cert.Tbound:.6g}"
    )


@dataclass
class ScalingResult:
    mu: np.ndarray
    R_star: np.ndarray
    M0: np.ndarray
    threshold: np.ndarray
    Tbound: np.ndarray
    slope: float
    intercept: float
    residual: float
    expected_slope: float
    blowup_times: list | None = None


def scaling_study(cfg: ExperimentConfig) -> ScalingResult:
    """Lifespan bound at the corollary radius over a geometric amplitude grid.

    Fits ``log Tbound = slope log mu + intercept`` by least squares; the
    residual is the root-mean-square deviation of the fit.  Raises
    :class:`RangeError` if the mass exceeds ``1/R_star`` anywhere on the grid.
    """
    mus = cfg.sweep.values()
    rows = []
    blowups = [] if cfg.run_simulations else None
    A = cfg.Atilde
    for mu in mus:
        spec = cfg.problem_spec(mu)
        cr = corollary_radii(spec, Atilde=A)
        if not cr.mass_admissible(spec.m):
            raise RangeError(
                f"mass m={spec.m:g} exceeds 1/R_star={cr.mass_limit:.6g} at mu={mu:.6g}; "
                "the corollary bound needs m <= 1/R_star"
            )
        M0 = weighted_mass(spec.datum, spec.alpha, cr.R_star, n=spec.n)
        thr = threshold(spec, cr.R_star, cr.Ctilde)
        rows.append((mu, cr.R_star, M0, thr, cr.Tbound_at_R_star, cr.exponent))
        if blowups is not None:
            blowups.append(_simulate_at(cfg, spec, cr.R_star, A))
    arr = np.array(rows)
    x, y = np.log(arr[:, 0]), np.log(arr[:, 4])
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return ScalingResult(
        mu=arr[:, 0], R_star=arr[:, 1], M0=arr[:, 2], threshold=arr[:, 3], Tbound=arr[:, 4],
        slope=float(slope), intercept=float(intercept), residual=residual,
        expected_slope=float(arr[0, 5]), blowup_times=blowups,
    )


def _simulate_at(cfg, spec, R, A):
    """Mollified simulation certified at radius ``R``; blow-up time or ``None``."""
    msp = mollified_spec(spec, cfg.grid_spec())
    cert = certify(msp, R, Atilde=A)
    t_max = 1.0 if cert is None else 1.5 * cert.Tbound
    traj = evolve(msp, cfg.sim_config(R, t_max))
    return traj.blowup_time


def _run_scaling(cfg: ExperimentConfig, out: _Outputs) -> str:
    res = scaling_study(cfg)
    cols = ["mu", "R_star", "M0", "threshold", "Tbound"]
    data = [res.mu, res.R_star, res.M0, res.threshold, res.Tbound]
    if res.blowup_times is not None:
        cols.append("t_blowup")
        data.append(res.blowup_times)
    fit = {
        "slope": res.slope,
        "intercept": res.intercept,
        "residual": res.residual,
        "expected_slope": res.expected_slope,
    }
    if out.csv:
        out.write_csv_rows("scaling.csv", cols, zip(*data))
    if out.json:
        out.write_json(
            "scaling.json",
            {"fit": fit, "columns": {c: [None if v is None else float(v) for v in d] for c, d in zip(cols, data)}},
        )
    return (
        f"scaling {cfg.datum.kind}: slope={res.slope:.6f} (expected {res.expected_slope:.6f}), "
        f"intercept={res.intercept:.6f}, residual={res.residual:.2e}"
    )


def _run_simulate(cfg: ExperimentConfig, out: _Outputs) -> str:
    spec = cfg.problem_spec()
    msp = mollified_spec(spec, cfg.grid_spec())
    cert = _certificate_radius(cfg, msp, cfg.Atilde)
    R = cert.R if cert is not None else (cfg.radius or 1.0)
    t_max = 1.5 * cert.Tbound if cert is not None else 1.0
    traj = evolve(msp, cfg.sim_config(R, t_max))
    ode = ode_inequality_report(traj, cert, spec.p) if cert is not None else None
    header_lines = out.header_lines()
    if out.csv:
        traj.to_csv(out.path("trajectory.csv"), header_lines)
    if out.json:
        out.write_json(
            "simulation.json",
            {
                **traj.summary(),
                "certificate": None if cert is None else cert.to_dict(),
                "ode_inequality": None if ode is None else ode.to_dict(),
            },
        )
    line = f"simulate: terminated={traj.terminated_reason}"
    if traj.blowup_time is not None:
        line += f" t_blowup={traj.blowup_time:.6g}"
    if cert is not None:
        line += f" Tbound={cert.Tbound:.6g} ode_inequality={100 * ode.fraction:.1f}%"
    else:
        line += " (no certificate)"
    return line


# -- entry point --------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--format", choices=("csv", "json", "both"), default=None)
    common.add_argument(
        "--seedless", action="store_true", default=True,
        help="accepted for compatibility; every computation is deterministic",
    )
    ap = argparse.ArgumentParser(prog="semirel", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"semirel {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    k = sub.add_parser("kernel", parents=[common], help="tabulate the Bessel potential kernel")
    k.add_argument("--dim", type=int, required=True)
    k.add_argument("--count", type=int, default=200)

    e = sub.add_parser("estimate", parents=[common], help="weight estimates with empirical constants")
    e.add_argument("--dim", type=int, required=True)
    e.add_argument("--q", type=float, required=True)
    e.add_argument("--mass", type=float, default=None)
    e.add_argument("--radius", type=float, default=None)

    for name, text in (
        ("certify", "blow-up certificate for a config"),
        ("scaling", "lifespan scaling in the amplitude"),
        ("simulate", "simulate a certified datum"),
    ):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("config")
    return ap


_CONFIG_RUNNERS = {"certify": _run_certify, "scaling": _run_scaling, "simulate": _run_simulate}


def main(argv=None) -> int:
    ap = _parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    out = None
    try:
        if args.command in _CONFIG_RUNNERS:
            cfg = load_config(args.config, args.command)
            overrides = {}
            if args.out is not None:
                overrides["dir"] = args.out
            if args.format is not None:
                overrides["formats"] = args.format
            if overrides:
                cfg = cfg.model_copy(update={"output": cfg.output.model_copy(update=overrides)})
            out = _Outputs(cfg.output.dir, cfg.output.formats, _header(args.command, cfg.effective()))
            dump_config(cfg, out.path("effective_config.yaml"))
            summary = _CONFIG_RUNNERS[args.command](cfg, out)
        else:
            params = {k: v for k, v in vars(args).items() if k not in ("out", "format", "verbose", "seedless")}
            if args.command == "estimate" and (args.mass is not None or args.radius is not None):
                params["mass"] = 0.0 if args.mass is None else args.mass
                params["radius"] = 1.0 if args.radius is None else args.radius
            out = _Outputs(args.out or "out", args.format or "both", _header(args.command, params))
            runner = _run_kernel if args.command == "kernel" else _run_estimate
            summary = runner(args, out)
    # LinAlgError subclasses ValueError, so this clause comes first
    except (QuadratureError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        if out is not None:
            out.rollback()
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ConfigError, RangeError, ValueError, TypeError, OSError) as exc:
        if out is not None:
            out.rollback()
        print(f"error: {_describe(exc)}", file=sys.stderr)
        return EXIT_INVALID
    print(summary)
    return EXIT_OK


def _describe(exc) -> str:
    if isinstance(exc, ValidationError):
        return "; ".join(
            f"{'.'.join(str(p) for p in e['loc']) or 'config'}: {e['msg']}" for e in exc.errors()
        )
    return str(exc)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
