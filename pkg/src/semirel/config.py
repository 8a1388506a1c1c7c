"""Strict experiment configuration files.

Configs are YAML documents with nested sections.  Every section forbids
unknown keys so that a misspelt exponent fails loudly instead of silently
falling back to a default.  Complex numbers may be written as strings
(``"-1j"``, ``"0.5+2j"``) or as ``[re, im]`` pairs.

Example
-------
.. code-block:: yaml

    subcommand: certify
    problem: {n: 1, p: 2, lam: "-1j"}
    datum: {kind: inner-singular, mu: 100, k: 0.25}
"""
from __future__ import annotations

from typing import Annotated, Literal

import numpy as np
import yaml
from pydantic import BaseModel, BeforeValidator, ConfigDict, PlainSerializer, model_validator

from .lifespan import DatumSpec, ProblemSpec
from .simulator import SimConfig
from .spectral import SpectralGrid, make_grid

__all__ = [
    "ExperimentConfig",
    "ConfigError",
    "load_config",
    "dump_config",
]

SUBCOMMANDS = ("kernel", "estimate", "certify", "scaling", "simulate")


class ConfigError(ValueError):
    """Raised for configs that parse but violate a module precondition."""


def _to_complex(v):
    if isinstance(v, complex):
        return v
    if isinstance(v, bool):
        raise ValueError("booleans are not complex numbers")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError:
            raise ValueError(f"cannot parse {v!r} as a complex number") from None
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    raise ValueError("complex values are strings like '-1j' or [re, im] pairs")


Complex = Annotated[
    complex,
    BeforeValidator(_to_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list),
]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProblemSection(_Strict):
    n: int
    p: float
    lam: Complex
    m: float = 0.0
    alpha: Complex | None = None


class DatumSection(_Strict):
    kind: Literal["inner-singular", "outer-decay", "plain-integrable"]
    mu: float = 1.0
    k: float = 0.0


class GeometricSweep(_Strict):
    start: float
    stop: float
    count: int

    @model_validator(mode="after")
    def _check(self):
        if self.count < 2:
            raise ValueError("sweep count must be at least 2")
        if not 0 < self.start < self.stop:
            raise ValueError("sweep needs 0 < start < stop")
        return self

    def values(self) -> np.ndarray:
        return np.geomspace(self.start, self.stop, self.count)


class GridSection(_Strict):
    half_width: float = 40.0
    points_per_axis: int = 1024

    def build(self, n: int) -> SpectralGrid:
        return make_grid(n, self.half_width, self.points_per_axis)


class SimulationSection(_Strict):
    dt_initial: float = 1e-3
    dt_min: float = 1e-12
    t_max: float | None = None
    blowup_sup_threshold: float = 1e6
    tol: float = 1e-8
    dealias: bool = False
    max_steps: int = 1_000_000


class OutputSection(_Strict):
    dir: str = "out"
    formats: Literal["csv", "json", "both"] = "both"


class ExperimentConfig(_Strict):
    subcommand: Literal["certify", "scaling", "simulate"]
    problem: ProblemSection
    datum: DatumSection
    radius: float | None = None
    R_range: GeometricSweep = GeometricSweep(start=1e-2, stop=1e2, count=200)
    sweep: GeometricSweep | None = None
    grid: GridSection | None = None
    simulation: SimulationSection | None = None
    run_simulations: bool = False
    Atilde: float | None = None
    output: OutputSection = OutputSection()

    @model_validator(mode="after")
    def _cross_check(self):
        # module-level preconditions, re-validated at parse time
        self.problem_spec()
        if self.radius is not None and not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.Atilde is not None and not self.Atilde > 0:
            raise ValueError("Atilde must be positive")
        if self.subcommand == "scaling":
            if self.sweep is None:
                raise ValueError("scaling needs a 'sweep' section (geometric mu-grid)")
            if self.datum.kind not in ("inner-singular", "outer-decay"):
                raise ValueError("scaling needs an inner-singular or outer-decay datum")
            if self.run_simulations and self.problem.n > 2:
                raise ValueError("simulations support n = 1 or 2")
        elif self.sweep is not None:
            raise ValueError("'sweep' is only used by the scaling subcommand")
        if self.subcommand == "simulate" and self.problem.n > 2:
            raise ValueError("simulations support n = 1 or 2")
        if self.subcommand == "simulate" or self.run_simulations:
            self.grid_spec()
        return self

    def problem_spec(self, mu: float | None = None) -> ProblemSpec:
        pr, d = self.problem, self.datum
        datum = DatumSpec(d.kind, mu=d.mu if mu is None else float(mu), k=d.k)
        return ProblemSpec(pr.n, pr.p, pr.lam, pr.m, pr.alpha, datum)

    def grid_spec(self) -> SpectralGrid:
        return (self.grid or GridSection()).build(self.problem.n)

    def sim_config(self, R: float, t_max: float) -> SimConfig:
        s = self.simulation or SimulationSection()
        return SimConfig(
            grid=self.grid_spec(),
            dt_initial=s.dt_initial,
            dt_min=s.dt_min,
            t_max=s.t_max if s.t_max is not None else t_max,
            blowup_sup_threshold=s.blowup_sup_threshold,
            R=R,
            tol=s.tol,
            dealias=s.dealias,
            max_steps=s.max_steps,
        )

    def effective(self) -> dict:
        return self.model_dump(mode="json")


def load_config(path, subcommand: str | None = None) -> ExperimentConfig:
    """Parse and validate a YAML config.

    A missing ``subcommand`` key is filled from ``subcommand``; a conflicting
    one is an error.
    """
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    if subcommand is not None:
        given = data.setdefault("subcommand", subcommand)
        if given != subcommand:
            raise ConfigError(f"{path}: config is for {given!r}, not {subcommand!r}")
    return ExperimentConfig.model_validate(data)


def dump_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg.effective(), fh, sort_keys=False)
