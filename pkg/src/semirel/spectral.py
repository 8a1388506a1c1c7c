"""Periodic spectral grids and Fourier multipliers.

The whole space R^n is approximated by the periodic box [-L, L)^n sampled
with N points per axis.  Frequencies follow ``xi_j = pi j / L`` for
``j = -N/2, ..., N/2 - 1`` (in FFT order), so that the discrete transform
diagonalizes every radial multiplier ``sigma(|xi|)``.

Supported symbols
-----------------
massive      ``(m^2 + |xi|^2)^{1/2}``
massless     ``|xi|``
remainder    ``(m^2 + |xi|^2)^{1/2} - |xi|``  (the bounded part of the splitting)
propagator   ``exp(i t (m^2 + |xi|^2)^{1/2})``
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "SpectralGrid",
    "ComplexField",
    "SymbolSpec",
    "make_grid",
    "weight_field",
    "apply_symbol",
    "symbol_values",
]

SYMBOL_KINDS = ("massive", "massless", "remainder", "propagator")


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic lattice on ``[-half_width, half_width)^n_dim``."""

    n_dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.n_dim not in (1, 2, 3):
            raise ValueError(f"n_dim must be 1, 2 or 3, got {self.n_dim}")
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")
        N = self.points_per_axis
        if int(N) != N or N < 8 or N % 2:
            raise ValueError(f"points_per_axis must be even >= 8, got {N}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.n_dim

    @property
    def size(self) -> int:
        return self.points_per_axis**self.n_dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.n_dim

    @cached_property
    def axis(self) -> np.ndarray:
        """Physical coordinates along one axis, starting at ``-L``."""
        return -self.half_width + self.spacing * np.arange(self.points_per_axis)

    @cached_property
    def frequency_axis(self) -> np.ndarray:
        """Frequencies along one axis in FFT order (``pi j / L``)."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points_per_axis, d=self.spacing)

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.n_dim), indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coords))

    @cached_property
    def freq_norm(self) -> np.ndarray:
        ks = np.meshgrid(*([self.frequency_axis] * self.n_dim), indexing="ij")
        return np.sqrt(sum(k**2 for k in ks))

    @property
    def center_index(self) -> int:
        """Index of ``x = 0`` along every axis."""
        return self.points_per_axis // 2

    def line(self, values: np.ndarray) -> np.ndarray:
        """Restrict grid values to the first coordinate axis through the origin."""
        idx = (slice(None),) + (self.center_index,) * (self.n_dim - 1)
        return values[idx]


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a :class:`SpectralGrid`, stored with shape ``grid.shape``."""

    grid: SpectralGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.size != self.grid.size:
            raise ValueError(
                f"field has {vals.size} values, grid expects {self.grid.size}"
            )
        vals = vals.reshape(self.grid.shape).astype(complex, copy=True)
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def integral(self) -> complex:
        return complex(np.sum(self.values) * self.grid.cell_volume)


@dataclass(frozen=True)
class SymbolSpec:
    """Which radial Fourier multiplier to apply."""

    kind: str
    mass: float = 0.0
    time: float = 0.0

    def __post_init__(self):
        if self.kind not in SYMBOL_KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}; use one of {SYMBOL_KINDS}")
        if not np.isfinite(self.mass) or self.mass < 0:
            raise ValueError(f"mass must be finite and nonnegative, got {self.mass}")
        if not np.isfinite(self.time):
            raise ValueError("time must be finite")


def make_grid(n_dim: int, half_width: float, points_per_axis: int) -> SpectralGrid:
    """Build a periodic grid; see :class:`SpectralGrid` for the conventions."""
    if int(points_per_axis) != points_per_axis or points_per_axis < 8 or points_per_axis % 2:
        raise ValueError("points_per_axis must be even ≥ 8")
    return SpectralGrid(int(n_dim), float(half_width), int(points_per_axis))


def weight_field(grid: SpectralGrid, q: float, R: float = 1.0) -> ComplexField:
    """Sample ``<x/R>^{-q} = (1 + |x/R|^2)^{-q/2}`` on ``grid``."""
    if not q > 0:
        raise ValueError(f"q must be positive, got {q}")
    if not R > 0:
        raise ValueError(f"R must be positive, got {R}")
    return ComplexField(grid, (1.0 + (grid.radius / R) ** 2) ** (-q / 2.0))


def symbol_values(kind: str, xi_norm, mass: float = 0.0, time: float = 0.0):
    """Evaluate a multiplier symbol at frequencies of modulus ``xi_norm``."""
    xi = np.asarray(xi_norm, dtype=float)
    if kind == "massless":
        return xi.copy()
    massive = np.hypot(mass, xi)
    if kind == "massive":
        return massive
    if kind == "remainder":
        # m^2 / (sqrt(m^2+xi^2) + xi) avoids cancellation at large |xi|.
        denom = massive + xi
        out = np.zeros_like(xi)
        np.divide(mass**2, denom, out=out, where=denom > 0)
        return out
    if kind == "propagator":
        return np.exp(1j * time * massive)
    raise ValueError(f"unknown symbol kind {kind!r}")


def apply_symbol(field: ComplexField, symbol: SymbolSpec) -> ComplexField:
    """Return ``F^{-1}(sigma * F field)`` with the grid's discrete transform."""
    sigma = symbol_values(symbol.kind, field.grid.freq_norm, symbol.mass, symbol.time)
    out = np.fft.ifftn(sigma * np.fft.fftn(field.values))
    return ComplexField(field.grid, out)
