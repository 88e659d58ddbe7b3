"""State containers, physical fluxes and time-step control for the shallow water system."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import NamedTuple

import numpy as np


class DryStateError(ValueError):
    """Raised when a non-positive water depth is encountered."""


class ConfigurationError(ValueError):
    """Raised for geometrically inconsistent setups (e.g. a sonic circle leaving the padded grid)."""


@dataclass(frozen=True)
class PhysicalParams:
    g: float = 9.812
    f: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError(f"g must be positive, got {self.g}")
        if self.f < 0:
            raise ValueError(f"f must be non-negative, got {self.f}")


@dataclass(frozen=True)
class Grid:
    """Uniform Cartesian grid of square cells with a ghost layer of width ``ghost``."""

    nx: int
    ny: int
    hbar: float
    origin: tuple[float, float] = (0.0, 0.0)
    ghost: int = 2

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("nx and ny must be >= 1")
        if not self.hbar > 0:
            raise ValueError("hbar must be positive")
        if self.ghost < 2:
            raise ValueError("ghost width must be >= 2")

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of padded per-cell arrays, indexed ``[i, j]`` with i along x."""
        return (self.nx + 2 * self.ghost, self.ny + 2 * self.ghost)

    @property
    def interior(self) -> tuple[slice, slice]:
        G = self.ghost
        return (slice(G, G + self.nx), slice(G, G + self.ny))

    def cell_centers(self, padded: bool = False) -> tuple[np.ndarray, np.ndarray]:
        """Cell-centre coordinates as 1-D arrays ``(x, y)``."""
        off = self.ghost if padded else 0
        ix = np.arange(-off, self.nx + off)
        iy = np.arange(-off, self.ny + off)
        x = self.origin[0] + (ix + 0.5) * self.hbar
        y = self.origin[1] + (iy + 0.5) * self.hbar
        return x, y

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.hbar, y0, y0 + self.ny * self.hbar)


class ConservedState(NamedTuple):
    h: float
    hu: float
    hv: float


class PrimitiveState(NamedTuple):
    h: float
    u: float
    v: float


@dataclass
class ConservedField:
    """Cell averages ``q = (h, hu, hv)`` on the padded grid, shape ``(3, nx+2G, ny+2G)``."""

    grid: Grid
    q: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.q.shape != (3,) + self.grid.shape:
            raise ValueError(f"expected array of shape {(3,) + self.grid.shape}, got {self.q.shape}")

    @classmethod
    def from_interior(cls, grid: Grid, h, hu, hv, time: float = 0.0) -> "ConservedField":
        q = np.zeros((3,) + grid.shape)
        sl = grid.interior
        for k, arr in enumerate((h, hu, hv)):
            q[k][sl] = arr
        return cls(grid, q, time)

    @property
    def h(self) -> np.ndarray:
        return self.q[0]

    def interior(self) -> np.ndarray:
        """View of the interior cells, shape ``(3, nx, ny)``."""
        sl = self.grid.interior
        return self.q[:, sl[0], sl[1]]

    def primitive(self, interior_only: bool = False) -> np.ndarray:
        q = self.interior() if interior_only else self.q
        return to_primitive(q)

    def copy(self) -> "ConservedField":
        return ConservedField(self.grid, self.q.copy(), self.time)


@dataclass(frozen=True)
class StepContext:
    dt: float
    hbar: float
    tau: float = dc_field(init=False)
    lam: float = dc_field(init=False)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        object.__setattr__(self, "tau", self.dt / 2)
        object.__setattr__(self, "lam", self.dt / self.hbar)


def _check_wet(h) -> None:
    h = np.asarray(h)
    if not np.all(h > 0):
        raise DryStateError(f"non-positive water depth encountered (min h = {np.min(h):.6g})")


def to_primitive(s):
    """Convert ``(h, hu, hv)`` to ``(h, u, v)``.

    Accepts a :class:`ConservedState` or an array whose leading axis holds the
    three components.
    """
    if isinstance(s, ConservedState):
        _check_wet(s.h)
        return PrimitiveState(s.h, s.hu / s.h, s.hv / s.h)
    q = np.asarray(s, dtype=float)
    _check_wet(q[0])
    return np.stack([q[0], q[1] / q[0], q[2] / q[0]])


def to_conserved(w):
    if isinstance(w, PrimitiveState):
        return ConservedState(w.h, w.h * w.u, w.h * w.v)
    w = np.asarray(w, dtype=float)
    return np.stack([w[0], w[0] * w[1], w[0] * w[2]])


def physical_flux(w, axis: str, params: PhysicalParams):
    """Flux of the shallow water system in direction ``axis`` ('x' or 'y') for primitive ``w``."""
    h, u, v = w[0], w[1], w[2]
    p = 0.5 * params.g * h * h
    if axis == "x":
        hu = h * u
        out = (hu, hu * u + p, hu * v)
    elif axis == "y":
        hv = h * v
        out = (hv, hv * u, hv * v + p)
    else:
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if isinstance(w, PrimitiveState) or np.ndim(h) == 0:
        return tuple(float(c) for c in out)
    return np.stack(out)


def max_signal_speed(fld: ConservedField, params: PhysicalParams) -> float:
    """max over interior cells of ``max(|u| + c, |v| + c)`` with ``c = sqrt(g h)``."""
    h, u, v = fld.primitive(interior_only=True)
    c = np.sqrt(params.g * h)
    return float(np.max(np.maximum(np.abs(u), np.abs(v)) + c))


def compute_dt(fld: ConservedField, cfl: float, params: PhysicalParams,
               t_end: float | None = None) -> StepContext:
    """Explicit time step ``dt = cfl * hbar / max_signal_speed``, clamped to hit ``t_end``."""
    if not 0 < cfl <= 1:
        raise ValueError(f"cfl must lie in (0, 1], got {cfl}")
    speed = max_signal_speed(fld, params)
    if not speed > 0:
        raise ValueError("zero signal speed: time step is unbounded")
    dt = cfl * fld.grid.hbar / speed
    if t_end is not None and fld.time + dt > t_end:
        dt = t_end - fld.time
    return StepContext(dt, fld.grid.hbar)
