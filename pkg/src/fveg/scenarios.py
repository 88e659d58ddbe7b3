"""Benchmark problems and exact discrete equilibria."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .core import ConservedField, Grid, PhysicalParams
from .fv_scheme import BoundaryCondition, apply_boundary

Func = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass
class Scenario:
    name: str
    x_range: tuple[float, float]
    y_origin: float
    bathymetry: Func
    h0: Func
    hu0: Func
    hv0: Func
    params: PhysicalParams
    bc: BoundaryCondition
    t_end: float
    resolutions: tuple[tuple[int, int], ...]
    eps: float = 0.0
    y_range: tuple[float, float] | None = None
    default_init: str = "midpoint"

    def grid(self, nx: int, ny: int) -> Grid:
        """Square-cell grid with ``nx`` cells across the x extent and ``ny`` rows."""
        hbar = (self.x_range[1] - self.x_range[0]) / nx
        return Grid(nx, ny, hbar, (self.x_range[0], self.y_origin))

    def initial_field(self, nx: int, ny: int, init: str | None = None) -> ConservedField:
        """Cell averages by midpoint sampling (``init='midpoint'``) or 3x3 Gauss quadrature.

        Lake problems sample at midpoints so that ``h + b`` is flat to rounding
        against the midpoint bathymetry; the smooth accuracy test averages.
        """
        init = init or self.default_init
        grid = self.grid(nx, ny)
        x, y = grid.cell_centers()
        X, Y = np.meshgrid(x, y, indexing="ij")
        if init == "midpoint":
            vals = [fn(X, Y) for fn in (self.h0, self.hu0, self.hv0)]
        elif init == "average":
            nodes, weights = np.polynomial.legendre.leggauss(3)
            nodes = 0.5 * nodes * grid.hbar
            weights = 0.5 * weights
            vals = [np.zeros_like(X) for _ in range(3)]
            for a, wa in zip(nodes, weights):
                for c, wc in zip(nodes, weights):
                    for k, fn in enumerate((self.h0, self.hu0, self.hv0)):
                        vals[k] += wa * wc * fn(X + a, Y + c)
        else:
            raise ValueError(f"unknown init mode {init!r}")
        if not np.all(vals[0] > 0):
            raise ValueError(f"scenario {self.name!r} has non-positive initial depth")
        fld = ConservedField.from_interior(grid, *vals)
        apply_boundary(fld.q, grid, self.bc)
        return fld

    def bathymetry_cells(self, grid: Grid) -> np.ndarray:
        """Padded bathymetry sampled at cell centres, ghosts filled per the boundary condition."""
        x, y = grid.cell_centers()
        X, Y = np.meshgrid(x, y, indexing="ij")
        b = np.zeros(grid.shape)
        b[grid.interior] = self.bathymetry(X, Y)
        apply_boundary(b, grid, self.bc)
        return b


def _hump_1d(x, y):
    return np.where(np.abs(x - 0.5) < 0.1, 0.25 * (np.cos(10 * np.pi * (x - 0.5)) + 1), 0.0) + 0 * y


def _hump_2d(x, y):
    return 0.8 * np.exp(-5 * (x - 0.9) ** 2 - 50 * (y - 0.5) ** 2)


def jet_profile(x, L: float = 2.0):
    """Smooth jet shape ``N_L(x)`` of the Rossby adjustment problem (``N_L(0) = 1``)."""
    t2 = np.tanh(2.0)
    return (1 + np.tanh(4 * x / L + 2)) * (1 - np.tanh(4 * x / L - 2)) / (1 + t2) ** 2


def _zero(x, y):
    return np.zeros(np.broadcast(x, y).shape)


def make_scenario(name: str, **overrides) -> Scenario:
    """Build a named benchmark; ``overrides`` replace fields (``eps``, ``f``, ``g``, ``t_end`` ...)."""
    eps = overrides.pop("eps", None)
    f = overrides.pop("f", None)
    g = overrides.pop("g", None)
    if name == "lake_1d":
        e = 0.0 if eps is None else eps

        def h0(x, y):
            return 1.0 - _hump_1d(x, y) + np.where((x > 0.1) & (x < 0.2), e, 0.0)

        sc = Scenario(name, (0.0, 1.0), 0.0, _hump_1d, h0, _zero, _zero,
                      PhysicalParams(g=1.0, f=0.0), BoundaryCondition.uniform("extrapolate"),
                      t_end=0.7, resolutions=((20, 20), (100, 5)), eps=e)
    elif name == "lake_2d":
        e = 0.0 if eps is None else eps

        def h0(x, y):
            return 1.0 - _hump_2d(x, y) + np.where((x > 0.05) & (x < 0.15), e, 0.0)

        sc = Scenario(name, (0.0, 2.0), 0.0, _hump_2d, h0, _zero, _zero,
                      PhysicalParams(g=1.0, f=0.0), BoundaryCondition.uniform("extrapolate"),
                      t_end=0.2, resolutions=((20, 20), (200, 100)), eps=e, y_range=(0.0, 1.0))
    elif name == "rossby_jet":
        def hv0(x, y):
            return 2.0 * jet_profile(x) + 0 * y

        sc = Scenario(name, (-10.0, 10.0), 0.0, _zero, lambda x, y: np.ones(np.broadcast(x, y).shape),
                      _zero, hv0, PhysicalParams(g=1.0, f=1.0), BoundaryCondition.uniform("extrapolate"),
                      t_end=np.pi, resolutions=((400, 4),), eps=0.0 if eps is None else eps)
        if f:
            sc.t_end = np.pi / f
    elif name == "accuracy_2d":
        tp = 2 * np.pi

        def b(x, y):
            return np.sin(tp * x) + np.cos(tp * y)

        def h0(x, y):
            return 10.0 + np.exp(np.sin(tp * x)) * np.cos(tp * y)

        def hu0(x, y):
            return np.sin(np.cos(tp * x)) * np.sin(tp * y)

        def hv0(x, y):
            return np.cos(tp * x) * np.cos(np.sin(tp * y))

        sc = Scenario(name, (0.0, 1.0), 0.0, b, h0, hu0, hv0, PhysicalParams(g=9.812, f=10.0),
                      BoundaryCondition.uniform("periodic"), t_end=0.05,
                      resolutions=((25, 25), (50, 50), (100, 100), (200, 200)),
                      eps=0.0 if eps is None else eps, default_init="average")
    else:
        raise ValueError(f"unknown scenario {name!r}")
    if f is not None or g is not None:
        sc.params = PhysicalParams(g=sc.params.g if g is None else g, f=sc.params.f if f is None else f)
    if "bc" in overrides and isinstance(overrides["bc"], str):
        overrides["bc"] = BoundaryCondition.parse(overrides["bc"])
    return replace(sc, **overrides)


SCENARIOS = ("lake_1d", "lake_2d", "rossby_jet", "accuracy_2d")


@dataclass
class JetEquilibrium:
    field: ConservedField
    bathymetry: np.ndarray
    params: PhysicalParams
    bc: BoundaryCondition = field(default_factory=lambda: BoundaryCondition("extrapolate", "extrapolate",
                                                                            "periodic", "periodic"))


def discrete_jet_equilibrium(grid: Grid, params: PhysicalParams, v_profile: Callable[[np.ndarray], np.ndarray],
                             h_left: float = 1.0,
                             b_profile: Callable[[np.ndarray], np.ndarray] | None = None) -> JetEquilibrium:
    """Geostrophic jet ``u = 0``, ``v = v(x)`` balanced exactly on the grid.

    The surface is built from the left boundary so that
    ``g * (eta_{i+1} - eta_i) = hbar * f * (v_i + v_{i+1}) / 2`` holds at
    every interface of the padded array, which makes the cell potential
    ``K = g (h + b - V)`` constant in x.  For an equilibrium that survives
    zero-order extrapolation, ``v`` should vanish near both x boundaries.
    """
    xp, _ = grid.cell_centers(padded=True)
    v = np.asarray(v_profile(xp), dtype=float)
    b = np.zeros_like(xp) if b_profile is None else np.asarray(b_profile(xp), dtype=float)
    d_eta = grid.hbar * params.f / params.g * 0.5 * (v[:-1] + v[1:])
    eta = np.concatenate([[0.0], np.cumsum(d_eta)])
    G = grid.ghost
    eta = eta - eta[G] + h_left + b[G]
    h = eta - b
    if not np.all(h > 0):
        raise ValueError("jet equilibrium has non-positive depth; increase h_left")
    shape = grid.shape
    q = np.zeros((3,) + shape)
    q[0] = h[:, None]
    q[2] = (h * v)[:, None]
    bb = np.broadcast_to(b[:, None], shape).copy()
    return JetEquilibrium(ConservedField(grid, q), bb, params)
