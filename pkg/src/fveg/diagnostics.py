"""Error norms, convergence orders, balance residuals and a Taylor oracle for the predictor."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import ConservedField, PhysicalParams, to_primitive
from .evolution import LinearizationState, PredictedPrimitive

VARIABLES = ("h", "hu", "hv")
EOC_HEADER = "N,err_h,eoc_h,err_hu,eoc_hu,err_hv,eoc_hv"


@dataclass
class ErrorReport:
    """L1 errors per variable over a resolution ladder, with orders between neighbours."""

    resolutions: list[int]
    errors: dict[str, list[float]]
    runtime: float = 0.0
    eocs: dict[str, list[float]] = field(init=False)

    def __post_init__(self):
        for name, errs in self.errors.items():
            if len(errs) != len(self.resolutions):
                raise ValueError(f"{name}: {len(errs)} errors for {len(self.resolutions)} resolutions")
        self.eocs = {}
        for name, errs in self.errors.items():
            vals = []
            for k in range(1, len(errs)):
                if self.resolutions[k] != 2 * self.resolutions[k - 1]:
                    raise ValueError("EOC needs consecutive resolutions with ratio 2")
                vals.append(eoc(errs[k - 1], errs[k]))
            self.eocs[name] = vals

    def rows(self) -> list[list]:
        """Table rows ``N, err_h, eoc_h, err_hu, eoc_hu, err_hv, eoc_hv``; the first EOC is empty."""
        out = []
        for k, n in enumerate(self.resolutions):
            row: list = [n]
            for name in VARIABLES:
                row.append(self.errors[name][k])
                row.append(self.eocs[name][k - 1] if k > 0 else None)
            out.append(row)
        return out

    def to_csv(self) -> str:
        lines = [EOC_HEADER]
        for row in self.rows():
            cells = [str(row[0])]
            for v in row[1:]:
                cells.append("" if v is None else f"{v:.17g}")
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _interior(q) -> tuple[np.ndarray, float]:
    if isinstance(q, ConservedField):
        return q.interior(), q.grid.hbar
    raise TypeError("expected a ConservedField")


def restrict(fine: np.ndarray, factor: int) -> np.ndarray:
    """Block average of ``(..., nx*factor, ny*factor)`` cell data onto the coarse grid."""
    *lead, nx, ny = fine.shape
    if nx % factor or ny % factor:
        raise ValueError(f"grid {nx}x{ny} is not divisible by {factor}")
    return fine.reshape(*lead, nx // factor, factor, ny // factor, factor).mean(axis=(-3, -1))


def l1_error(fld: ConservedField, ref: ConservedField) -> dict[str, float]:
    """``sum hbar^2 |q - q_ref|`` per conserved variable, restricting a finer reference."""
    q, hb = _interior(fld)
    qr, hr = _interior(ref)
    fx = qr.shape[1] / q.shape[1]
    fy = qr.shape[2] / q.shape[2]
    if fx != fy or fx < 1 or fx != int(fx) or not math.isclose(hb, hr * fx):
        raise ValueError(f"reference grid {qr.shape[1:]} is not an integer refinement of {q.shape[1:]}")
    if fx > 1:
        qr = restrict(qr, int(fx))
    d = np.abs(q - qr)
    # fixed summation order: along y within each row, then over rows
    return {name: float(np.sum(np.sum(d[k], axis=1)) * hb * hb) for k, name in enumerate(VARIABLES)}


def eoc(err_coarse: float, err_fine: float) -> float:
    """Experimental order ``log2(e_N / e_2N)``; zero errors have no defined order."""
    if not (err_coarse > 0 and err_fine > 0):
        raise ValueError("order of convergence undefined for non-positive errors")
    return math.log2(err_coarse / err_fine)


def lake_at_rest_residual(fld: ConservedField, bathymetry: np.ndarray) -> tuple[float, float, float]:
    """``(max |h + b - C|, max |hu|, max |hv|)`` with ``C`` the mean surface level."""
    q = fld.interior()
    b = bathymetry[fld.grid.interior] if bathymetry.shape == fld.grid.shape else bathymetry
    eta = q[0] + b
    return (float(np.max(np.abs(eta - eta.mean()))), float(np.max(np.abs(q[1]))),
            float(np.max(np.abs(q[2]))))


def geostrophic_residual(fld: ConservedField, bathymetry: np.ndarray, params: PhysicalParams) -> float:
    """L1 norm of ``f v - g (h + b)_x`` with central differences over interior cells.

    Ghost cells must be filled; the difference at boundary cells uses them.
    """
    if not params.f > 0:
        raise ValueError("geostrophic residual needs f > 0")
    grid = fld.grid
    h, _, v = to_primitive(fld.q)
    eta = h + bathymetry
    i0, j0 = grid.interior
    dx = (eta[i0.start + 1:i0.stop + 1, j0] - eta[i0.start - 1:i0.stop - 1, j0]) / (2 * grid.hbar)
    res = np.abs(params.f * v[i0, j0] - params.g * dx)
    return float(np.sum(np.sum(res, axis=1)) * grid.hbar ** 2)


# --------------------------------------------------------------------------
# Taylor oracle along streamlines
# --------------------------------------------------------------------------

Jet = tuple[float, float, float, float, float, float]   # value, d/dx, d/dy, xx, xy, yy


@dataclass
class SmoothField:
    """Smooth fields with analytic derivatives up to second order.

    Each attribute maps ``(x, y)`` to ``(value, f_x, f_y, f_xx, f_xy, f_yy)``.
    ``U`` and ``V`` are the Coriolis primitives (``V_x = f v / g``,
    ``U_y = f u / g``); they are not checked for consistency.
    """

    h: Callable[[float, float], Jet]
    u: Callable[[float, float], Jet]
    v: Callable[[float, float], Jet]
    b: Callable[[float, float], Jet]
    U: Callable[[float, float], Jet]
    V: Callable[[float, float], Jet]


def taylor_predict(node: tuple[float, float], fld: SmoothField, lin: LinearizationState,
                   tau: float, params: PhysicalParams) -> PredictedPrimitive:
    """Second order streamline Taylor expansion of the linearized system from ``Q0``.

    With the material derivative along ``(u~, v~)``::

        h1 = h - tau h~ (u_x + v_y) + tau^2/2 h~ (K_xx + L_yy)
        u1 = u - tau K_x + tau^2/2 (g h~ (u_x + v_y)_x - g (u~ b_x + v~ b_y)_x - f L_y)
        v1 = v - tau L_y + tau^2/2 (g h~ (u_x + v_y)_y - g (u~ b_x + v~ b_y)_y + f K_x)

    all evaluated at ``Q0 = node - (u~, v~) tau``.
    """
    g, f = params.g, params.f
    x = node[0] - lin.u * tau
    y = node[1] - lin.v * tau
    h, hx, hy, hxx, hxy, hyy = fld.h(x, y)
    u, ux, uy, uxx, uxy, uyy = fld.u(x, y)
    v, vx, vy, vxx, vxy, vyy = fld.v(x, y)
    _, bx, by, bxx, bxy, byy = fld.b(x, y)
    _, Ux, Uy, Uxx, Uxy, Uyy = fld.U(x, y)
    _, Vx, Vy, Vxx, Vxy, Vyy = fld.V(x, y)
    Kx = g * (hx + bx - Vx)
    Kxx = g * (hxx + bxx - Vxx)
    Ly = g * (hy + by + Uy)
    Lyy = g * (hyy + byy + Uyy)
    div = ux + vy
    div_x = uxx + vxy
    div_y = uxy + vyy
    adv_x = lin.u * bxx + lin.v * bxy
    adv_y = lin.u * bxy + lin.v * byy
    t2 = 0.5 * tau * tau
    h1 = h - tau * lin.h * div + t2 * lin.h * (Kxx + Lyy)
    u1 = u - tau * Kx + t2 * (g * lin.h * div_x - g * adv_x - f * Ly)
    v1 = v - tau * Ly + t2 * (g * lin.h * div_y - g * adv_y + f * Kx)
    return PredictedPrimitive(float(h1), float(u1), float(v1))


def polynomial_jet(coeffs: dict[tuple[int, int], float]) -> Callable[[float, float], Jet]:
    """Jet of the polynomial ``sum c_mn x^m y^n`` given as ``{(m, n): c}``."""
    def d(m: int, k: int) -> tuple[float, int]:
        # k-th derivative of x^m: factor and remaining power
        fac = 1.0
        for j in range(k):
            fac *= m - j
        return fac, m - k

    def jet(x: float, y: float) -> Jet:
        out = []
        for kx, ky in ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)):
            s = 0.0
            for (m, n), c in coeffs.items():
                fx, px = d(m, kx)
                fy, py = d(n, ky)
                if fx and fy:
                    s += c * fx * fy * x ** px * y ** py
            out.append(s)
        return tuple(out)
    return jet

