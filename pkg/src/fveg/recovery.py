"""Continuous bilinear recovery of cell averages with optional slope limiting.

Per-cell bilinears are stored as coefficient arrays of shape ``(4, NX, NY)``
holding ``(c00, cx, cy, cxy)`` in cell-normalised coordinates
``xi, eta in [-1/2, 1/2]``::

    p(xi, eta) = c00 + cx*xi + cy*eta + cxy*xi*eta

so ``cx`` is the increment of the field across one cell.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

LIMITERS = ("minmod", "mc")


class CellBilinear(NamedTuple):
    c00: float
    cx: float
    cy: float
    cxy: float


def limiter(kind: str, a, b):
    """Slope limiter of two one-sided differences ``a`` and ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    same = a * b > 0
    s = np.sign(a)
    if kind == "minmod":
        mag = np.minimum(np.abs(a), np.abs(b))
    elif kind == "mc":
        mag = np.minimum(np.minimum(2 * np.abs(a), 2 * np.abs(b)), np.abs(a + b) / 2)
    else:
        raise ValueError(f"unknown limiter {kind!r}")
    out = np.where(same, s * mag, 0.0)
    return float(out) if out.ndim == 0 else out


def vertex_values(q: np.ndarray) -> np.ndarray:
    """Mean of the four cells around every interior vertex of the padded array."""
    return 0.25 * (q[:-1, :-1] + q[1:, :-1] + q[:-1, 1:] + q[1:, 1:])


def recover_array(q: np.ndarray, limiter_kind: str | None = None, conservative: bool = True,
                  return_mask: bool = False):
    """Recover per-cell bilinear coefficients from cell values ``q`` (padded, 2-D).

    The continuous recovery interpolates the four vertex values of each cell.
    Its cell mean is the 3x3 tensor average of ``q``; with ``conservative`` the
    constant term is reset to the cell value so the mean is preserved exactly.

    With a limiter, cells whose limited and continuous slopes disagree in sign
    or by more than a factor of two fall back to limited slopes, zero cross
    term and the exact cell value as constant term.

    The outermost ring of cells has no full stencil and is kept constant.
    """
    q = np.asarray(q, dtype=float)
    coef = np.zeros((4,) + q.shape)
    coef[0] = q
    vtx = vertex_values(q)
    mm = vtx[:-1, :-1]
    pm = vtx[1:, :-1]
    mp = vtx[:-1, 1:]
    pp = vtx[1:, 1:]
    inner = (slice(1, -1), slice(1, -1))
    mean = 0.25 * (mm + pm + mp + pp)
    # differences first, so data constant along one axis give exactly zero slopes
    cx = 0.5 * ((pm - mm) + (pp - mp))
    cy = 0.5 * ((mp - mm) + (pp - pm))
    cxy = (pp - pm) - (mp - mm)
    coef[0][inner] = q[inner] if conservative else mean
    coef[1][inner] = cx
    coef[2][inner] = cy
    coef[3][inner] = cxy

    mask = np.zeros(q.shape, dtype=bool)
    if limiter_kind is not None:
        c = q[inner]
        lx = limiter(limiter_kind, c - q[:-2, 1:-1], q[2:, 1:-1] - c)
        ly = limiter(limiter_kind, c - q[1:-1, :-2], q[1:-1, 2:] - c)
        trig = _disagree(lx, cx) | _disagree(ly, cy)
        mask[inner] = trig
        for k, val in enumerate((c, lx, ly, np.zeros_like(c))):
            coef[k][inner] = np.where(trig, val, coef[k][inner])
    if return_mask:
        return coef, mask
    return coef


def _disagree(lim: np.ndarray, cont: np.ndarray) -> np.ndarray:
    al, ac = np.abs(lim), np.abs(cont)
    return (lim * cont < 0) | (ac > 2 * al) | (al > 2 * ac)


@dataclass
class Reconstruction:
    """Per-cell bilinear coefficients for the recovered fields.

    ``eta`` is the recovered free surface ``h + b``; ``h`` is derived as
    ``eta - b`` so that a flat surface stays flat under limiting.
    """

    h: np.ndarray
    u: np.ndarray
    v: np.ndarray
    b: np.ndarray
    U: np.ndarray
    V: np.ndarray
    eta: np.ndarray
    limited: np.ndarray

    def K(self, g: float) -> np.ndarray:
        return g * (self.eta - self.V)

    def L(self, g: float) -> np.ndarray:
        return g * (self.eta + self.U)

    def cell(self, name: str, i: int, j: int) -> CellBilinear:
        c = getattr(self, name)[:, i, j]
        return CellBilinear(*(float(x) for x in c))


def recover(w: np.ndarray, b: np.ndarray, U: np.ndarray, V: np.ndarray,
            limiter_kind: str | None = None, conservative: bool = True) -> Reconstruction:
    """Recover ``h, u, v, b, U, V`` from padded primitive cell values ``w = (h, u, v)``.

    ``b``, ``U`` and ``V`` always use the unlimited continuous recovery.
    """
    if limiter_kind is not None and limiter_kind not in LIMITERS:
        raise ValueError(f"unknown limiter {limiter_kind!r}")
    eta, m1 = recover_array(w[0] + b, limiter_kind, conservative, return_mask=True)
    u, m2 = recover_array(w[1], limiter_kind, conservative, return_mask=True)
    v, m3 = recover_array(w[2], limiter_kind, conservative, return_mask=True)
    rb = recover_array(b, None, conservative)
    rU = recover_array(U, None, conservative)
    rV = recover_array(V, None, conservative)
    return Reconstruction(h=eta - rb, u=u, v=v, b=rb, U=rU, V=rV, eta=eta,
                          limited=m1 | m2 | m3)


def residual_field(q: np.ndarray) -> np.ndarray:
    """``(1 - mu_x^2 mu_y^2) q`` with the 1-2-1 tensor stencil; zero on the outer ring."""
    q = np.asarray(q, dtype=float)
    out = np.zeros_like(q)
    avg = (q[:-2, :-2] + 2 * q[1:-1, :-2] + q[2:, :-2]
           + 2 * (q[:-2, 1:-1] + 2 * q[1:-1, 1:-1] + q[2:, 1:-1])
           + q[:-2, 2:] + 2 * q[1:-1, 2:] + q[2:, 2:]) / 16.0
    out[1:-1, 1:-1] = q[1:-1, 1:-1] - avg
    return out


def eval_reconstruction(coef: np.ndarray, i: int, j: int, xi: float, eta: float) -> float:
    """Evaluate the bilinear of cell ``(i, j)`` at local coordinates in ``[-1/2, 1/2]^2``."""
    if abs(xi) > 0.5 or abs(eta) > 0.5:
        raise ValueError(f"local coordinates ({xi}, {eta}) outside the cell")
    c00, cx, cy, cxy = coef[:, i, j]
    return float(c00 + cx * xi + cy * eta + cxy * xi * eta)


def cell_mean(coef: np.ndarray) -> np.ndarray:
    """Exact cell mean of each recovered bilinear (the odd terms integrate to zero)."""
    return coef[0]
