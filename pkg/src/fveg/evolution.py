"""Evolution Galerkin predictor on the sonic circle.

Point values at the edge quadrature nodes are evolved to the half time step by
the approximate evolution operators for piecewise constant and piecewise
bilinear data.  All angular integrals over the sonic circle are evaluated
exactly: the circle is cut into sectors at every grid-line crossing and at the
quarter angles, and on each sector the integrand is a trigonometric polynomial
in ``theta`` of degree <= 4 whose antiderivative is known in closed form.

A bilinear ``a + b*X + c*Y + d*X*Y`` restricted to the circle
``X = X0 + r cos(t)``, ``Y = Y0 + r sin(t)`` is stored in the basis
``(1, cos t, sin t, sin t cos t)``; see :func:`bilinear_on_circle`.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .core import ConfigurationError, DryStateError, Grid, PhysicalParams
from .recovery import Reconstruction, recover, recover_array, vertex_values

TWO_PI = 2.0 * np.pi
NODE_KINDS = ("vertex", "vmid", "hmid")

# monomials cos^m sin^n with m + n <= 4
MONOMIALS = [(m, t - m) for t in range(5) for m in range(t, -1, -1)]
_MONO_INDEX = {mn: k for k, mn in enumerate(MONOMIALS)}
_BASIS = [(0, 0), (1, 0), (0, 1), (1, 1)]


def _fourier_table() -> np.ndarray:
    """Rows ``(A0, A1..A4, B1..B4)`` with ``cos^m sin^n = A0 + sum A_k cos kt + B_k sin kt``."""
    n = 16
    t = TWO_PI * np.arange(n) / n
    tab = np.zeros((len(MONOMIALS), 9))
    for k, (m, p) in enumerate(MONOMIALS):
        c = np.fft.rfft(np.cos(t) ** m * np.sin(t) ** p) / n
        tab[k, 0] = c[0].real
        tab[k, 1:5] = 2 * c[1:5].real
        tab[k, 5:9] = -2 * c[1:5].imag
    # every coefficient is a multiple of 1/16
    return np.round(tab * 16) / 16


_FOURIER = _fourier_table()
_K = np.arange(1, 5)


_FEATURE_MATRIX = np.concatenate([_FOURIER[:, :1].T, (_FOURIER[:, 1:5] / _K).T,
                                  -(_FOURIER[:, 5:9] / _K).T])   # (9, n_monomials)


def _antiderivative_features(theta: np.ndarray) -> np.ndarray:
    """``(t, sin kt, cos kt)`` for ``k = 1..4`` stacked on a new leading axis.

    ``sin(k t)`` and ``cos(k t)`` for ``k >= 2`` come from the angle-addition
    recurrence, so only one sine and one cosine are evaluated per angle.
    """
    c1, s1 = np.cos(theta), np.sin(theta)
    c2, s2 = c1 * c1 - s1 * s1, 2 * s1 * c1
    c3, s3 = c2 * c1 - s2 * s1, s2 * c1 + c2 * s1
    c4, s4 = c2 * c2 - s2 * s2, 2 * s2 * c2
    return np.stack([theta, s1, s2, s3, s4, c1, c2, c3, c4])


def monomial_antiderivative(theta) -> np.ndarray:
    """Antiderivatives of all monomials at ``theta``; trailing axis indexes :data:`MONOMIALS`."""
    theta = np.asarray(theta, dtype=float)
    return np.moveaxis(_antiderivative_features(theta), 0, -1) @ _FEATURE_MATRIX


# kernels as lists of (coefficient, m, n); sgn kernels carry a sign flag
KERNELS: dict[str, tuple[list[tuple[float, int, int]], str | None]] = {
    "one": ([(1.0, 0, 0)], None),
    "cos": ([(1.0, 1, 0)], None),
    "sin": ([(1.0, 0, 1)], None),
    "cos2": ([(1.0, 2, 0)], None),
    "sin2": ([(1.0, 0, 2)], None),
    "sincos": ([(1.0, 1, 1)], None),
    "sgn_cos": ([(1.0, 0, 0)], "cos"),
    "sgn_sin": ([(1.0, 0, 0)], "sin"),
    "cos_2t": ([(1.0, 2, 0), (-1.0, 0, 2)], None),
    "sin_2t": ([(2.0, 1, 1)], None),
    # combined kernels of the constant-data operator
    "cos2_half": ([(1.0, 2, 0), (0.5, 0, 0)], None),
    "sin2_half": ([(1.0, 0, 2), (0.5, 0, 0)], None),
}
BASIC_KERNELS = ("one", "cos", "sin", "cos2", "sin2", "sincos", "sgn_cos", "sgn_sin",
                 "cos_2t", "sin_2t")


def _kernel_matrix(name: str) -> np.ndarray:
    terms, _ = KERNELS[name]
    W = np.zeros((4, len(MONOMIALS)))
    for b, (mb, nb) in enumerate(_BASIS):
        for coef, m, n in terms:
            W[b, _MONO_INDEX[(m + mb, n + nb)]] += coef
    return W


_KERNEL_W = {name: _kernel_matrix(name) for name in KERNELS}


def _kernel_gather(name: str):
    """Kernel table as ``(coef / 2pi, monomial indices per basis function)`` terms."""
    terms, sgn = KERNELS[name]
    out = [(coef / TWO_PI, np.array([_MONO_INDEX[(m + mb, n + nb)] for mb, nb in _BASIS]))
           for coef, m, n in terms]
    return out, sgn


_KERNEL_GATHER = {name: _kernel_gather(name) for name in KERNELS}


def kernel_value(name: str, theta) -> np.ndarray:
    """Pointwise kernel values (used by quadrature oracles and debug paths)."""
    theta = np.asarray(theta, dtype=float)
    terms, sgn = KERNELS[name]
    val = sum(coef * np.cos(theta) ** m * np.sin(theta) ** n for coef, m, n in terms)
    if sgn == "cos":
        val = val * np.sign(np.cos(theta))
    elif sgn == "sin":
        val = val * np.sign(np.sin(theta))
    return val


def bilinear_on_circle(a, b, c, d, X0, Y0, r) -> np.ndarray:
    """Coefficients in ``(1, cos, sin, sin cos)`` of ``a + bX + cY + dXY`` on the circle."""
    return np.stack(np.broadcast_arrays(a + b * X0 + c * Y0 + d * X0 * Y0,
                                        r * (b + d * Y0), r * (c + d * X0), d * r * r), axis=-1)


def _sector_moment(t0: float, t1: float, coeffs, name: str) -> float:
    """Exact ``int_{t0}^{t1} data * kernel`` for one sector, splitting at quarter angles."""
    cuts = [t0] + [k * np.pi / 2 for k in range(1, 4) if t0 < k * np.pi / 2 < t1] + [t1]
    _, sgn = KERNELS[name]
    W = _KERNEL_W[name]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        J = monomial_antiderivative(b) - monomial_antiderivative(a)
        s = 1.0
        if sgn is not None:
            mid = 0.5 * (a + b)
            s = np.sign(np.cos(mid) if sgn == "cos" else np.sin(mid))
        total += s * float(np.asarray(coeffs) @ (W @ J))
    return total


# --------------------------------------------------------------------------
# scalar, general-geometry interface
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearizationState:
    h: float
    u: float
    v: float
    c: float

    @classmethod
    def from_primitive(cls, h: float, u: float, v: float, g: float) -> "LinearizationState":
        if not h > 0:
            raise DryStateError(f"non-positive linearization depth {h}")
        return cls(float(h), float(u), float(v), float(np.sqrt(g * h)))


class PredictedPrimitive(NamedTuple):
    h: float
    u: float
    v: float


@dataclass(frozen=True)
class SonicCircleTrace:
    center: tuple[float, float]
    radius: float
    sectors: list[tuple[float, float, tuple[int, int]]]


def node_position(grid: Grid, kind: str, I: int, J: int) -> tuple[float, float]:
    """Physical coordinates of node ``(I, J)`` of the given kind (interior indexing)."""
    x0, y0 = grid.origin
    hb = grid.hbar
    if kind == "vertex":
        return (x0 + I * hb, y0 + J * hb)
    if kind == "vmid":
        return (x0 + I * hb, y0 + (J + 0.5) * hb)
    if kind == "hmid":
        return (x0 + (I + 0.5) * hb, y0 + J * hb)
    raise ValueError(f"unknown node kind {kind!r}")


def trace_sonic_circle(node: tuple[float, float], lin: LinearizationState, tau: float,
                       grid: Grid) -> SonicCircleTrace:
    """Cut the sonic circle of ``node`` into arcs, each lying in a single grid cell."""
    cx = node[0] - lin.u * tau
    cy = node[1] - lin.v * tau
    r = lin.c * tau
    ox, oy = grid.origin
    hb = grid.hbar
    angles = [0.0, TWO_PI]
    if r > 0:
        for k in range(int(np.floor((cx - r - ox) / hb)), int(np.ceil((cx + r - ox) / hb)) + 1):
            s = (ox + k * hb - cx) / r
            if -1 < s < 1:
                t = np.arccos(s)
                angles += [t, TWO_PI - t]
        for k in range(int(np.floor((cy - r - oy) / hb)), int(np.ceil((cy + r - oy) / hb)) + 1):
            s = (oy + k * hb - cy) / r
            if -1 < s < 1:
                t = np.arcsin(s)
                angles += [t % TWO_PI, np.pi - t]
    angles = np.unique(np.asarray(angles))
    sectors = []
    G = grid.ghost
    for t0, t1 in zip(angles[:-1], angles[1:]):
        if t1 - t0 <= 0:
            continue
        tm = 0.5 * (t0 + t1)
        i = int(np.floor((cx + r * np.cos(tm) - ox) / hb))
        j = int(np.floor((cy + r * np.sin(tm) - oy) / hb))
        if not (-G <= i < grid.nx + G and -G <= j < grid.ny + G):
            raise ConfigurationError("sonic circle leaves the ghost-padded domain")
        sectors.append((float(t0), float(t1), (i, j)))
    return SonicCircleTrace((cx, cy), r, sectors)


def angular_moment(coeffs, kernel: str, trace: SonicCircleTrace) -> float:
    """``(1/2pi) * closed integral of data * kernel`` over the traced circle.

    ``coeffs`` has one row per sector of ``trace`` in the basis
    ``(1, cos, sin, sin cos)``.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    if coeffs.shape != (len(trace.sectors), 4):
        raise ValueError("need one coefficient row per sector")
    total = sum(_sector_moment(t0, t1, row, kernel)
                for (t0, t1, _), row in zip(trace.sectors, coeffs))
    return total / TWO_PI


def angular_moment_quadrature(coeffs, kernel: str, trace: SonicCircleTrace, n: int = 4096) -> float:
    """Debug path: symmetric uniform-node quadrature instead of exact sector integration."""
    theta = (np.arange(n) + 0.5) * TWO_PI / n
    bounds = np.array([s[1] for s in trace.sectors])
    sec = np.minimum(np.searchsorted(bounds, theta), len(bounds) - 1)
    co = np.atleast_2d(np.asarray(coeffs, dtype=float))[sec]
    data = co[:, 0] + co[:, 1] * np.cos(theta) + co[:, 2] * np.sin(theta) \
        + co[:, 3] * np.sin(theta) * np.cos(theta)
    return float(np.mean(data * kernel_value(kernel, theta)))


# --------------------------------------------------------------------------
# vectorised per-node engine
# --------------------------------------------------------------------------

class NodeCircles:
    """Sector decomposition of many sonic circles, each centred near its own node.

    Circles are given in node-local coordinates (node at the origin, grid lines
    ``X = 0`` and ``Y = 0`` through it).  The cells touching the node are
    addressed by quadrant ``q = 2*(X > 0) + (Y > 0)``; points on a grid line
    belong to the lower-index cell.  Every circle must stay inside the four
    cells around its node.

    Arrays keep the node index last for speed: quadrant constants have shape
    ``(4, M)`` and circle coefficients (see :meth:`trig`) have shape
    ``(4, 4, M)`` indexed ``[basis, quadrant, node]``.
    """

    def __init__(self, X0, Y0, r, hbar: float | None = None):
        X0 = np.asarray(X0, dtype=float)
        Y0 = np.asarray(Y0, dtype=float)
        r = np.asarray(r, dtype=float)
        self.X0, self.Y0, self.r = X0, Y0, r
        if hbar is not None:
            reach = np.maximum(np.abs(X0), np.abs(Y0)) + r
            if np.any(reach > 0.5 * hbar * (1 + 1e-9)):
                raise ConfigurationError("sonic circle leaves the cells adjacent to its node")
        M = X0.shape[0]
        with np.errstate(invalid="ignore", divide="ignore"):
            sx = -X0 / r
            sy = -Y0 / r
        crossx = np.abs(sx) < 1
        crossy = np.abs(sy) < 1
        tx = np.where(crossx, np.arccos(np.clip(sx, -1, 1)), 0.0)
        ty = np.where(crossy, np.arcsin(np.clip(sy, -1, 1)), 0.0)
        bps = np.empty((M, 9))
        bps[:, 0] = 0.0
        bps[:, 1] = 0.5 * np.pi
        bps[:, 2] = np.pi
        bps[:, 3] = 1.5 * np.pi
        bps[:, 4] = TWO_PI
        bps[:, 5] = tx
        bps[:, 6] = np.where(crossx, TWO_PI - tx, 0.0)
        bps[:, 7] = np.where(crossy, ty % TWO_PI, 0.0)
        bps[:, 8] = np.where(crossy, np.pi - ty, 0.0)
        bps.sort(axis=1)
        self.breakpoints = bps
        self._feats = _antiderivative_features(bps.T).reshape(9, -1)   # (9, 9 * M)
        mid = 0.5 * (bps[:, 1:] + bps[:, :-1]).T                    # (8, M)
        cm, sm = np.cos(mid), np.sin(mid)
        quad = 2 * (X0 + r * cm > 0) + (Y0 + r * sm > 0)            # (8, M)
        self.quad = quad.T
        self._quad = quad
        self._masks = (quad == np.arange(4)[:, None, None]).astype(float)   # (4, 8, M)
        self._sign = {None: None, "cos": np.sign(cm), "sin": np.sign(sm)}
        self._Jq: dict[tuple, np.ndarray] = {}
        self._tables: dict[tuple, np.ndarray] = {}
        self.q0 = 2 * (X0 > 0) + (Y0 > 0)

    def __len__(self) -> int:
        return self.X0.shape[0]

    def _quadrant_integral(self, sgn_kind: str | None, mono: int) -> np.ndarray:
        """Sector integrals of one monomial summed per quadrant, shape ``(4, M)``."""
        key = (sgn_kind, mono)
        Jq = self._Jq.get(key)
        if Jq is None:
            F = (_FEATURE_MATRIX[:, mono] @ self._feats).reshape(9, -1)
            J = F[1:] - F[:-1]                                  # (8, M)
            w = self._sign[sgn_kind]
            if w is not None:
                J = J * w
            Jq = np.einsum("qsm,sm->qm", self._masks, J)
            self._Jq[key] = Jq
        return Jq

    def trig(self, P: np.ndarray) -> np.ndarray:
        """Map node-local bilinear quadrant coefficients to circle coefficients.

        ``P[:, q, m]`` holds ``(a, b, c, d)`` of ``a + bX + cY + dXY``; both
        input and result have shape ``(4, 4, M)``.
        """
        X0, Y0, r = self.X0, self.Y0, self.r
        a, b, c, d = P
        out = np.empty((4,) + a.shape)
        out[0] = a + b * X0 + c * Y0 + d * X0 * Y0
        out[1] = r * (b + d * Y0)
        out[2] = r * (c + d * X0)
        out[3] = d * r * r
        return out

    def at_center(self, T: np.ndarray) -> np.ndarray:
        """Value at the circle centre from circle coefficients (or quadrant constants)."""
        vals = T[0] if T.ndim == 3 else T
        return np.take_along_axis(vals, self.q0[None], axis=0)[0]

    def _table(self, kernel: str, nbasis: int = 4) -> np.ndarray:
        """Kernel weights per basis function and quadrant, ``(nbasis, 4, M)``, divided by 2 pi."""
        key = (kernel, nbasis)
        T = self._tables.get(key)
        if T is None:
            terms, sgn_kind = _KERNEL_GATHER[kernel]
            T = np.stack([sum(coef * self._quadrant_integral(sgn_kind, idx[k]) for coef, idx in terms)
                          for k in range(nbasis)])
            self._tables[key] = T
        return T

    def moment(self, data: np.ndarray, kernel: str) -> np.ndarray:
        """``(1/2pi) closed integral data * kernel`` for every circle.

        ``data`` is either ``(4, M)`` quadrant constants or ``(4, 4, M)``
        circle coefficients from :meth:`trig`.
        """
        if data.ndim == 2:
            return np.einsum("qm,qm->m", data, self._table(kernel, 1)[0])
        return np.einsum("bqm,bqm->m", data, self._table(kernel))


def evolve_const(circ: NodeCircles, lin_c: np.ndarray, lin_u: np.ndarray, lin_v: np.ndarray,
                 tau: float, g: float, eta: np.ndarray, u: np.ndarray, v: np.ndarray,
                 K: np.ndarray, L: np.ndarray, bx: np.ndarray | None = None,
                 by: np.ndarray | None = None, b_node: np.ndarray | None = None):
    """Evolution operator for piecewise constant quadrant data.

    ``eta`` is the free surface ``h + b``.  When ``b_node`` is ``None`` the
    bathymetry terms (``-b(P)`` and bottom advection) are omitted; the
    residual part of the second order predictor uses that form.
    """
    h = circ.moment(eta, "one") - lin_c / g * (circ.moment(u, "sgn_cos") + circ.moment(v, "sgn_sin"))
    if b_node is not None:
        h = h - b_node + tau * (lin_u * circ.moment(bx, "one") + lin_v * circ.moment(by, "one"))
    un = -circ.moment(K, "sgn_cos") / lin_c + circ.moment(u, "cos2_half") + circ.moment(v, "sincos")
    vn = -circ.moment(L, "sgn_sin") / lin_c + circ.moment(u, "sincos") + circ.moment(v, "sin2_half")
    return h, un, vn


def evolve_bilin(circ: NodeCircles, lin_c: np.ndarray, lin_u: np.ndarray, lin_v: np.ndarray,
                 tau: float, g: float, eta: np.ndarray, u: np.ndarray, v: np.ndarray,
                 K: np.ndarray, L: np.ndarray, bx: np.ndarray, by: np.ndarray,
                 b_node: np.ndarray):
    """Evolution operator for piecewise bilinear data given as circle coefficients."""
    half_pi = 0.5 * np.pi
    eta0 = circ.at_center(eta)
    u0 = circ.at_center(u)
    v0 = circ.at_center(v)
    h = (-b_node + eta0 + half_pi * (circ.moment(eta, "one") - eta0)
         - 2 * lin_c / g * (circ.moment(u, "cos") + circ.moment(v, "sin"))
         + tau * (lin_u * circ.moment(bx, "one") + lin_v * circ.moment(by, "one")))
    m_uc2 = circ.moment(u, "cos2")
    m_us = circ.moment(u, "sincos")
    m_vs = circ.moment(v, "sincos")
    m_vs2 = circ.moment(v, "sin2")
    un = (u0 - 2 * circ.moment(K, "cos") / lin_c
          + half_pi * (3 * m_uc2 + 3 * m_vs - circ.moment(u, "one") - 0.5 * u0))
    vn = (v0 - 2 * circ.moment(L, "sin") / lin_c
          + half_pi * (3 * m_us + 3 * m_vs2 - circ.moment(v, "one") - 0.5 * v0))
    return h, un, vn


# --------------------------------------------------------------------------
# grid-level predictor
# --------------------------------------------------------------------------

@dataclass
class NodeLayout:
    """Cells adjacent to every node of one kind, in padded indexing, by quadrant."""

    kind: str
    shape: tuple[int, int]
    ci: np.ndarray        # (4, M)
    cj: np.ndarray        # (4, M)
    ox: np.ndarray        # (4, M) (x_node - x_cell) / hbar
    oy: np.ndarray        # (4, M)
    vi: np.ndarray        # (2, M) vertex-array indices whose mean is b at the node
    vj: np.ndarray

    @property
    def size(self) -> int:
        return self.ci.shape[1]


@lru_cache(maxsize=64)
def node_layout(grid: Grid, kind: str) -> NodeLayout:
    G = grid.ghost
    nx, ny = grid.nx, grid.ny
    if kind == "vertex":
        shape = (nx + 1, ny + 1)
    elif kind == "vmid":
        shape = (nx + 1, ny)
    elif kind == "hmid":
        shape = (nx, ny + 1)
    else:
        raise ValueError(f"unknown node kind {kind!r}")
    I, J = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    I = I.ravel()
    J = J.ravel()
    # quadrant order: (-,-), (-,+), (+,-), (+,+)
    if kind == "vertex":
        di = [-1, -1, 0, 0]
        dj = [-1, 0, -1, 0]
        ox = [0.5, 0.5, -0.5, -0.5]
        oy = [0.5, -0.5, 0.5, -0.5]
        vi = np.stack([I, I]) + G - 1
        vj = np.stack([J, J]) + G - 1
    elif kind == "vmid":
        di = [-1, -1, 0, 0]
        dj = [0, 0, 0, 0]
        ox = [0.5, 0.5, -0.5, -0.5]
        oy = [0.0] * 4
        vi = np.stack([I, I]) + G - 1
        vj = np.stack([J, J + 1]) + G - 1
    else:
        di = [0, 0, 0, 0]
        dj = [-1, 0, -1, 0]
        ox = [0.0] * 4
        oy = [0.5, -0.5, 0.5, -0.5]
        vi = np.stack([I, I + 1]) + G - 1
        vj = np.stack([J, J]) + G - 1
    ci = np.stack([I + G + d for d in di])
    cj = np.stack([J + G + d for d in dj])
    M = ci.shape[1]
    return NodeLayout(kind, shape, ci, cj, np.broadcast_to(np.array(ox)[:, None], (4, M)),
                      np.broadcast_to(np.array(oy)[:, None], (4, M)), vi, vj)


@lru_cache(maxsize=16)
def all_nodes_layout(grid: Grid) -> tuple[NodeLayout, list[tuple[str, tuple[int, int], slice]]]:
    """All three node kinds stacked into one layout, plus ``(kind, shape, slice)`` parts."""
    lays = [node_layout(grid, k) for k in NODE_KINDS]
    parts = []
    start = 0
    for lay in lays:
        parts.append((lay.kind, lay.shape, slice(start, start + lay.size)))
        start += lay.size
    cat = NodeLayout("all", (start,), *(np.concatenate([getattr(l, f) for l in lays], axis=ax)
                                        for f, ax in (("ci", 1), ("cj", 1), ("ox", 1), ("oy", 1),
                                                      ("vi", 1), ("vj", 1))))
    return cat, parts


def gather_constant(lay: NodeLayout, q: np.ndarray) -> np.ndarray:
    """Quadrant constants ``(4, M)`` of a padded cell array."""
    return q[lay.ci, lay.cj]


def gather_bilinear(lay: NodeLayout, coef: np.ndarray, hbar: float) -> np.ndarray:
    """Node-local coefficients ``(a, b, c, d)`` of ``a + bX + cY + dXY`` per quadrant, ``(4, 4, M)``."""
    c00, cx, cy, cxy = (coef[k][lay.ci, lay.cj] for k in range(4))
    ox = lay.ox
    oy = lay.oy
    a = c00 + cx * ox + cy * oy + cxy * ox * oy
    b = (cx + cxy * oy) / hbar
    c = (cy + cxy * ox) / hbar
    d = cxy / hbar ** 2
    return np.stack([a, b, c, d])


def node_bathymetry(lay: NodeLayout, b: np.ndarray) -> np.ndarray:
    """Continuous bilinear bathymetry at the nodes from padded cell values ``b``."""
    bv = vertex_values(b)
    return 0.5 * (bv[lay.vi[0], lay.vj[0]] + bv[lay.vi[1], lay.vj[1]])


def linearization_arrays(lay: NodeLayout, w: np.ndarray, g: float):
    """Arithmetic mean of the adjacent cells' primitive states at every node."""
    hq = gather_constant(lay, w[0])
    if not np.all(hq > 0):
        raise DryStateError("dry cell adjacent to a quadrature node")
    h = hq.mean(axis=0)
    u = gather_constant(lay, w[1]).mean(axis=0)
    v = gather_constant(lay, w[2]).mean(axis=0)
    return h, u, v, np.sqrt(g * h)


def linearization_state(w: np.ndarray, grid: Grid, kind: str, I: int, J: int,
                        params: PhysicalParams) -> LinearizationState:
    """Linearization state of a single node from padded primitive data ``w``."""
    lay = node_layout(grid, kind)
    k = I * lay.shape[1] + J
    cells = {(int(lay.ci[q, k]), int(lay.cj[q, k])) for q in range(4)}
    vals = np.array([w[:, i, j] for i, j in sorted(cells)])
    if not np.all(vals[:, 0] > 0):
        raise DryStateError("dry cell adjacent to a quadrature node")
    return LinearizationState.from_primitive(*vals.mean(axis=0), params.g)


@dataclass
class NodeValues:
    """Predicted ``(h, u, v)`` and bathymetry at the nodes of one kind (2-D arrays)."""

    h: np.ndarray
    u: np.ndarray
    v: np.ndarray
    b: np.ndarray


@dataclass
class PredictedStates:
    vertex: NodeValues
    vmid: NodeValues
    hmid: NodeValues

    def __getitem__(self, kind: str) -> NodeValues:
        return getattr(self, kind)


def predict(w: np.ndarray, b: np.ndarray, U: np.ndarray, V: np.ndarray, grid: Grid,
            params: PhysicalParams, tau: float, order: int = 2,
            limiter_kind: str | None = "minmod",
            reconstruction: Reconstruction | None = None) -> PredictedStates:
    """Predict ``(h, u, v)`` at every edge quadrature node at ``t_n + tau``.

    ``w`` holds padded primitive cell values, ``b``, ``U``, ``V`` the padded
    bathymetry and Coriolis primitives at ``t_n``.

    Order 1 applies the constant-data operator to the cell values.  Order 2
    applies the bilinear operator to the continuous recovery and adds the
    constant-data operator applied to what the recovery misses of each cell
    mean (the ``(1 - mu_x^2 mu_y^2)`` residual in unlimited cells); that
    correction carries no bathymetry terms, which live in the bilinear part.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    g = params.g
    hb = grid.hbar
    eta_c = w[0] + b
    if order == 2:
        rec = reconstruction or recover(w, b, U, V, limiter_kind, conservative=False)
        rb = rec.b
    else:
        rb = recover_array(b, None, conservative=False)
    bx_c = rb[1] / hb
    by_c = rb[2] / hb
    lay, parts = all_nodes_layout(grid)
    lh, lu, lv, lc = linearization_arrays(lay, w, g)
    circ = NodeCircles(-lu * tau, -lv * tau, lc * tau, hb)
    b_node = node_bathymetry(lay, b)
    bx = gather_constant(lay, bx_c)
    by = gather_constant(lay, by_c)
    if order == 1:
        eta = gather_constant(lay, eta_c)
        u = gather_constant(lay, w[1])
        v = gather_constant(lay, w[2])
        K = g * (eta - gather_constant(lay, V))
        L = g * (eta + gather_constant(lay, U))
        hn, un, vn = evolve_const(circ, lc, lu, lv, tau, g, eta, u, v, K, L, bx, by, b_node)
    else:
        tr = {name: circ.trig(gather_bilinear(lay, getattr(rec, name), hb))
              for name in ("eta", "u", "v", "U", "V")}
        # exact slopes of the bilinear bathymetry: b_x = b + d Y, b_y = c + d X
        pb = gather_bilinear(lay, rec.b, hb)
        zero = np.zeros_like(pb[0])
        bx = circ.trig(np.stack([pb[1], zero, pb[3], zero]))
        by = circ.trig(np.stack([pb[2], pb[3], zero, zero]))
        K = g * (tr["eta"] - tr["V"])
        L = g * (tr["eta"] + tr["U"])
        hn, un, vn = evolve_bilin(circ, lc, lu, lv, tau, g, tr["eta"], tr["u"], tr["v"],
                                  K, L, bx, by, b_node)
        r_eta = gather_constant(lay, eta_c - rec.eta[0])
        r_u = gather_constant(lay, w[1] - rec.u[0])
        r_v = gather_constant(lay, w[2] - rec.v[0])
        r_K = g * (r_eta - gather_constant(lay, V - rec.V[0]))
        r_L = g * (r_eta + gather_constant(lay, U - rec.U[0]))
        dh, du, dv = evolve_const(circ, lc, lu, lv, tau, g, r_eta, r_u, r_v, r_K, r_L)
        hn, un, vn = hn + dh, un + du, vn + dv
    if not np.all(hn > 0):
        raise DryStateError("predicted depth non-positive at a quadrature node")
    out = {kind: NodeValues(hn[sl].reshape(shp), un[sl].reshape(shp), vn[sl].reshape(shp),
                            b_node[sl].reshape(shp))
           for kind, shp, sl in parts}
    return PredictedStates(**out)
