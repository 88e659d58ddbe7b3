import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fveg.core import Grid, PhysicalParams, to_primitive
from fveg.fv_scheme import coriolis_primitives
from fveg.recovery import (CellBilinear, cell_mean, eval_reconstruction, limiter, recover,
                           recover_array, residual_field, vertex_values)
from fveg.scenarios import discrete_jet_equilibrium, jet_profile

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_limiter_examples():
    assert limiter("minmod", 1.0, -1.0) == 0.0
    assert limiter("minmod", 2.0, 0.5) == 0.5
    assert limiter("mc", 1.0, 1.0) == 1.0
    assert limiter("mc", -1.0, -3.0) == -2.0
    with pytest.raises(ValueError):
        limiter("superbee", 1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(finite, finite)
def test_limiter_bounds(a, b):
    mm = limiter("minmod", a, b)
    mc = limiter("mc", a, b)
    assert abs(mm) <= max(abs(a), abs(b))
    assert abs(mc) <= 2 * min(abs(a), abs(b)) + 1e-12
    if a * b <= 0:
        assert mm == 0.0 and mc == 0.0
    else:
        assert np.sign(mm) == np.sign(a) and np.sign(mc) == np.sign(a)


def test_constant_field_is_reproduced():
    q = np.full((8, 7), 3.25)
    for kind in (None, "minmod", "mc"):
        coef = recover_array(q, kind)
        assert np.all(coef[0] == 3.25)
        assert np.all(coef[1:] == 0.0)
    assert np.all(residual_field(q) == 0.0)


def test_linear_field_is_reproduced_pointwise():
    hb = 0.1
    x = (np.arange(9) + 0.5) * hb
    y = (np.arange(8) + 0.5) * hb
    X, Y = np.meshgrid(x, y, indexing="ij")
    a, p, s = 1.5, -2.0, 0.75
    q = a + p * X + s * Y
    coef = recover_array(q)
    inner = (slice(1, -1), slice(1, -1))
    np.testing.assert_allclose(coef[1][inner], p * hb, rtol=1e-13)
    np.testing.assert_allclose(coef[2][inner], s * hb, rtol=1e-13)
    np.testing.assert_allclose(coef[3][inner], 0.0, atol=1e-13)
    for i, j, xi, eta in ((3, 4, 0.5, -0.5), (2, 2, 0.1, 0.3), (5, 1, -0.5, 0.25)):
        exact = a + p * (X[i, j] + xi * hb) + s * (Y[i, j] + eta * hb)
        assert eval_reconstruction(coef, i, j, xi, eta) == pytest.approx(exact, rel=1e-13)


def test_minmod_clips_isolated_extremum():
    q = np.zeros((7, 7))
    q[3, 3] = 1.0
    coef = recover_array(q, "minmod")
    assert coef[0, 3, 3] == 1.0
    assert coef[1, 3, 3] == 0.0 and coef[2, 3, 3] == 0.0 and coef[3, 3, 3] == 0.0


def test_limited_cells_use_limited_slopes():
    # a step: continuous slopes disagree with one-sided differences
    q = np.zeros((8, 5))
    q[4:] = 1.0
    coef, mask = recover_array(q, "minmod", return_mask=True)
    assert mask[3, 2] and mask[4, 2]
    assert np.all(coef[1][mask] == 0.0)
    assert np.all(coef[3][mask] == 0.0)
    assert np.all(coef[0][mask] == q[mask])


def test_residual_of_delta_field():
    q = np.zeros((7, 7))
    q[3, 3] = 16.0
    r = residual_field(q)
    assert r[3, 3] == 12.0
    assert r[2, 3] == r[4, 3] == r[3, 2] == r[3, 4] == -2.0
    assert r[2, 2] == r[4, 4] == r[2, 4] == r[4, 2] == -1.0
    assert r.sum() == 0.0


def test_residual_annihilates_linear_data():
    x = np.arange(10.0)
    y = np.arange(6.0)
    X, Y = np.meshgrid(x, y, indexing="ij")
    r = residual_field(2.0 + 0.3 * X - 0.7 * Y)
    np.testing.assert_allclose(r[1:-1, 1:-1], 0.0, atol=1e-13)


def test_eval_reconstruction_examples():
    coef = np.zeros((4, 1, 1))
    coef[:, 0, 0] = (1.0, 2.0, 0.0, 0.0)
    assert eval_reconstruction(coef, 0, 0, 0.0, 0.0) == 1.0
    assert eval_reconstruction(coef, 0, 0, 0.5, 0.0) == 2.0
    with pytest.raises(ValueError):
        eval_reconstruction(coef, 0, 0, 0.6, 0.0)


def smooth_sine(n=12):
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    return np.sin(2 * np.pi * X) * np.cos(2 * np.pi * Y) + 0.3 * X * Y


def test_continuous_recovery_interpolates_vertex_averages():
    q = smooth_sine()
    coef = recover_array(q, conservative=False)
    vtx = vertex_values(q)
    for i in range(1, q.shape[0] - 1):
        for j in range(1, q.shape[1] - 1):
            for si in (0, 1):
                for sj in (0, 1):
                    val = eval_reconstruction(coef, i, j, si - 0.5, sj - 0.5)
                    assert val == pytest.approx(vtx[i - 1 + si, j - 1 + sj], abs=1e-14)


def test_recentred_recovery_shifts_vertices_by_cell_correction():
    q = smooth_sine()
    cont = recover_array(q, conservative=False)
    cons = recover_array(q, conservative=True)
    np.testing.assert_allclose(cons[1:], cont[1:], atol=0)
    shift = q - cont[0]
    np.testing.assert_allclose(shift[1:-1, 1:-1], residual_field(q)[1:-1, 1:-1], atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from([None, "minmod", "mc"]))
def test_recovery_conserves_cell_means(seed, kind):
    rng = np.random.default_rng(seed)
    w = np.stack([rng.uniform(0.5, 2.0, (9, 8)), rng.normal(size=(9, 8)), rng.normal(size=(9, 8))])
    b = rng.uniform(0, 0.3, (9, 8))
    U = rng.normal(size=(9, 8))
    V = rng.normal(size=(9, 8))
    rec = recover(w, b, U, V, kind)
    # the exact mean of a + b xi + c eta + d xi eta over the cell is a
    for name, data in (("h", w[0]), ("u", w[1]), ("v", w[2]), ("b", b), ("U", U), ("V", V)):
        np.testing.assert_allclose(cell_mean(getattr(rec, name)), data, rtol=1e-14, atol=1e-14)


def test_exact_cell_mean_of_a_bilinear():
    coef = np.array([1.3, -0.4, 2.2, 0.9])
    n = 400
    s = (np.arange(n) + 0.5) / n - 0.5
    XI, ETA = np.meshgrid(s, s, indexing="ij")
    vals = coef[0] + coef[1] * XI + coef[2] * ETA + coef[3] * XI * ETA
    assert vals.mean() == pytest.approx(coef[0], abs=1e-13)


def test_jet_compatible_data_keep_their_structure():
    grid = Grid(30, 4, 0.5, (-7.5, 0.0))
    params = PhysicalParams(g=1.0, f=1.0)
    jet = discrete_jet_equilibrium(grid, params, lambda x: 2 * jet_profile(x), h_left=1.0)
    w = to_primitive(jet.field.q)
    cp = coriolis_primitives(w[1], w[2], params, grid.hbar, ref=(grid.ghost, grid.ghost))
    for kind in (None, "minmod"):
        rec = recover(w, jet.bathymetry, cp.U, cp.V, kind)
        assert np.all(rec.u == 0.0)
        assert np.all(rec.v[2] == 0.0) and np.all(rec.v[3] == 0.0)
        K = rec.K(params.g)
        # limited cells take their surface slope from the limiter while V keeps
        # its continuous slope, so only unlimited cells are exactly balanced
        keep = ~rec.limited
        keep[[0, -1], :] = False
        keep[:, [0, -1]] = False
        if kind is None:
            assert keep[1:-1, 1:-1].all()
        np.testing.assert_allclose(K[1][keep], 0.0, atol=1e-13)
        np.testing.assert_allclose(K[3][keep], 0.0, atol=1e-13)


def test_reconstruction_cell_accessor():
    q = np.full((5, 5), 2.0)
    rec = recover(np.stack([q, 0 * q, 0 * q]), 0 * q, 0 * q, 0 * q)
    assert rec.cell("h", 2, 2) == CellBilinear(2.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        recover(np.stack([q, 0 * q, 0 * q]), 0 * q, 0 * q, 0 * q, "vanleer")
