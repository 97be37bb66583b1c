import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slab_soliton.closed_forms import BarrierParams, SlabParams, oblique_grim_height
from slab_soliton.grid import GridError, NodeClass, ScalarField, build_grid
from slab_soliton.operator import (
    geometry_at,
    geometry_field,
    jacobi_identity_residual,
    jacobi_identity_values,
    jacobian,
    laplace_beltrami,
    laplace_beltrami_values,
    residual_and_jacobian,
    translator_residual,
    translator_residual_values,
)

GRIM = lambda x, r: -np.log(np.cos(x))


def grim_bp():
    # theta = pi/6, R = 1: the outer domain stays well inside |x| < pi/2
    return BarrierParams(SlabParams(2, math.pi / 6), 1.0)


@pytest.fixture(scope="module")
def g33():
    return build_grid(BarrierParams(SlabParams(2, math.pi / 3), 3.0), 33, 33)


@pytest.fixture(scope="module")
def g33_n3():
    return build_grid(BarrierParams(SlabParams(3, math.pi / 4), 3.0), 33, 33)


def sphere(r0):
    return lambda x, r: -np.sqrt(r0**2 - x**2 - r**2)


def interior(g):
    i, j = g.nodes
    return g.node_class[i, j] == NodeClass.INTERIOR


# ------------------------------------------------------------ residual


def test_flat_field_residual(g33, g33_n3):
    for g in (g33, g33_n3):
        r = translator_residual(ScalarField(g, np.zeros(g.n_unknowns)))
        assert np.allclose(r.values, -1.0, atol=1e-15)


def test_grim_second_order():
    bp = grim_bp()
    errs = []
    for n in (65, 129, 257):
        g = build_grid(bp, n, n)
        r = translator_residual(ScalarField.from_function(g, GRIM), GRIM).values
        errs.append(np.abs(r[interior(g)]).max())
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.4 <= q <= 4.6 for q in ratios), ratios


def test_grim_cut_cells_converge():
    bp = grim_bp()
    errs = []
    for n in (65, 129):
        g = build_grid(bp, n, n)
        r = translator_residual(ScalarField.from_function(g, GRIM), GRIM).values
        errs.append(np.abs(r).max())
    assert errs[1] < 0.6 * errs[0]


def test_oblique_grim_off_axis():
    slab = SlabParams(2, math.pi / 4)
    bp = BarrierParams(slab, 4.0)
    fn = lambda x, r: oblique_grim_height(slab, x, r)
    errs = []
    for n in (65, 129, 257):
        g = build_grid(bp, n, n)
        r = translator_residual(ScalarField.from_function(g, fn), fn).values
        # interior sub-rectangle away from the axis and the steep slab walls
        sel = (g.node_rho > 0.3 * bp.R) & (g.node_rho < 0.6 * bp.R) & (np.abs(g.node_x) < 0.3 * g.x_max)
        errs.append(np.abs(r[sel]).max())
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_residual_even_in_x(g33, rng):
    g = g33
    v = rng.standard_normal(g.n_unknowns)
    arr = ScalarField(g, v).to_array()
    i, j = g.nodes
    sym = 0.5 * (arr[i, j] + arr[g.nx - 1 - i, j])
    F = translator_residual_values(g, sym)
    Fa = ScalarField(g, F).to_array()
    assert np.abs(Fa[i, j] - Fa[g.nx - 1 - i, j]).max() <= 1e-13


# ------------------------------------------------------------ Jacobian


def fd_jacobian(g, u, h=1e-7):
    cols = []
    for k in range(g.n_unknowns):
        e = np.zeros(g.n_unknowns)
        e[k] = h
        cols.append((translator_residual_values(g, u + e) - translator_residual_values(g, u - e)) / (2 * h))
    return np.array(cols).T


@pytest.mark.parametrize("gname", ["g33", "g33_n3"])
def test_jacobian_matches_fd(gname, request, rng):
    g = request.getfixturevalue(gname)
    for _ in range(3):
        u = -2.0 * rng.random(g.n_unknowns)
        J = jacobian(ScalarField(g, u)).toarray()
        Jfd = fd_jacobian(g, u)
        assert np.abs(J - Jfd).max() / np.abs(Jfd).max() < 1e-6


def test_jacobian_sparsity(g33, rng):
    J = jacobian(ScalarField(g33, -rng.random(g33.n_unknowns)))
    assert np.diff(J.indptr).max() <= 9


def test_taylor_first_order(g33, rng):
    g = g33
    u = -rng.random(g.n_unknowns)
    d = rng.standard_normal(g.n_unknowns)
    F0, J = residual_and_jacobian(g, u)
    Jd = J @ d
    errs = [np.abs((translator_residual_values(g, u + t * d) - F0) / t - Jd).max() for t in (1e-2, 1e-3, 1e-4)]
    r1, r2 = errs[0] / errs[1], errs[1] / errs[2]
    assert 7 < r1 < 13 and 7 < r2 < 13


def test_jacobian_at_flat_is_laplacian(g33):
    """At Du = 0 the 1/W term drops out and interior rows are the 5-point Laplacian."""
    g = g33
    J = jacobian(ScalarField(g, np.zeros(g.n_unknowns))).tocsr()
    i, j = g.nodes
    for k in np.nonzero(interior(g))[0][::7]:
        row = dict(zip(J.indices[J.indptr[k] : J.indptr[k + 1]], J.data[J.indptr[k] : J.indptr[k + 1]]))
        ii, jj = i[k], j[k]
        want = {
            k: -2 / g.hx**2 - 2 / g.hrho**2,
            g.index[ii + 1, jj]: 1 / g.hx**2,
            g.index[ii - 1, jj]: 1 / g.hx**2,
            g.index[ii, jj + 1]: 1 / g.hrho**2,
            g.index[ii, jj - 1]: 1 / g.hrho**2,
        }
        for c, v in want.items():
            assert row.get(c, 0.0) == pytest.approx(v, rel=1e-12)
        assert sum(abs(v) for c, v in row.items() if c not in want) < 1e-12


# ------------------------------------------------------------ geometry


def test_flat_geometry(g33):
    gf = geometry_field(ScalarField(g33, np.zeros(g33.n_unknowns)))
    assert np.allclose(gf.normal, [0, 0, -1])
    for a in (gf.H, gf.kappa_min, gf.kappa_max, gf.kappa_rot):
        assert np.all(a == 0)


@pytest.mark.parametrize("n", [2, 3])
def test_sphere_curvature(n):
    r0 = 3.0
    bp = BarrierParams(SlabParams(n, math.pi / 3), 1.0)
    fn = sphere(r0)
    errs = []
    for m in (65, 129, 257):
        g = build_grid(bp, m, m)
        gf = geometry_field(ScalarField.from_function(g, fn), fn)
        k = g.index[g.center, 0]
        errs.append(abs(gf.H[k] - n / r0) / (n / r0))
        assert gf.kappa_min[k] == pytest.approx(1 / r0, rel=1e-3)
        assert gf.kappa_max[k] == pytest.approx(1 / r0, rel=1e-3)
        if n > 2:
            assert gf.kappa_rot[k] == pytest.approx(1 / r0, rel=1e-3)
    assert errs[-1] < 1e-2
    assert errs[0] > errs[1] > errs[2]


def test_sphere_radius_two():
    # n=2, r=2: H = 1 and both principal curvatures 1/2 at the bottom
    bp = BarrierParams(SlabParams(2, math.pi / 6), 0.8)
    fn = sphere(2.0)
    g = build_grid(bp, 129, 129)
    assert (g.node_x**2 + g.node_rho**2).max() < 4
    jet = geometry_at(ScalarField.from_function(g, fn), (g.center, 0))
    assert jet.H == pytest.approx(1.0, rel=1e-4)
    assert jet.kappa_min == pytest.approx(0.5, rel=1e-4)
    assert jet.kappa_max == pytest.approx(0.5, rel=1e-4)


def test_normal_unit_and_vertical_component(g33, rng):
    u = -rng.random(g33.n_unknowns) * 3
    gf = geometry_field(ScalarField(g33, u))
    nrm = np.linalg.norm(gf.normal, axis=1)
    assert np.abs(nrm - 1).max() < 1e-12
    assert np.array_equal(gf.normal[:, 2], -1 / gf.W)
    assert np.all(gf.W >= 1)


def test_oblique_grim_normal():
    slab = SlabParams(2, math.pi / 3)
    bp = BarrierParams(slab, 4.0)
    fn = lambda x, r: oblique_grim_height(slab, x, r)
    g = build_grid(bp, 65, 65)
    f = ScalarField.from_function(g, fn)
    jet = geometry_at(f, (g.center, 20))
    assert np.allclose(jet.normal, (0.0, slab.sin, -slab.cos), atol=1e-12)


def test_H_trace_matches_divergence_form():
    """Two discretisations of H agree to O(h^2) on a smooth field."""
    bp = BarrierParams(SlabParams(3, math.pi / 3), 1.0)
    fn = sphere(3.0)
    diffs = []
    for m in (65, 129):
        g = build_grid(bp, m, m)
        f = ScalarField.from_function(g, fn)
        gf = geometry_field(f, fn)
        Hdiv = translator_residual(f, fn).values + 1 / gf.W
        sel = (np.abs(g.node_x) < 0.5 * g.x_max) & (g.node_rho < 0.5 * bp.R)
        diffs.append(np.abs(Hdiv - gf.H)[sel].max())
    assert diffs[0] / diffs[1] > 3


def test_geometry_at_degenerate(g33):
    f = ScalarField(g33, np.zeros(g33.n_unknowns))
    i, j = np.nonzero(g33.inside & ~g33.full_stencil_mask())
    with pytest.raises(GridError):
        geometry_at(f, (int(i[0]), int(j[0])))
    with pytest.raises(GridError):
        geometry_at(f, (0, g33.nrho - 1))


# ------------------------------------------------------------ Laplace-Beltrami and Jacobi


@pytest.mark.parametrize("gname,n", [("g33", 2), ("g33_n3", 3)])
def test_flat_laplace_beltrami(gname, n, request):
    g = request.getfixturevalue(gname)
    z = ScalarField(g, np.zeros(g.n_unknowns))
    lb, ok = laplace_beltrami_values(z, g.node_x**2)
    assert np.allclose(lb[ok], 2.0, atol=1e-9)
    lb, ok = laplace_beltrami_values(z, g.node_rho**2)
    assert np.allclose(lb[ok], 2.0 * (n - 1), atol=1e-9)
    out = laplace_beltrami(z, ScalarField(g, np.full(g.n_unknowns, 4.0)))
    assert np.abs(out.values).max() < 1e-12


def test_laplace_beltrami_on_grim():
    bp = grim_bp()
    errs = []
    for m in (65, 129, 257):
        g = build_grid(bp, m, m)
        u = ScalarField.from_function(g, GRIM)
        x = g.node_x
        # f = sin x with arc length ds = sec x dx: f_ss = -2 cos^2 x sin x
        lb, ok = laplace_beltrami_values(u, np.sin(x), GRIM)
        errs.append(np.abs(lb + 2 * np.cos(x) ** 2 * np.sin(x))[ok].max())
    assert errs[0] / errs[1] > 3 and errs[1] / errs[2] > 3


def test_jacobi_flat_is_zero(g33):
    assert np.all(jacobi_identity_residual(ScalarField(g33, np.zeros(g33.n_unknowns))).values == 0)


def test_jacobi_on_grim_converges():
    bp = grim_bp()
    errs = []
    for m in (65, 129, 257):
        g = build_grid(bp, m, m)
        res, ok = jacobi_identity_values(ScalarField.from_function(g, GRIM), GRIM)
        errs.append(np.abs(res[ok]).max())
    assert errs[0] / errs[1] > 2 and errs[1] / errs[2] > 2


@settings(max_examples=10, deadline=None)
@given(st.floats(-1.0, 1.0), st.floats(-1.0, 1.0))
def test_laplace_beltrami_linear_in_f(a, b):
    g = build_grid(BarrierParams(SlabParams(2, math.pi / 3), 3.0), 33, 33)
    rng = np.random.default_rng(0)
    u = ScalarField(g, -rng.random(g.n_unknowns))
    f1, f2 = rng.standard_normal((2, g.n_unknowns))
    l1, ok = laplace_beltrami_values(u, f1)
    l2, _ = laplace_beltrami_values(u, f2)
    l12, _ = laplace_beltrami_values(u, a * f1 + b * f2)
    assert np.allclose(l12[ok], (a * l1 + b * l2)[ok], atol=1e-8)
