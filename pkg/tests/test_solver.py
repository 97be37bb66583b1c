import math

import numpy as np
import pytest
import scipy.sparse as sp

from slab_soliton.closed_forms import BarrierParams, PointXRho, SlabParams, outer_boundary_rho, subsolution_value
from slab_soliton.grid import ScalarField, build_grid, interpolate
from slab_soliton.operator import jacobian, translator_residual_values
from slab_soliton.solver import (
    LinearSolveFailure,
    NonConverged,
    Resolution,
    SolverConfig,
    continuation_sweep,
    interpolate_init,
    linear_solve,
    solution_from_values,
    solve,
)


def relax(grid, tol=1e-9, max_steps=200_000):
    """Explicit pseudo-time relaxation ``u <- u + dt F(u)`` from zero, no Newton.

    Local steps ``0.5 / |diag J(0)|`` keep the cut cells stable.
    """
    u = np.zeros(grid.n_unknowns)
    dt = 0.5 / np.abs(jacobian(ScalarField(grid, u)).diagonal())
    for _ in range(max_steps):
        F = translator_residual_values(grid, u)
        if np.abs(F).max() < tol:
            return u
        u = u + dt * F
    raise AssertionError("relaxation did not converge")


# ------------------------------------------------------------ config


@pytest.mark.parametrize(
    "kw", [{"newton_tol": 1e-16}, {"max_newton": 0}, {"damping": 1.5}, {"ptc_steps": -1}, {"linear_tol": 0.0}, {"ptc_tau": -1.0}]
)
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        SolverConfig(**kw)


def test_config_defaults():
    c = SolverConfig()
    assert (c.newton_tol, c.max_newton, c.damping, c.min_step, c.ptc_steps) == (1e-8, 60, 0.5, 2.0**-20, 200)


# ------------------------------------------------------------ linear solve


def test_linear_solve_identity():
    b = np.arange(5.0)
    assert np.array_equal(linear_solve(sp.identity(5, format="csr"), b), b)


def test_linear_solve_manufactured_laplacian():
    m = 30
    h = 1.0 / (m + 1)
    T = sp.diags([1, -2, 1], [-1, 0, 1], shape=(m, m)) / h**2
    A = (sp.kron(sp.identity(m), T) + sp.kron(T, sp.identity(m))).tocsr()
    xs = np.linspace(h, 1 - h, m)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    exact = (np.sin(np.pi * X) * np.sin(2 * np.pi * Y)).ravel()
    b = A @ exact
    x = linear_solve(A, b, 1e-10)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(b)
    assert np.abs(x - exact).max() < 1e-10


def test_linear_solve_singular():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(LinearSolveFailure) as info:
        linear_solve(A, np.ones(2))
    assert info.value.condition_estimate is not None


# ------------------------------------------------------------ single solve


def test_converges_and_negative(sol_R2):
    assert sol_R2.residual_norm <= 1e-8
    assert sol_R2.newton_iters <= 60
    assert sol_R2.origin_value < 0
    assert np.all(sol_R2.u.values <= 0)
    assert sol_R2.normalized_u.values[sol_R2.grid.index[sol_R2.grid.center, 0]] == 0.0


def test_against_relaxation_oracle(sol_R2):
    bp = sol_R2.bp
    g = build_grid(bp, 33, 33)
    u = relax(g)
    ref = u[g.index[g.center, 0]]
    assert sol_R2.origin_value == pytest.approx(ref, rel=0.02)


def test_boundary_values_zero(sol_R2):
    g = sol_R2.grid
    for x in (0.0, 0.5, -1.0):
        rb = outer_boundary_rho(g.bp, abs(x))
        assert interpolate(sol_R2.u, PointXRho(x, rb)) == pytest.approx(0.0, abs=1e-12)


def test_even_in_x(sol_R2):
    g = sol_R2.grid
    i, j = g.nodes
    mirror = g.index[g.nx - 1 - i, j]
    assert np.abs(sol_R2.u.values - sol_R2.u.values[mirror]).max() <= 1e-10


def test_merit_nonincreasing(sol_R5):
    h = [rec["residual_2"] for rec in sol_R5.history]
    assert all(b <= a for a, b in zip(h, h[1:]))


def test_barrier_ordering(sol_R5):
    g = sol_R5.grid
    sub = subsolution_value(g.bp, g.node_x, g.node_rho)
    allowance = 10 * g.h**2 / np.cos(g.node_x * g.bp.slab.cos) ** 2
    assert np.all(sol_R5.u.values >= sub - allowance)


def test_init_independence(sol_R2):
    g = sol_R2.grid
    s0 = solve(g.bp, g, SolverConfig(), init=ScalarField(g, np.zeros(g.n_unknowns)))
    assert np.abs(s0.u.values - sol_R2.u.values).max() < 1e-8


def test_refinement_ratio():
    bp = BarrierParams(SlabParams(2, math.pi / 3), 2.0)
    v = [solve(bp, build_grid(bp, n, n)).origin_value for n in (33, 65, 129)]
    d = (v[0] - v[1]) / (v[1] - v[2])
    assert 3 <= d <= 5


def test_nonconverged_carries_iterate():
    bp = BarrierParams(SlabParams(2, math.pi / 3), 2.0)
    g = build_grid(bp, 33, 33)
    with pytest.raises(NonConverged) as info:
        solve(bp, g, SolverConfig(max_newton=1, ptc_steps=0))
    assert info.value.last.grid is g
    assert info.value.code == "NONCONVERGED"


def test_grid_mismatch_rejected(sol_R2):
    other = BarrierParams(sol_R2.bp.slab, 3.0)
    with pytest.raises(ValueError):
        solve(other, sol_R2.grid)


def test_solution_from_values_roundtrip(sol_R2):
    s = solution_from_values(sol_R2.grid, sol_R2.u.values.copy())
    assert s.residual_norm == pytest.approx(sol_R2.residual_norm, abs=1e-12)
    assert np.array_equal(s.diagnostics.H, sol_R2.diagnostics.H)


def test_metadata_contents(sol_R2):
    m = sol_R2.metadata()
    assert m["newton_iters"] == sol_R2.newton_iters
    assert m["grid"]["nx"] == 65
    assert len(m["history"]) == sol_R2.newton_iters


# ------------------------------------------------------------ continuation


def test_resolution_policy():
    bp = BarrierParams(SlabParams(2, math.pi / 3), 10.0)
    g = Resolution(per_unit=6.4).build(bp)
    assert g.nx % 2 == 1
    assert g.hrho == pytest.approx(bp.R / (g.nrho - 1))
    assert g.hrho <= 1 / 6.4 + 1e-12


def test_interpolated_init_is_bracketed(sol_R2):
    bp = BarrierParams(sol_R2.bp.slab, 3.0)
    g = build_grid(bp, 65, 65)
    init = interpolate_init(sol_R2, g)
    sub = subsolution_value(bp, g.node_x, g.node_rho)
    assert np.all(init.values <= 0) and np.all(init.values >= sub - 1e-12)


def test_sweep_monotone_and_deterministic():
    slab = SlabParams(2, math.pi / 3)
    res = Resolution(65, 65)
    a = continuation_sweep(slab, [2.0, 5.0, 10.0], res)
    b = continuation_sweep(slab, [2.0, 5.0, 10.0], res)
    heights = [-s.origin_value for s in a]
    assert heights[0] < heights[1] < heights[2]
    for s, t in zip(a, b):
        assert np.array_equal(s.u.values, t.u.values)
    assert a[1].ptc_steps == 0  # warm started


def test_sweep_collects_errors():
    slab = SlabParams(2, math.pi / 3)
    out = continuation_sweep(slab, [2.0, 3.0], Resolution(33, 33), SolverConfig(max_newton=1, ptc_steps=0))
    assert all(isinstance(r, NonConverged) for r in out)


def test_sweep_rejects_unsorted():
    with pytest.raises(ValueError):
        continuation_sweep(SlabParams(2, 1.0), [5.0, 2.0])
