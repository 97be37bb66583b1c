import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from slab_soliton import analysis as an
from slab_soliton.closed_forms import BarrierParams, SlabParams, oblique_grim_height, subsolution_value
from slab_soliton.grid import NodeClass, ScalarField, build_grid
from slab_soliton.solver import TranslatorSolution, solution_from_values


def field_solution(grid, fn):
    return solution_from_values(grid, fn(grid.node_x, grid.node_rho))


# ------------------------------------------------------------ records


@given(st.floats(-10, 10), st.floats(0, 5))
def test_record_pass_rule(margin, threshold):
    r = an.CheckRecord("x", "claim", margin, threshold, 1)
    assert r.pass_ == (margin >= -threshold)


def test_report_json_stable(sol_R2):
    rep = an.verify(sol_R2, eps0=0.5)
    a, b = rep.to_json(), an.verify(sol_R2, eps0=0.5).to_json()
    assert a == b
    d = json.loads(a)
    assert d["pass"] == rep.passed
    assert {r["name"] for r in d["records"]} == {r.name for r in rep.records}
    assert rep["ordering"].name == "ordering"
    with pytest.raises(KeyError):
        rep["missing"]


def test_report_handles_infinite_thresholds(sol_R2):
    rep = an.VerificationReport([an.CheckRecord("a", "c", -math.inf, math.inf, 0)], {})
    assert json.loads(rep.to_json())["records"][0]["threshold"] == "inf"


# ------------------------------------------------------------ ordering and height


def test_ordering_passes(sol_R5):
    assert an.check_ordering(sol_R5).pass_


def test_ordering_perturbed_fails(sol_R2):
    g = sol_R2.grid
    c = g.center
    j = int(np.nonzero(g.inside[c])[0][-1])
    u = sol_R2.u.values.copy()
    u[g.index[c, j]] -= 0.1
    assert not an.check_ordering(sol_R2, u).pass_


def test_ordering_at_subsolution(sol_R2):
    g = sol_R2.grid
    sub = np.asarray(subsolution_value(g.bp, g.node_x, g.node_rho))
    rec = an.check_ordering(sol_R2, sub)
    assert rec.pass_
    assert rec.info["min_gap"] == 0.0


def test_ordering_positive_u_fails(sol_R2):
    u = sol_R2.u.values.copy()
    u[0] = 1e-3
    assert not an.check_ordering(sol_R2, u).pass_


def test_height_constant_and_regime(sol_R2, sol_R5):
    r = an.check_height(sol_R5, eps0=0.5)
    assert r.info["bound_constant"] == pytest.approx(1 / math.sqrt(3))
    assert r.margin == pytest.approx(-sol_R5.origin_value - 5 / math.sqrt(3))
    small = an.check_height(sol_R2, eps0=0.5)  # R0 = 4 > 2
    assert not small.info["in_regime"] and small.threshold == math.inf and small.pass_


# ------------------------------------------------------------ curvature checks


def test_boundary_H(sol_R5):
    assert an.check_boundary_H(sol_R5).pass_
    bh = an.boundary_mean_curvature(sol_R5)
    assert np.all(bh["x"] >= 0) and np.all((bh["H"] > 0) & (bh["H"] <= 1))


def test_slab_weight():
    slab = SlabParams(2, math.pi / 3)
    assert an.slab_linear_weight(slab, 0.0) == 1.0
    assert an.slab_linear_weight(slab, slab.half_width) == pytest.approx(0.0)


def test_H_over_v_positive(sol_R5):
    r = an.check_H_over_v(sol_R5)
    assert r.pass_ and r.margin > 0
    # the x = 0 column sits above the cos(theta) floor of the comparison bound
    assert r.info["min_H_at_x0"] > r.info["cos_theta"]


def test_H_over_v_flat_control(sol_R2):
    flat = solution_from_values(sol_R2.grid, np.zeros(sol_R2.grid.n_unknowns))
    r = an.check_H_over_v(flat)
    assert r.margin == 0.0 and not r.pass_


def test_convexity_passes(sol_R5):
    assert an.check_convexity(sol_R5).pass_


def test_convexity_saddle_fails(sol_R2):
    saddle = field_solution(sol_R2.grid, lambda x, r: x * x - r * r)
    r = an.check_convexity(saddle)
    assert r.margin == pytest.approx(-2.0, rel=1e-9) and not r.pass_


def test_convexity_oblique_grim():
    slab = SlabParams(2, math.pi / 3)
    g = build_grid(BarrierParams(slab, 4.0), 65, 65)
    r = an.check_convexity(field_solution(g, lambda x, rho: oblique_grim_height(slab, x, rho)))
    assert r.margin >= -1e-12


def test_second_order_mask_excludes_cut_nodes(sol_R2):
    g = sol_R2.grid
    m = an.second_order_mask(g)
    i, j = g.nodes
    assert not np.any(m & (g.node_class[i, j] == NodeClass.BOUNDARY_ADJACENT))


# ------------------------------------------------------------ symmetry


def test_symmetry_passes(sol_R2):
    assert an.check_reflection_symmetry(sol_R2).pass_


def test_symmetry_oblique_grim():
    slab = SlabParams(2, math.pi / 3)
    g = build_grid(BarrierParams(slab, 4.0), 65, 65)
    s = field_solution(g, lambda x, rho: oblique_grim_height(slab, x, rho))
    assert an.check_reflection_symmetry(s).margin >= -1e-14


def test_symmetry_broken_mirror(sol_R2):
    g = sol_R2.grid
    nc = g.node_class.copy()
    i = g.center + 3
    nc[i, 1] = NodeClass.EXTERIOR
    index = -np.ones_like(g.index)
    index[nc != NodeClass.EXTERIOR] = np.arange(int(np.sum(nc != NodeClass.EXTERIOR)))
    bad = dataclasses.replace(g, node_class=nc, index=index, _cache={})
    u = ScalarField(bad, np.zeros(bad.n_unknowns))
    sol = TranslatorSolution(bad, u, 0.0, 0, u, None)
    r = an.check_reflection_symmetry(sol)
    assert r.margin == -math.inf and not r.pass_


def test_symmetry_asymmetric_values(sol_R2):
    g = sol_R2.grid
    skew = solution_from_values(g, sol_R2.u.values + 1e-6 * g.node_x)
    assert not an.check_reflection_symmetry(skew).pass_


# ------------------------------------------------------------ tips and Grim fits


def test_tip_zero_and_monotone(sol_R5):
    assert an.tip_find(sol_R5, 0.0) == (0.0, 0.0)
    top = an.max_axis_tilt(sol_R5)
    oms = np.linspace(0.05, 0.95 * top, 8)
    rho = [an.tip_find(sol_R5, om).rho for om in oms]
    assert all(b > a for a, b in zip(rho, rho[1:]))


def test_tip_out_of_range(sol_R5):
    theta = sol_R5.bp.slab.theta
    with pytest.raises(an.OmegaOutOfRange):
        an.tip_find(sol_R5, theta)
    with pytest.raises(an.OmegaOutOfRange) as info:
        an.tip_find(sol_R5, 0.5 * (an.max_axis_tilt(sol_R5) + theta))
    assert info.value.code == "OMEGA_OUT_OF_RANGE"


def test_axis_slope_profile(sol_R5):
    rho, s = an.axis_slope_profile(sol_R5)
    assert s[0] == 0.0 and rho[-1] == pytest.approx(sol_R5.bp.R)
    assert np.all(np.diff(s) > 0)
    assert an.max_axis_tilt(sol_R5) < sol_R5.bp.slab.theta


def test_grim_fit_window_zero(sol_R5):
    assert an.grim_fit_error(sol_R5, 0.3, 0.0) == 0.0


def test_grim_fit_self_test():
    """Oblique Grim samples recentred at their own tip fit exactly."""
    slab = SlabParams(2, math.pi / 3)
    om = math.pi / 6
    g = build_grid(BarrierParams(slab, 1.0), 65, 65)
    assert g.x_max < 0.5 * math.pi / math.cos(om)
    grim = SlabParams(2, om)
    s = field_solution(g, lambda x, r: oblique_grim_height(grim, x, r))
    fit = an.grim_fit(s, om, 0.3, samples=None)
    assert fit.samples > 0
    assert fit.error < 1e-10


def test_grim_fit_reports_clipping(sol_R5):
    fit = an.grim_fit(sol_R5, 0.5, 2.0)
    assert fit.clipped  # tip sits within 2 of the axis
    assert fit.error > 0 and fit.samples == 41 * 41


# ------------------------------------------------------------ level sets


def test_level_set_symmetric_and_convex(sol_R5):
    h = 0.5 * (-sol_R5.origin_value)
    wr = an.level_set_width(sol_R5, h)
    assert wr.ell > 0 and wr.x0 == 0.0
    assert np.abs(wr.x_plus + wr.x_minus).max() <= 1e-10
    assert an.check_convexity(sol_R5).pass_
    assert wr.chord_margin is not None and wr.chord_margin >= -10 * sol_R5.grid.h
    lines = wr.to_csv().splitlines()
    assert lines[0] == "rho,x_plus,x_minus,h" and len(lines) == len(wr.rho) + 1


def test_level_set_extent_grows_with_h(sol_R5):
    top = -sol_R5.origin_value
    ext = [an.level_set_width(sol_R5, f * top).max_extent for f in (0.2, 0.4, 0.6, 0.8)]
    assert all(b > a for a, b in zip(ext, ext[1:]))
    assert ext[-1] < sol_R5.bp.slab.half_width


def test_level_set_rejects_empty(sol_R5):
    with pytest.raises(ValueError):
        an.level_set_width(sol_R5, 0.0)
    with pytest.raises(ValueError):
        an.level_set_width(sol_R5, 2 * (-sol_R5.origin_value))


def test_chord_needs_samples(sol_R2):
    wr = an.level_set_width(sol_R2, 0.5 * (-sol_R2.origin_value), min_samples=10_000)
    assert wr.chord_margin is None


# ------------------------------------------------------------ Jacobi


def test_jacobi_record_informational(sol_R5):
    r = an.check_jacobi(sol_R5)
    assert r.pass_ and r.info["max_abs"] > 0
    sub = an.check_jacobi(sol_R5, region=(0.5, 0.5))
    assert sub.samples < r.samples


def test_verify_is_bitwise_reproducible(sol_R5):
    a = an.verify(sol_R5, eps0=0.5)
    b = an.verify(sol_R5, eps0=0.5)
    assert [r.margin for r in a.records] == [r.margin for r in b.records]
