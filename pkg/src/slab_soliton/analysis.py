"""
Pass/fail checks with margins on computed translator solutions.

Each check returns a :class:`CheckRecord` whose ``pass_`` flag is exactly
``margin >= -threshold``.  Strict inequalities are encoded with a small
negative threshold, informational checks with an infinite one.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .closed_forms import (
    PointXRho,
    epsilon0_estimate,
    oblique_grim_height,
    outer_boundary_rho,
    subsolution_value,
)
from .grid import E, N, GridError, MaskedGrid, NodeClass, ScalarField, interpolate
from .operator import geometry_field, jacobi_identity_values, stencil_operators
from .solver import TranslatorSolution

__all__ = [
    "CheckRecord",
    "VerificationReport",
    "WidthReport",
    "GrimFit",
    "OmegaOutOfRange",
    "STRICT",
    "slab_linear_weight",
    "check_ordering",
    "check_height",
    "boundary_mean_curvature",
    "check_boundary_H",
    "check_H_over_v",
    "second_order_mask",
    "check_convexity",
    "check_reflection_symmetry",
    "check_jacobi",
    "axis_slope_profile",
    "max_axis_tilt",
    "tip_find",
    "grim_fit",
    "grim_fit_error",
    "level_set_profile",
    "level_set_width",
    "verify",
]

# threshold used for strict positivity: pass iff margin >= 1e-12
STRICT = -1e-12


@dataclass
class CheckRecord:
    name: str
    claim: str
    margin: float
    threshold: float
    samples: int
    info: dict = field(default_factory=dict)

    @property
    def pass_(self) -> bool:
        return bool(self.margin >= -self.threshold)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = self.pass_
        return d


@dataclass
class VerificationReport:
    records: list[CheckRecord] = field(default_factory=list)
    context: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.pass_ for r in self.records)

    def __getitem__(self, name: str) -> CheckRecord:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"pass": self.passed, "context": self.context, "records": [r.to_dict() for r in self.records]}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return float(f"{v:.17g}")
        return "inf" if v > 0 else "-inf" if v < 0 else "nan"
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _classes(sol: TranslatorSolution) -> np.ndarray:
    i, j = sol.grid.nodes
    return sol.grid.node_class[i, j]


def slab_linear_weight(slab, x) -> np.ndarray:
    """``1 - |x| / ((pi/2) sec(theta))``, the weight vanishing on the slab walls."""
    return 1.0 - np.abs(x) / slab.half_width


def check_ordering(sol: TranslatorSolution, u: Optional[np.ndarray] = None) -> CheckRecord:
    """Lower barrier below the solution, solution nonpositive.

    Margin is ``min(min_k(u - u_R + a_k), min(-u))`` with the local
    consistency allowance ``a_k = 10 h^2 max|D^2 u_R(node_k)|``.
    """
    g = sol.grid
    vals = sol.u.values if u is None else np.asarray(u, dtype=float)
    sub = np.asarray(subsolution_value(g.bp, g.node_x, g.node_rho), dtype=float)
    # largest Hessian entry of the subsolution is sec^2(x cos theta) >= 1 >= sech^2
    allow = 10.0 * g.h**2 / np.cos(g.node_x * g.bp.slab.cos) ** 2
    gap = vals - sub
    below = float((gap + allow).min())
    above = float((-vals).min())
    return CheckRecord(
        name="ordering",
        claim="lower barrier lies below the solution and the solution is nonpositive",
        margin=min(below, above),
        threshold=0.0,
        samples=g.n_unknowns,
        info={"min_gap": float(gap.min()), "max_u": float(vals.max()), "max_allowance": float(allow.max())},
    )


def check_height(sol: TranslatorSolution, eps0: Optional[float] = None) -> CheckRecord:
    """``-u(0) - tan(theta/2) R``, strict; informational below ``R_0 = 2(n-1)/eps0``."""
    bp = sol.bp
    slab = bp.slab
    eps0 = epsilon0_estimate(slab) if eps0 is None else eps0
    R0 = 2.0 * (slab.n - 1) / eps0
    margin = -sol.origin_value - math.tan(0.5 * slab.theta) * bp.R
    regime = bp.R > R0
    info = {
        "R": bp.R,
        "epsilon0": eps0,
        "R0": R0,
        "in_regime": regime,
        "height": -sol.origin_value,
        "height_over_R": -sol.origin_value / bp.R,
        "bound_constant": math.tan(0.5 * slab.theta),
    }
    if bp.eps_R < slab.theta:
        info["barrier_bound"] = bp.R * math.tan(0.5 * (slab.theta - bp.eps_R))
    return CheckRecord("height", "height at the origin exceeds tan(theta/2) R", margin, STRICT if regime else math.inf, 1, info)


def boundary_mean_curvature(sol: TranslatorSolution, min_normal: float = 0.5) -> dict:
    """Mean curvature ``1/W`` extrapolated to boundary intercepts with ``x >= 0``.

    Along each cut grid line (E for ``x``, N for ``rho``) the derivative at
    the intercept comes from the quadratic through the two inward nodes and
    the boundary value 0 (linear if only one node).  Since ``u = 0`` on the
    boundary, ``|Du|`` is that derivative divided by the normal component
    along the line; the normal is taken from the closed-form boundary.
    Lines meeting the boundary at a normal component below ``min_normal``
    are skipped.
    """
    g = sol.grid
    slab = g.bp.slab
    arr = sol.u.to_array()
    ins = g.inside
    xs, rs, hb, wsub = [], [], [], []
    for d, (di, dj, step) in ((E, (1, 0, g.hx)), (N, (0, 1, g.hrho))):
        ii, jj = np.nonzero(ins & (g.alpha[d] < 1.0) & (g.x[:, None] >= 0))
        for i, j in zip(ii, jj):
            a = g.alpha[d, i, j] * step
            xb = g.x[i] + (a if d == E else 0.0)
            rb = g.rho[j] + (a if d == N else 0.0)
            u1 = arr[i, j]
            ib, jb = i - di, j - dj
            if jb >= 0 and ins[ib, jb] and g.alpha[d, ib, jb] == 1.0:
                u0 = arr[ib, jb]
                s0, s1 = -(step + a), -a
                der = u0 * (-s1) / ((s0 - s1) * s0) + u1 * (-s0) / ((s1 - s0) * s1)
            else:
                der = -u1 / a
            gx = math.tan(xb * slab.cos) / slab.cos
            gr = slab.tan * math.tanh(rb / slab.tan)
            nrm = math.hypot(gx, gr)
            ne = (gx if d == E else gr) / nrm
            if ne < min_normal:
                continue
            du = abs(der) / ne
            xs.append(xb)
            rs.append(rb)
            hb.append(1.0 / math.sqrt(1.0 + du * du))
            wsub.append(math.sqrt(1.0 + nrm * nrm))
    return {"x": np.array(xs), "rho": np.array(rs), "H": np.array(hb), "W_sub": np.array(wsub)}


def check_boundary_H(sol: TranslatorSolution) -> CheckRecord:
    """``H - cos(theta)(1 - x / ((pi/2) sec theta))`` on the boundary, ``x >= 0``.

    ``H`` is :func:`boundary_mean_curvature`; the record also reports the
    sharper comparison with the subsolution's ``1/W``.
    """
    g = sol.grid
    bh = boundary_mean_curvature(sol)
    if len(bh["H"]) == 0:
        return CheckRecord("boundary_H", "mean curvature bound on the boundary", -math.inf, 0.0, 0)
    bound = g.bp.slab.cos * slab_linear_weight(g.bp.slab, bh["x"])
    m = bh["H"] - bound
    k = int(np.argmin(m))
    return CheckRecord(
        "boundary_H",
        "H >= cos(theta)(1 - x/((pi/2)sec theta)) on the boundary",
        float(m[k]),
        0.0,
        int(len(m)),
        {
            "worst_x": float(bh["x"][k]),
            "worst_rho": float(bh["rho"][k]),
            "min_H_minus_subsolution_H": float((bh["H"] - 1.0 / bh["W_sub"]).min()),
            "approximate": True,
        },
    )


def check_H_over_v(sol: TranslatorSolution, H: Optional[np.ndarray] = None) -> CheckRecord:
    """Strictly positive infimum of geometric ``H / v`` over full-stencil nodes with ``x > 0``."""
    g = sol.grid
    gf = sol.diagnostics
    Hf = gf.H if H is None else np.asarray(H, dtype=float)
    sel = gf.valid & (g.node_x > 0)
    if not sel.any():
        return CheckRecord("H_over_v", "inf of H/v over x > 0 is positive", -math.inf, STRICT, 0)
    ratio = Hf[sel] / slab_linear_weight(g.bp.slab, g.node_x[sel])
    col = gf.valid & (np.abs(g.node_x) == 0)
    return CheckRecord(
        "H_over_v",
        "inf of H/v over x > 0 is positive",
        float(ratio.min()),
        STRICT,
        int(sel.sum()),
        {"min_H_at_x0": float(Hf[col].min()) if col.any() else math.nan, "cos_theta": g.bp.slab.cos},
    )


def second_order_mask(grid: MaskedGrid) -> np.ndarray:
    """Unknowns whose 3x3 stencil holds only uncut (interior or axis) nodes."""
    if "second_order" not in grid._cache:
        ok = grid.inside & (grid.node_class != NodeClass.BOUNDARY_ADJACENT)
        pad = np.zeros((grid.nx + 2, grid.nrho + 2), dtype=bool)
        pad[1:-1, 1:-1] = ok
        pad[1:-1, 0] = ok[:, 1]
        out = ok.copy()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                out &= pad[1 + di : grid.nx + 1 + di, 1 + dj : grid.nrho + 1 + dj]
        grid._cache["second_order"] = out[grid.nodes]
    return grid._cache["second_order"]


def check_convexity(sol: TranslatorSolution, threshold: float = 1e-3) -> CheckRecord:
    """Min of ``eigmin(D^2 u)`` (and ``u_rho / rho`` when n > 2) over interior nodes.

    Interior means the Hessian stencil avoids cut-cell nodes, whose
    equations are only first-order consistent.
    """
    gf = sol.diagnostics
    sel = second_order_mask(sol.grid)
    conv = gf.convexity[sel]
    k = int(np.argmin(conv))
    return CheckRecord(
        "convexity",
        "graph is convex",
        float(conv[k]),
        threshold,
        int(sel.sum()),
        {"worst_x": float(sol.grid.node_x[sel][k]), "worst_rho": float(sol.grid.node_rho[sel][k])},
    )


def check_reflection_symmetry(sol: TranslatorSolution, threshold: float = 1e-10) -> CheckRecord:
    """``-max |u(x, rho) - u(-x, rho)|``; an unmatched mirror node gives ``-inf``."""
    g = sol.grid
    i, j = g.nodes
    mirror = g.index[g.nx - 1 - i, j]
    if np.any(mirror < 0):
        margin = -math.inf
    else:
        margin = -float(np.abs(sol.u.values - sol.u.values[mirror]).max())
    return CheckRecord("reflection_symmetry", "solution is even in x", margin, threshold, g.n_unknowns)


def check_jacobi(sol: TranslatorSolution, region: Optional[tuple[float, float]] = None) -> CheckRecord:
    """Max Jacobi-identity defect on full two-ring nodes, informational.

    ``region = (xfrac, rhofrac)`` restricts to ``|x| <= xfrac * x_max`` and
    ``rho <= rhofrac * R``.
    """
    vals, ok = jacobi_identity_values(sol.u)
    g = sol.grid
    if region is not None:
        ok = ok & (np.abs(g.node_x) <= region[0] * g.x_max) & (g.node_rho <= region[1] * g.bp.R)
    m = float(np.abs(vals[ok]).max()) if ok.any() else math.nan
    return CheckRecord("jacobi_identity", "Jacobi identity for H (discretisation defect)", -m, math.inf, int(ok.sum()), {"max_abs": m})


# ------------------------------------------------------------ axis column


def axis_slope_profile(sol: TranslatorSolution) -> tuple[np.ndarray, np.ndarray]:
    """``(rho, u_rho)`` along the ``x = 0`` column, ending at the boundary.

    Nodal slopes are the cut-cell gradients; the boundary slope comes from
    the quadratic through the last two nodes and the boundary value 0.
    """
    g = sol.grid
    c = g.center
    js = np.nonzero(g.inside[c])[0]
    ks = g.index[c, js]
    rho = g.rho[js]
    slope = sol.diagnostics.ur[ks].copy()
    slope[0] = 0.0
    rb = outer_boundary_rho(g.bp, 0.0)
    r1, r2 = rho[-2], rho[-1]
    u1, u2 = sol.u.values[ks[-2]], sol.u.values[ks[-1]]
    # Lagrange quadratic through (r1,u1), (r2,u2), (rb,0); derivative at rb
    bslope = u1 * (rb - r2) / ((r1 - r2) * (r1 - rb)) + u2 * (rb - r1) / ((r2 - r1) * (r2 - rb))
    return np.append(rho, rb), np.append(slope, bslope)


def max_axis_tilt(sol: TranslatorSolution) -> float:
    """``arctan`` of the largest slope on the ``x = 0`` column."""
    return float(np.arctan(axis_slope_profile(sol)[1].max()))


class OmegaOutOfRange(ValueError):
    code = "OMEGA_OUT_OF_RANGE"


def tip_find(sol: TranslatorSolution, omega: float) -> PointXRho:
    """Point on the ``x = 0`` column where the normal has tilt ``omega``.

    Raises:
        OmegaOutOfRange: ``tan(omega)`` above the largest column slope, or
            ``omega`` outside ``[0, theta)``.
    """
    theta = sol.bp.slab.theta
    if not 0.0 <= omega < theta:
        raise OmegaOutOfRange(f"omega={omega} outside [0, theta={theta})")
    rho, s = axis_slope_profile(sol)
    target = math.tan(omega)
    if omega == 0.0:
        return PointXRho(0.0, 0.0)
    if target > s.max():
        raise OmegaOutOfRange(f"tan(omega)={target:.6g} exceeds the largest column slope {s.max():.6g}")
    k = int(np.argmax(s >= target))
    s0, s1 = s[k - 1], s[k]
    t = (target - s0) / (s1 - s0) if s1 > s0 else 0.0
    return PointXRho(0.0, float(rho[k - 1] + t * (rho[k] - rho[k - 1])))


@dataclass
class GrimFit:
    omega: float
    tip: PointXRho
    tip_height: float
    error: float
    clipped: bool
    samples: int


def _window_spline(sol: TranslatorSolution, x_hi: float, r_lo: float, r_hi: float) -> Optional[RectBivariateSpline]:
    """Bicubic spline of ``u`` on the smallest node rectangle covering the window.

    Uses the even extension across the axis; ``None`` if the rectangle is
    not entirely made of domain nodes.
    """
    g = sol.grid
    c = g.center
    ki = int(math.ceil(x_hi / g.hx - 1e-12)) + 2
    j0 = int(math.floor(r_lo / g.hrho + 1e-12)) - 2
    j1 = int(math.ceil(r_hi / g.hrho - 1e-12)) + 2
    if c + ki >= g.nx or j1 >= g.nrho:
        return None
    arr = sol.u.to_array()
    cols = np.arange(c - ki, c + ki + 1)
    rows = np.arange(j0, j1 + 1)
    block = arr[np.ix_(cols, np.abs(rows))]
    if not np.all(np.isfinite(block)):
        return None
    return RectBivariateSpline(g.x[cols], np.sign(rows) * g.rho[np.abs(rows)], block, kx=3, ky=3)


def grim_fit(sol: TranslatorSolution, omega: float, window_halfwidth: float, samples: Optional[int] = 41) -> GrimFit:
    """Sup-norm distance to the tilt-``omega`` oblique Grim plane through the tip.

    The difference is sampled on a fixed ``samples x samples`` lattice of
    ``{|x| <= w, |rho - rho*| <= w}`` through a bicubic spline of the
    solution, so the measurement does not depend on which nodes happen to
    fall in the window.  The window is clipped to ``rho >= 0``, to the
    domain, and to the Grim plane's slab; ``clipped`` reports that.

    ``samples=None`` compares at the grid nodes inside the window instead,
    with the tip height interpolated along the ``x = 0`` column.
    """
    tip = tip_find(sol, omega)
    w = float(window_halfwidth)
    if w <= 0:
        return GrimFit(omega, tip, interpolate(sol.u, tip), 0.0, False, 0)
    g = sol.grid
    half = 0.5 * math.pi / math.cos(omega)
    xw = w
    clipped = False
    if xw >= half:
        xw = half * (1 - 1e-6)
        clipped = True
    r_lo, r_hi = tip.rho - w, tip.rho + w
    if r_lo < 0:
        r_lo, clipped = 0.0, True
    if samples is None:
        return _grim_fit_nodes(sol, omega, tip, xw, r_lo, r_hi, clipped)
    # shrink until the covering rectangle lies in the domain
    spline = _window_spline(sol, xw, r_lo, r_hi)
    while spline is None and xw > g.h:
        clipped = True
        xw *= 0.9
        r_hi = tip.rho + min(w, max(xw, r_hi - tip.rho) * 0.9)
        spline = _window_spline(sol, xw, r_lo, r_hi)
    if spline is None:
        raise GridError("window around the tip does not fit in the grid")
    u_tip = float(spline(0.0, tip.rho)[0, 0])
    xs = np.linspace(-xw, xw, samples)
    rs = np.linspace(r_lo, r_hi, samples)
    U = spline(xs, rs)
    X, Rr = np.meshgrid(xs, rs, indexing="ij")
    grim = _grim_plane(g.bp.slab.n, omega, X, Rr - tip.rho)
    err = float(np.abs(U - u_tip - grim).max())
    return GrimFit(omega, tip, u_tip, err, clipped, samples * samples)


def _grim_plane(slab_n: int, omega: float, x, yphi):
    from .closed_forms import SlabParams

    if omega > 0:
        return oblique_grim_height(SlabParams(slab_n, omega), x, yphi)
    return -np.log(np.cos(x))


def _grim_fit_nodes(sol, omega, tip, xw, r_lo, r_hi, clipped) -> GrimFit:
    g = sol.grid
    half = 0.5 * math.pi / math.cos(omega)
    x, r = g.node_x, g.node_rho
    sel = (np.abs(x) <= xw) & (r >= r_lo) & (r <= r_hi) & (np.abs(x) < half)
    u_tip = interpolate(sol.u, tip)
    if not sel.any():
        return GrimFit(omega, tip, u_tip, 0.0, clipped, 0)
    d = sol.u.values[sel] - u_tip - _grim_plane(g.bp.slab.n, omega, x[sel], r[sel] - tip.rho)
    return GrimFit(omega, tip, u_tip, float(np.abs(d).max()), clipped, int(sel.sum()))


def grim_fit_error(sol: TranslatorSolution, omega: float, window_halfwidth: float) -> float:
    return grim_fit(sol, omega, window_halfwidth).error


# ------------------------------------------------------------ level sets


@dataclass
class WidthReport:
    h: float
    ell: float
    x0: float
    chord_margin: Optional[float]
    K: float
    rho: np.ndarray
    x_plus: np.ndarray
    x_minus: np.ndarray
    max_extent: float

    def to_csv(self) -> str:
        lines = ["rho,x_plus,x_minus,h"]
        for r, a, b in zip(self.rho, self.x_plus, self.x_minus):
            lines.append(f"{r:.17g},{a:.17g},{b:.17g},{self.h:.17g}")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "ell": self.ell,
            "x0": self.x0,
            "chord_margin": self.chord_margin,
            "K": self.K,
            "max_extent": self.max_extent,
            "samples": int(len(self.rho)),
        }


def _crossing(pos: np.ndarray, val: np.ndarray, level: float) -> Optional[float]:
    """First position where piecewise-linear ``val`` reaches ``level`` (val increasing from pos[0])."""
    above = np.nonzero(val >= level)[0]
    if len(above) == 0:
        return None
    k = int(above[0])
    if k == 0:
        return float(pos[0])
    t = (level - val[k - 1]) / (val[k] - val[k - 1])
    return float(pos[k - 1] + t * (pos[k] - pos[k - 1]))


def level_set_profile(sol: TranslatorSolution, h: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(rho_j, x_plus, x_minus)`` of ``{u - u(0) = h}`` along grid rows.

    Each row is scanned outward from ``x = 0`` with the boundary intercept
    (normalized value ``-u(0)``) closing the row.
    """
    g = sol.grid
    arr = sol.normalized_u.to_array()
    top = -sol.origin_value
    c = g.center
    rows, xp, xm = [], [], []
    for j in range(g.nrho):
        if not g.inside[c, j]:
            break
        for sign, out in ((1, xp), (-1, xm)):
            ii = np.arange(c, g.nx) if sign > 0 else np.arange(c, -1, -1)
            ins = g.inside[ii, j]
            last = int(np.argmin(ins)) if not ins.all() else len(ii)
            ii = ii[:last]
            pos = np.abs(g.x[ii])
            val = arr[ii, j]
            d = g.alpha[0 if sign > 0 else 1, ii[-1], j]
            pos = np.append(pos, pos[-1] + d * g.hx)
            val = np.append(val, top)
            out.append(_crossing(pos, val, h))
        if xp[-1] is None or xm[-1] is None:
            xp.pop()
            xm.pop()
            break
        rows.append(g.rho[j])
    return np.array(rows), np.array(xp, dtype=float), -np.array(xm, dtype=float)


def level_set_width(sol: TranslatorSolution, h: float, K: Optional[float] = None, min_samples: int = 10) -> WidthReport:
    """Level-set radius ``ell(h)`` and the convex-chord margin of its ``x``-profile.

    ``ell`` is read off the ``x = 0`` column.  The chord test compares, for
    ``s`` in 0.1..0.9, ``x`` at ``rho = s (ell - K)`` with the chord between
    ``rho = 0`` and ``rho = ell - K``, on both sides; ``K`` defaults to
    ``20 max(hx, hrho)``.

    Raises:
        ValueError: ``h`` outside ``(0, -u(0))`` or empty level set.
    """
    top = -sol.origin_value
    if not 0.0 < h < top:
        raise ValueError(f"level h={h} outside (0, {top})")
    g = sol.grid
    K = 20.0 * g.h if K is None else float(K)
    c = g.center
    js = np.nonzero(g.inside[c])[0]
    arr = sol.normalized_u.to_array()
    pos = np.append(g.rho[js], outer_boundary_rho(g.bp, 0.0))
    val = np.append(arr[c, js], top)
    ell = _crossing(pos, val, h)
    if ell is None or ell <= 0:
        raise ValueError(f"level set at h={h} is empty")
    rho, xp, xm = level_set_profile(sol, h)
    if len(rho) == 0:
        raise ValueError(f"level set at h={h} is empty")
    chord = None
    r1 = ell - K
    n_in = int(np.sum(rho <= r1)) if r1 > 0 else 0
    if n_in >= min_samples:
        worst = math.inf
        for prof in (xp, -xm):
            x0v = prof[0]
            x1v = float(np.interp(r1, rho, prof))
            for s in np.arange(1, 10) / 10.0:
                xs = float(np.interp(s * r1, rho, prof))
                worst = min(worst, xs - (s * x1v + (1 - s) * x0v))
        chord = worst
    return WidthReport(
        h=float(h),
        ell=float(ell),
        x0=0.0,
        chord_margin=chord,
        K=K,
        rho=rho,
        x_plus=xp,
        x_minus=xm,
        max_extent=float(max(xp.max(), (-xm).max())),
    )


def verify(sol: TranslatorSolution, eps0: Optional[float] = None, convexity_threshold: float = 1e-3) -> VerificationReport:
    """All pointwise checks on one solution."""
    recs = [
        check_ordering(sol),
        check_height(sol, eps0),
        check_boundary_H(sol),
        check_H_over_v(sol),
        check_convexity(sol, convexity_threshold),
        check_reflection_symmetry(sol),
    ]
    ctx = {
        "bp": sol.bp.to_dict(),
        "nx": sol.grid.nx,
        "nrho": sol.grid.nrho,
        "residual_norm": sol.residual_norm,
        "newton_iters": sol.newton_iters,
        "max_axis_tilt": max_axis_tilt(sol),
    }
    return VerificationReport(recs, ctx)
