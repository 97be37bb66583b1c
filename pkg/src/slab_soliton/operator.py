"""
Discrete graphical translator operator and graph geometry on a masked grid.

Every difference quotient used here (edge slopes, nodal Shortley-Weller
gradients, averaged tangential slopes) is an affine map ``q = M u + c`` of the
vector of unknowns, where ``c`` collects Dirichlet data.  The residual is a
pointwise nonlinear function of a handful of such quantities, so its exact
Jacobian is ``sum_k diag(dF/dq_k) M_k``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .grid import E, N, S, W, GridError, MaskedGrid, NodeClass, ScalarField

__all__ = [
    "Affine",
    "StencilOperators",
    "GeometryJet",
    "GeometryField",
    "stencil_operators",
    "translator_residual",
    "translator_residual_values",
    "jacobian",
    "residual_and_jacobian",
    "geometry_field",
    "geometry_at",
    "laplace_beltrami",
    "laplace_beltrami_values",
    "jacobi_identity_values",
    "jacobi_identity_residual",
]

BoundaryFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Affine:
    """Affine map ``u -> M @ u + c`` on the unknown vector."""

    M: sp.csr_matrix
    c: np.ndarray

    def __call__(self, u: np.ndarray) -> np.ndarray:
        return self.M @ u + self.c

    def __add__(self, other: "Affine") -> "Affine":
        return Affine((self.M + other.M).tocsr(), self.c + other.c)

    def __sub__(self, other: "Affine") -> "Affine":
        return Affine((self.M - other.M).tocsr(), self.c - other.c)

    def scale(self, s: np.ndarray | float) -> "Affine":
        s = np.broadcast_to(np.asarray(s, dtype=float), self.c.shape)
        return Affine(sp.diags(s) @ self.M, s * self.c)

    def left(self, A: sp.spmatrix) -> "Affine":
        return Affine((A @ self.M).tocsr(), A @ self.c)


@dataclass(frozen=True)
class StencilOperators:
    """Affine difference quotients of a grid for given Dirichlet data."""

    grid: MaskedGrid
    slope: dict  # direction -> one-sided slope toward that neighbour (E, N: forward; W, S: backward)
    tangential: dict  # direction -> averaged cross-slope at that half edge
    gx: Affine
    gr: Affine
    dxx: Affine
    drr: Affine
    dxr: Affine
    mx: np.ndarray  # x control-volume width
    mr: np.ndarray  # rho control-volume width
    axis: np.ndarray  # bool per unknown
    rho: np.ndarray


def _neighbour_tables(grid: MaskedGrid):
    """Neighbour unknown index (or -1) and step length per direction."""
    i, j = grid.nodes
    nx, nr = grid.nx, grid.nrho
    idx = grid.index
    out_idx = {}
    out_h = {}
    for d, (di, dj, h) in {E: (1, 0, grid.hx), W: (-1, 0, grid.hx), N: (0, 1, grid.hrho), S: (0, -1, grid.hrho)}.items():
        ii = i + di
        jj = j + dj
        if d == S:
            jj = np.where(j == 0, 1, jj)  # ghost row mirrors rho = h
        ok = (ii >= 0) & (ii < nx) & (jj >= 0) & (jj < nr)
        nb = np.full(i.shape, -1, dtype=np.int64)
        nb[ok] = idx[ii[ok], jj[ok]]
        a = grid.alpha[d, i, j]
        nb = np.where(a < 1.0, -1, nb)
        out_idx[d] = nb
        out_h[d] = a * h
    return out_idx, out_h


def _bc_values(grid: MaskedGrid, psi: Optional[BoundaryFn], h: dict) -> dict:
    i, j = grid.nodes
    x = grid.x[i]
    r = grid.rho[j]
    vals = {}
    for d in (E, W, N, S):
        if psi is None:
            vals[d] = np.zeros(i.shape)
            continue
        px = x + (h[d] if d == E else -h[d] if d == W else 0.0)
        pr = r + (h[d] if d == N else 0.0)
        if d == S:
            pr = np.where(j == 0, r + h[d], r - h[d])
        vals[d] = np.asarray(psi(px, pr), dtype=float) * np.ones(i.shape)
    return vals


def stencil_operators(grid: MaskedGrid, psi: Optional[BoundaryFn] = None) -> StencilOperators:
    """Assemble (and cache for ``psi=None``) the affine stencils of ``grid``."""
    if psi is None and "ops" in grid._cache:
        return grid._cache["ops"]
    n = grid.n_unknowns
    rows = np.arange(n)
    nb, h = _neighbour_tables(grid)
    bc = _bc_values(grid, psi, h)

    def value(d):
        """Affine map giving the neighbour value in direction d."""
        m = nb[d] >= 0
        M = sp.csr_matrix((np.ones(m.sum()), (rows[m], nb[d][m])), shape=(n, n))
        return Affine(M, np.where(m, 0.0, bc[d]))

    ident = Affine(sp.identity(n, format="csr"), np.zeros(n))
    vE, vW, vN, vS = value(E), value(W), value(N), value(S)
    hE, hW, hN, hS = h[E], h[W], h[N], h[S]

    slope = {
        E: (vE - ident).scale(1.0 / hE),
        W: (ident - vW).scale(1.0 / hW),
        N: (vN - ident).scale(1.0 / hN),
        S: (ident - vS).scale(1.0 / hS),
    }
    # three-point nonuniform first derivative
    gx = slope[E].scale(hW / (hE + hW)) + slope[W].scale(hE / (hE + hW))
    gr = slope[N].scale(hS / (hN + hS)) + slope[S].scale(hN / (hN + hS))
    mx = 0.5 * (hE + hW)
    mr = 0.5 * (hN + hS)
    dxx = (slope[E] - slope[W]).scale(1.0 / mx)
    drr = (slope[N] - slope[S]).scale(1.0 / mr)

    def average_with(d, g: Affine) -> Affine:
        """Cross-slope at the half edge: mean of the two nodal values when
        the neighbour is a full-step domain node, else the node's own."""
        m = nb[d] >= 0
        vals = np.where(m, 0.5, 1.0)
        A = sp.csr_matrix(
            (np.concatenate([vals, np.full(m.sum(), 0.5)]), (np.concatenate([rows, rows[m]]), np.concatenate([rows, nb[d][m]]))),
            shape=(n, n),
        )
        return g.left(A)

    tangential = {E: average_with(E, gr), W: average_with(W, gr), N: average_with(N, gx), S: average_with(S, gx)}

    # mixed derivative: difference of nodal x-slopes across the rho neighbours
    mN = nb[N] >= 0
    mS = nb[S] >= 0
    axis = grid.nodes[1] == 0
    both = mN & mS & ~axis
    wN = np.where(both, 1.0 / (hN + hS), np.where(mN & ~axis, 1.0 / hN, 0.0))
    wS = np.where(both, 1.0 / (hN + hS), np.where(mS & ~axis & ~mN, 1.0 / hS, 0.0))
    wP = np.where(both | axis, 0.0, np.where(mN, -1.0 / hN, np.where(mS, 1.0 / hS, 0.0)))
    cols = [rows, nb[N][mN], nb[S][mS]]
    data = [wP, wN[mN], -wS[mS]]
    A = sp.csr_matrix((np.concatenate(data), (np.concatenate([rows, rows[mN], rows[mS]]), np.concatenate(cols))), shape=(n, n))
    dxr = gx.left(A)

    ops = StencilOperators(
        grid=grid,
        slope=slope,
        tangential=tangential,
        gx=gx,
        gr=gr,
        dxx=dxx,
        drr=drr,
        dxr=dxr,
        mx=mx,
        mr=mr,
        axis=axis,
        rho=grid.rho[grid.nodes[1]],
    )
    if psi is None:
        grid._cache["ops"] = ops
    return ops


def _flux_and_partials(a: np.ndarray, b: np.ndarray):
    w2 = 1.0 + a * a + b * b
    w = np.sqrt(w2)
    w3 = w2 * w
    return a / w, (1.0 + b * b) / w3, -a * b / w3


def _evaluate(ops: StencilOperators, u: np.ndarray, want_jac: bool):
    n_dim = ops.grid.bp.slab.n
    axis = ops.axis
    rho_safe = np.where(axis, 1.0, ops.rho)
    rot = np.where(axis, 0.0, n_dim - 2.0)
    # axis: div in rho absorbs the (n-2) rotational directions
    rfac = np.where(axis, n_dim - 1.0, 1.0)

    F = np.zeros_like(u)
    terms = []
    for d, sign, m, fac in ((E, 1.0, ops.mx, 1.0), (W, -1.0, ops.mx, 1.0), (N, 1.0, ops.mr, rfac), (S, -1.0, ops.mr, rfac)):
        a = ops.slope[d](u)
        b = ops.tangential[d](u)
        f, fa, fb = _flux_and_partials(a, b)
        c = sign * fac / m
        F += c * f
        if want_jac:
            terms.append((c * fa, ops.slope[d]))
            terms.append((c * fb, ops.tangential[d]))
    gx = ops.gx(u)
    gr = ops.gr(u)
    w2 = 1.0 + gx * gx + gr * gr
    w = np.sqrt(w2)
    w3 = w2 * w
    F += rot * gr / (rho_safe * w) - 1.0 / w
    if want_jac:
        terms.append((rot * (1.0 + gx * gx) / (rho_safe * w3) + gr / w3, ops.gr))
        terms.append((-rot * gr * gx / (rho_safe * w3) + gx / w3, ops.gx))
        J = None
        for coef, aff in terms:
            part = sp.diags(coef) @ aff.M
            J = part if J is None else J + part
        return F, J.tocsr()
    return F, None


def translator_residual_values(grid: MaskedGrid, u: np.ndarray, psi: Optional[BoundaryFn] = None) -> np.ndarray:
    return _evaluate(stencil_operators(grid, psi), u, False)[0]


def translator_residual(fld: ScalarField, psi: Optional[BoundaryFn] = None) -> ScalarField:
    """Flux-form residual ``div(Du/W) + (n-2) u_rho/(rho W) - 1/W`` at every unknown.

    ``psi`` gives Dirichlet values on the boundary (default zero).
    """
    return ScalarField(fld.grid, translator_residual_values(fld.grid, fld.values, psi))


def residual_and_jacobian(grid: MaskedGrid, u: np.ndarray, psi: Optional[BoundaryFn] = None):
    return _evaluate(stencil_operators(grid, psi), u, True)


def jacobian(fld: ScalarField, psi: Optional[BoundaryFn] = None) -> sp.csr_matrix:
    """Exact derivative of :func:`translator_residual` with respect to the unknowns."""
    return residual_and_jacobian(fld.grid, fld.values, psi)[1]


# ---------------------------------------------------------------- geometry


@dataclass(frozen=True)
class GeometryJet:
    W: float
    normal: tuple[float, float, float]
    H: float
    hess: tuple[float, float, float]
    kappa_min: float
    kappa_max: float
    kappa_rot: float

    @property
    def convexity(self) -> float:
        """Smallest eigenvalue of the reduced Hessian ``D^2 u``."""
        xx, xr, rr = self.hess
        return 0.5 * (xx + rr) - math.hypot(0.5 * (xx - rr), xr)


@dataclass(frozen=True)
class GeometryField:
    """Node-wise graph geometry (arrays in unknown order)."""

    grid: MaskedGrid
    ux: np.ndarray
    ur: np.ndarray
    uxx: np.ndarray
    uxr: np.ndarray
    urr: np.ndarray
    W: np.ndarray
    H: np.ndarray
    kappa_min: np.ndarray
    kappa_max: np.ndarray
    kappa_rot: np.ndarray
    eigmin_hess: np.ndarray
    valid: np.ndarray  # full 3x3 stencil

    @property
    def normal(self) -> np.ndarray:
        return np.stack([self.ux / self.W, self.ur / self.W, -1.0 / self.W], axis=1)

    @property
    def A2(self) -> np.ndarray:
        n = self.grid.bp.slab.n
        return self.kappa_min**2 + self.kappa_max**2 + (n - 2) * self.kappa_rot**2

    @property
    def convexity(self) -> np.ndarray:
        if self.grid.bp.slab.n > 2:
            return np.minimum(self.eigmin_hess, self.kappa_rot * self.W)
        return self.eigmin_hess.copy()


def _geometry_from_derivs(grid, ux, ur, uxx, uxr, urr, axis, rho):
    n = grid.bp.slab.n
    w2 = 1.0 + ux * ux + ur * ur
    w = np.sqrt(w2)
    # shape operator (1/W)(I - Du Du^T / W^2) D^2u
    s11 = (uxx - ux * (ux * uxx + ur * uxr) / w2) / w
    s12 = (uxr - ux * (ux * uxr + ur * urr) / w2) / w
    s21 = (uxr - ur * (ux * uxx + ur * uxr) / w2) / w
    s22 = (urr - ur * (ux * uxr + ur * urr) / w2) / w
    tr = s11 + s22
    det = s11 * s22 - s12 * s21
    disc = np.sqrt(np.maximum(0.25 * tr * tr - det, 0.0))
    kmin = 0.5 * tr - disc
    kmax = 0.5 * tr + disc
    krot = np.where(axis, urr / w, ur / (np.where(axis, 1.0, rho) * w))
    H = tr + (n - 2) * krot
    eig = 0.5 * (uxx + urr) - np.hypot(0.5 * (uxx - urr), uxr)
    return w, H, kmin, kmax, krot, eig


def geometry_field(fld: ScalarField, psi: Optional[BoundaryFn] = None) -> GeometryField:
    """Central-difference graph geometry at every unknown.

    Values at nodes without a full 3x3 stencil use one-sided cut-cell
    formulas and are flagged invalid.
    """
    g = fld.grid
    ops = stencil_operators(g, psi)
    u = fld.values
    ux, ur = ops.gx(u), ops.gr(u)
    uxx, urr, uxr = ops.dxx(u), ops.drr(u), ops.dxr(u)
    w, H, kmin, kmax, krot, eig = _geometry_from_derivs(g, ux, ur, uxx, uxr, urr, ops.axis, ops.rho)
    i, j = g.nodes
    return GeometryField(g, ux, ur, uxx, uxr, urr, w, H, kmin, kmax, krot, eig, g.full_stencil_mask()[i, j])


def geometry_at(fld: ScalarField, node: tuple[int, int]) -> GeometryJet:
    """Geometry at grid node ``(i, j)``; requires a full 3x3 stencil."""
    g = fld.grid
    i, j = node
    if not (0 <= i < g.nx and 0 <= j < g.nrho) or not g.full_stencil_mask()[i, j]:
        raise GridError(f"node {node} has a degenerate stencil")
    k = int(g.index[i, j])
    gf = geometry_field(fld)
    return GeometryJet(
        W=float(gf.W[k]),
        normal=tuple(float(v) for v in gf.normal[k]),
        H=float(gf.H[k]),
        hess=(float(gf.uxx[k]), float(gf.uxr[k]), float(gf.urr[k])),
        kappa_min=float(gf.kappa_min[k]),
        kappa_max=float(gf.kappa_max[k]),
        kappa_rot=float(gf.kappa_rot[k]),
    )


def laplace_beltrami_values(u_fld: ScalarField, f: np.ndarray, psi: Optional[BoundaryFn] = None) -> tuple[np.ndarray, np.ndarray]:
    """Divergence-form ``Delta_g f`` and its validity mask (full 3x3 stencil).

    Edge fluxes ``Q = W g^{-1} Df`` use edge slopes of ``u`` and ``f`` along the
    edge and nodal-average cross slopes; the rotational directions add
    ``(n-2) Q_rho / rho`` (axis: ``(n-1) d_rho Q_rho``).
    """
    g = u_fld.grid
    ops = stencil_operators(g, psi)
    zero_ops = stencil_operators(g)  # f has no boundary data; used only where stencil is full
    u = u_fld.values
    n = g.bp.slab.n
    axis = ops.axis
    rfac = np.where(axis, n - 1.0, 1.0)

    def edge_flux(d, normal_dir):
        a = ops.slope[d](u)
        b = ops.tangential[d](u)
        fa = zero_ops.slope[d](f)
        fb = zero_ops.tangential[d](f)
        w2 = 1.0 + a * a + b * b
        # W g^{-1} = W (I - Du Du^T / W^2), take the component along the edge
        return np.sqrt(w2) * (fa - a * (a * fa + b * fb) / w2)

    div = (edge_flux(E, 0) - edge_flux(W, 0)) / ops.mx + rfac * (edge_flux(N, 1) - edge_flux(S, 1)) / ops.mr
    ux, ur = ops.gx(u), ops.gr(u)
    fx, fr = zero_ops.gx(f), zero_ops.gr(f)
    w2 = 1.0 + ux * ux + ur * ur
    w = np.sqrt(w2)
    q_r = w * (fr - ur * (ux * fx + ur * fr) / w2)
    rot = np.where(axis, 0.0, (n - 2.0) * q_r / np.where(axis, 1.0, ops.rho))
    i, j = g.nodes
    return (div + rot) / w, g.full_stencil_mask()[i, j]


def laplace_beltrami(field_u: ScalarField, field_f: ScalarField) -> ScalarField:
    """Laplace-Beltrami operator of the graph metric applied to ``field_f``.

    Entries at nodes without a full stencil are set to 0; use
    :func:`laplace_beltrami_values` for the validity mask.
    """
    if field_u.grid is not field_f.grid:
        raise ValueError("fields live on different grids")
    vals, ok = laplace_beltrami_values(field_u, field_f.values)
    return ScalarField(field_u.grid, np.where(ok, vals, 0.0))


def jacobi_identity_values(field_u: ScalarField, psi: Optional[BoundaryFn] = None) -> tuple[np.ndarray, np.ndarray]:
    """``-(Delta_g H + <V, grad H>) - |A|^2 H`` and its validity mask.

    ``H`` is the trace of the discrete shape operator; ``<V, grad H> =
    <Du, DH>/W^2`` for ``V`` the tangential part of the vertical unit vector.
    The mask keeps nodes whose 3x3 neighbours all have full stencils.
    """
    g = field_u.grid
    gf = geometry_field(field_u, psi)
    Hf = gf.H
    lb, ok = laplace_beltrami_values(field_u, Hf, psi)
    zero_ops = stencil_operators(g)
    hx, hr = zero_ops.gx(Hf), zero_ops.gr(Hf)
    vdot = (gf.ux * hx + gf.ur * hr) / gf.W**2
    res = -(lb + vdot) - gf.A2 * Hf
    full = g.full_stencil_mask()
    pad = np.zeros((g.nx + 2, g.nrho + 2), dtype=bool)
    pad[1:-1, 1:-1] = full
    pad[1:-1, 0] = full[:, 1]
    ok2 = full.copy()
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ok2 &= pad[1 + di : g.nx + 1 + di, 1 + dj : g.nrho + 1 + dj]
    i, j = g.nodes
    return res, ok2[i, j]


def jacobi_identity_residual(field_u: ScalarField) -> ScalarField:
    """Jacobi-identity defect of ``H``; zero at nodes lacking a two-ring stencil."""
    vals, ok = jacobi_identity_values(field_u)
    return ScalarField(field_u.grid, np.where(ok, vals, 0.0))
