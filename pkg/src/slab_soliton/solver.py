"""
Dirichlet solver for the graphical translator equation on the outer domain.

Pseudo-transient startup (explicit relaxation toward the flow limit) followed
by damped Newton with backtracking on the residual 2-norm.  Continuation in
``R`` seeds each solve with the previous normalized solution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .closed_forms import BarrierParams, PointXRho, SlabParams, subsolution_value
from .grid import E, W, GridError, MaskedGrid, ScalarField, build_grid, interpolate
from .operator import GeometryField, geometry_field, residual_and_jacobian, stencil_operators, translator_residual_values

__all__ = [
    "SolverConfig",
    "TranslatorSolution",
    "SolverError",
    "NonConverged",
    "LinearSolveFailure",
    "linear_solve",
    "solve",
    "continuation_sweep",
    "Resolution",
    "interpolate_init",
    "solution_from_values",
]

log = logging.getLogger("slab_soliton.solver")


@dataclass(frozen=True)
class SolverConfig:
    """Solver knobs; ``ptc_tau=None`` means ``0.25 * min(hx, hrho)**2``."""

    newton_tol: float = 1e-8
    max_newton: int = 60
    damping: float = 0.5
    min_step: float = 2.0**-20
    ptc_steps: int = 200
    ptc_tau: Optional[float] = None
    linear_tol: float = 1e-10

    def __post_init__(self) -> None:
        if not self.newton_tol >= 1e2 * np.finfo(float).eps:
            raise ValueError("newton_tol must be at least 100 machine epsilons")
        for name in ("max_newton", "damping", "min_step", "linear_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.ptc_steps < 0:
            raise ValueError("ptc_steps must be nonnegative")
        if self.ptc_tau is not None and not self.ptc_tau > 0:
            raise ValueError("ptc_tau must be positive")
        if not self.damping < 1:
            raise ValueError("damping must be below 1")

    def to_dict(self) -> dict:
        return asdict(self)


class SolverError(RuntimeError):
    """Base class; ``last`` holds the last iterate as a ScalarField."""

    code = "SOLVER_ERROR"

    def __init__(self, msg: str, last: Optional[ScalarField] = None, history: Optional[list] = None):
        super().__init__(msg)
        self.last = last
        self.history = history or []


class NonConverged(SolverError):
    code = "NONCONVERGED"


class LinearSolveFailure(SolverError):
    code = "LINEAR_SOLVE_FAILURE"

    def __init__(self, msg: str, condition_estimate: float = math.inf, **kw):
        super().__init__(msg, **kw)
        self.condition_estimate = condition_estimate


def linear_solve(A: sp.spmatrix, b: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Sparse LU solve with a relative-residual check.

    Raises:
        LinearSolveFailure: singular factorization, non-finite result, or
            relative residual above ``rtol`` after one refinement step.
    """
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    bn = np.linalg.norm(b)
    if bn == 0:
        return np.zeros_like(b)
    try:
        lu = spla.splu(A)
    except RuntimeError as exc:
        raise LinearSolveFailure(f"factorization failed: {exc}", condition_estimate=math.inf) from exc
    x = lu.solve(b)
    r = b - A @ x
    if np.linalg.norm(r) > rtol * bn:
        x = x + lu.solve(r)  # one step of iterative refinement
        r = b - A @ x
    rel = np.linalg.norm(r) / bn
    if not np.all(np.isfinite(x)) or rel > rtol:
        diag_u = np.abs(lu.U.diagonal())
        cond = float(diag_u.max() / diag_u.min()) if diag_u.min() > 0 else math.inf
        raise LinearSolveFailure(f"relative residual {rel:.3e} exceeds {rtol:.1e}", condition_estimate=cond)
    return x


@dataclass(eq=False)
class TranslatorSolution:
    grid: MaskedGrid
    u: ScalarField
    residual_norm: float
    newton_iters: int
    normalized_u: ScalarField
    diagnostics: GeometryField
    history: list = field(default_factory=list)
    ptc_steps: int = 0
    config: Optional[SolverConfig] = None

    @property
    def bp(self) -> BarrierParams:
        return self.grid.bp

    @property
    def origin_value(self) -> float:
        g = self.grid
        return float(self.u.values[g.index[g.center, 0]])

    def metadata(self) -> dict:
        return {
            "grid": self.grid.metadata(),
            "solver": self.config.to_dict() if self.config else None,
            "residual_norm": self.residual_norm,
            "newton_iters": self.newton_iters,
            "ptc_steps": self.ptc_steps,
            "origin_value": self.origin_value,
            "history": self.history,
        }


def _origin_index(grid: MaskedGrid) -> int:
    k = int(grid.index[grid.center, 0])
    if k < 0:
        raise GridError("origin node is not a domain node")
    return k


def _subsolution_samples(grid: MaskedGrid) -> np.ndarray:
    return np.asarray(subsolution_value(grid.bp, grid.node_x, grid.node_rho), dtype=float)


def _finish(grid, u, fnorm, iters, cfg, history, ptc):
    fld = ScalarField(grid, u)
    u0 = u[_origin_index(grid)]
    return TranslatorSolution(
        grid=grid,
        u=fld,
        residual_norm=float(fnorm),
        newton_iters=iters,
        normalized_u=ScalarField(grid, u - u0),
        diagnostics=geometry_field(fld),
        history=history,
        ptc_steps=ptc,
        config=cfg,
    )


def solution_from_values(grid: MaskedGrid, u: np.ndarray, newton_iters: int = 0, cfg: Optional[SolverConfig] = None) -> TranslatorSolution:
    """Wrap stored nodal values as a solution (residual recomputed, no iteration)."""
    u = np.asarray(u, dtype=float)
    F = translator_residual_values(grid, u)
    return _finish(grid, u, float(np.abs(F).max()), newton_iters, cfg, [], 0)


def _ptc_step_sizes(grid: MaskedGrid, tau: float) -> np.ndarray:
    """Local explicit step ``min(tau, 0.5 / |diag L|)`` for the cut-cell Laplacian."""
    ops = stencil_operators(grid)
    rfac = np.where(ops.axis, grid.bp.slab.n - 1.0, 1.0)
    diag = np.zeros(grid.n_unknowns)
    for d, aff in ops.slope.items():
        width = ops.mx if d in (E, W) else ops.mr * rfac ** -1.0
        diag += np.abs(aff.M.diagonal()) / width
    return np.minimum(tau, 0.5 / diag)


def solve(
    bp: BarrierParams,
    grid: MaskedGrid,
    cfg: SolverConfig = SolverConfig(),
    init: Optional[ScalarField] = None,
) -> TranslatorSolution:
    """Solve ``F(u) = 0`` on ``grid`` with zero Dirichlet data.

    Without ``init`` the iteration starts from ``min(u_R, 0)`` sampled at
    the nodes and relaxes it with ``cfg.ptc_steps`` explicit steps (local step
    size capped for stability at cut cells).  Newton steps are damped by
    halving until the residual 2-norm does not increase.

    Raises:
        NonConverged: tolerance not met within ``cfg.max_newton`` steps, or
            the line search stalls below ``cfg.min_step``.
        LinearSolveFailure: the Newton system could not be solved.
    """
    if grid.bp != bp:
        raise ValueError("grid was built for different barrier parameters")
    tau = cfg.ptc_tau if cfg.ptc_tau is not None else 0.25 * min(grid.hx, grid.hrho) ** 2
    history: list[dict] = []
    if init is None:
        u = np.minimum(_subsolution_samples(grid), 0.0)
        ptc = cfg.ptc_steps
        steps = _ptc_step_sizes(grid, tau)
        for _ in range(ptc):
            u = u + steps * translator_residual_values(grid, u)
    else:
        if init.grid is not grid:
            raise ValueError("init lives on a different grid")
        u = init.values.copy()
        ptc = 0

    F, J = residual_and_jacobian(grid, u)
    fnorm2 = float(np.linalg.norm(F))
    finf = float(np.abs(F).max())
    log.info("R=%g start |F|inf=%.3e", bp.R, finf)
    it = 0
    while finf > cfg.newton_tol:
        if it >= cfg.max_newton:
            raise NonConverged(f"no convergence in {cfg.max_newton} Newton steps (|F|inf={finf:.3e})", ScalarField(grid, u), history)
        try:
            du = linear_solve(J, -F, cfg.linear_tol)
        except LinearSolveFailure as exc:
            exc.last = ScalarField(grid, u)
            exc.history = history
            raise
        lam = 1.0
        while True:
            trial = u + lam * du
            Ft = translator_residual_values(grid, trial)
            tn = float(np.linalg.norm(Ft))
            if np.isfinite(tn) and tn <= fnorm2:
                break
            lam *= cfg.damping
            if lam < cfg.min_step:
                raise NonConverged(f"line search stalled at |F|inf={finf:.3e}", ScalarField(grid, u), history)
        it += 1
        u = trial
        F, J = residual_and_jacobian(grid, u)
        fnorm2 = float(np.linalg.norm(F))
        finf = float(np.abs(F).max())
        history.append({"iter": it, "residual_inf": finf, "residual_2": fnorm2, "step": lam})
        log.info("R=%g newton %d |F|inf=%.3e step=%.3g", bp.R, it, finf, lam)
    return _finish(grid, u, finf, it, cfg, history, ptc)


@dataclass(frozen=True)
class Resolution:
    """Resolution policy: fixed node counts, or nodes per unit length.

    With ``per_unit`` set, ``nx = 2 * ceil(per_unit * x_max) + 1`` and
    ``nrho = ceil(per_unit * R) + 1`` (both at least 17).
    """

    nx: int = 129
    nrho: int = 129
    per_unit: Optional[float] = None

    def build(self, bp: BarrierParams) -> MaskedGrid:
        if self.per_unit is None:
            return build_grid(bp, self.nx, self.nrho)
        from .closed_forms import outer_x_max

        nx = 2 * max(8, math.ceil(self.per_unit * outer_x_max(bp))) + 1
        nr = max(17, math.ceil(self.per_unit * bp.R) + 1)
        return build_grid(bp, nx, nr)


def interpolate_init(prev: TranslatorSolution, grid: MaskedGrid) -> ScalarField:
    """Carry ``prev``'s normalized profile to ``grid`` and re-offset it.

    Points of ``grid`` outside the previous domain are extended by the new
    subsolution shifted to join continuously; the result is clipped to
    ``[u_R, 0]`` pointwise.
    """
    sub = _subsolution_samples(grid)
    vals = np.empty(grid.n_unknowns)
    old_norm = prev.normalized_u
    # offset: new origin value estimated by the old origin plus the barrier shift
    shift = float(_subsolution_samples(grid)[_origin_index(grid)] - _subsolution_samples(prev.grid)[_origin_index(prev.grid)])
    offset = prev.origin_value + shift
    for k, (x, r) in enumerate(zip(grid.node_x, grid.node_rho)):
        try:
            vals[k] = offset + interpolate(old_norm, PointXRho(float(x), float(r)))
        except GridError:
            vals[k] = sub[k]
    return ScalarField(grid, np.clip(np.maximum(vals, sub), None, 0.0))


def continuation_sweep(
    slab: SlabParams,
    R_list: Sequence[float],
    resolution: Resolution = Resolution(),
    cfg: SolverConfig = SolverConfig(),
    epsilon: float = 0.0,
    on_result: Optional[Callable[[float, object], None]] = None,
) -> list:
    """Solve for each ``R`` in ascending ``R_list``, warm-starting from the last success.

    Returns a list aligned with ``R_list`` holding a :class:`TranslatorSolution`
    or the :class:`SolverError` / :class:`GridError` raised for that ``R``.
    """
    R_list = [float(r) for r in R_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be strictly ascending")
    out: list = []
    prev: Optional[TranslatorSolution] = None
    for R in R_list:
        bp = BarrierParams(slab, R, epsilon)
        try:
            grid = resolution.build(bp)
            init = interpolate_init(prev, grid) if prev is not None else None
            try:
                res = solve(bp, grid, cfg, init)
            except SolverError:
                if init is None:
                    raise
                log.warning("R=%g warm start failed, retrying cold", R)
                res = solve(bp, grid, cfg, None)
            prev = res
        except (SolverError, GridError) as exc:
            log.error("R=%g failed: %s", R, exc)
            res = exc
        out.append(res)
        if on_result is not None:
            on_result(R, res)
    return out
