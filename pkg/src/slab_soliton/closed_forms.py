"""
Closed-form objects for translators in slabs.

Everything here is an explicit formula: the Grim reaper and its oblique
relatives, the rotationally symmetric subsolution ``u_R`` with its outer
domain, the pancake level-set function with the cut supersolution, and the
scalar inequalities that compare the two barriers.

Coordinates are rotationally reduced: ``x`` is the slab coordinate and
``rho = |y|`` the radial coordinate in the complementary ``(n-1)``-plane.
All hyperbolic quantities go through :func:`logcosh` so that radii of a few
hundred do not overflow.

Most functions accept scalars or numpy arrays and broadcast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

__all__ = [
    "DomainError",
    "SlabParams",
    "BarrierParams",
    "PointXRho",
    "JetValue",
    "logcosh",
    "arccosh_from_log",
    "grim_reaper_height",
    "oblique_grim_height",
    "oblique_grim_jet",
    "graph_translator_defect",
    "subsolution_value",
    "subsolution_jet",
    "subsolution_residual",
    "outer_domain_contains",
    "outer_boundary_rho",
    "outer_boundary_x",
    "outer_x_max",
    "pancake_potential",
    "pancake_level",
    "supersolution_margin",
    "cut_region_samples",
    "supersolution_scan",
    "epsilon0_estimate",
    "inner_domain_contains",
    "containment_gap",
    "log_g",
    "tangency_discriminant",
]


class DomainError(ValueError):
    """A point lies outside the slab (or another closed-form domain)."""


@dataclass(frozen=True)
class SlabParams:
    """Surface dimension ``n`` and slab angle ``theta``.

    The slab is ``|x| < (pi/2) sec(theta)``.
    """

    n: int
    theta: float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n must be an integer >= 2, got {self.n!r}")
        if not (0.0 < self.theta < 0.5 * math.pi):
            raise ValueError(f"theta must lie in (0, pi/2), got {self.theta!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "theta", float(self.theta))

    @property
    def sin(self) -> float:
        return math.sin(self.theta)

    @property
    def cos(self) -> float:
        return math.cos(self.theta)

    @property
    def tan(self) -> float:
        return math.tan(self.theta)

    @property
    def sec(self) -> float:
        return 1.0 / math.cos(self.theta)

    @property
    def half_width(self) -> float:
        return 0.5 * math.pi / math.cos(self.theta)

    def to_dict(self) -> dict:
        return {"n": self.n, "theta": self.theta}


@dataclass(frozen=True)
class BarrierParams:
    """Barrier radius ``R`` and cut-angle offset ``epsilon``.

    ``epsilon == 0`` means "use ``eps_R = 2(n-1)/R``"; see :attr:`eps`.
    """

    slab: SlabParams
    R: float
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if not (self.R > 0.0 and math.isfinite(self.R)):
            raise ValueError(f"R must be positive and finite, got {self.R!r}")
        if not (0.0 <= self.epsilon < self.slab.theta):
            raise ValueError(
                f"epsilon must satisfy 0 <= epsilon < theta={self.slab.theta}, got {self.epsilon!r}"
            )
        object.__setattr__(self, "R", float(self.R))
        object.__setattr__(self, "epsilon", float(self.epsilon))

    @property
    def eps_R(self) -> float:
        return 2.0 * (self.slab.n - 1) / self.R

    @property
    def eps(self) -> float:
        """Effective cut offset: ``epsilon`` if set, else ``eps_R``."""
        return self.epsilon if self.epsilon > 0.0 else self.eps_R

    @property
    def rho_eps(self) -> float:
        """Inner-barrier radius ``sin(theta)/sin(theta-eps) * R``."""
        e = self.eps
        if e >= self.slab.theta:
            raise ValueError(f"effective epsilon {e} is not below theta={self.slab.theta}")
        return self.slab.sin / math.sin(self.slab.theta - e) * self.R

    def to_dict(self) -> dict:
        return {"n": self.slab.n, "theta": self.slab.theta, "R": self.R, "epsilon": self.epsilon}


class PointXRho(NamedTuple):
    x: float
    rho: float


@dataclass(frozen=True)
class JetValue:
    """Value, gradient ``(d/dx, d/drho)`` and Hessian ``(xx, xrho, rhorho)``."""

    value: float
    grad: tuple[float, float]
    hess: tuple[float, float, float]

    def hess_matrix(self) -> np.ndarray:
        xx, xr, rr = self.hess
        return np.array([[xx, xr], [xr, rr]])


# ---------------------------------------------------------------------------
# numerics helpers


def logcosh(s):
    """``log(cosh(s))`` without overflow."""
    a = np.abs(s)
    return a + np.log1p(np.exp(-2.0 * a)) - math.log(2.0)


def arccosh_from_log(L):
    """``arccosh(exp(L))`` for ``L >= 0``, stable for large ``L``."""
    L = np.asarray(L, dtype=float)
    return L + np.log1p(np.sqrt(-np.expm1(-2.0 * L)))


def _check_in_slab(slab: SlabParams, x) -> None:
    if np.any(np.abs(x) >= slab.half_width):
        raise DomainError(f"|x| must be < {slab.half_width} (slab half-width)")


def _maybe_scalar(a):
    a = np.asarray(a)
    return float(a) if a.ndim == 0 else a


# ---------------------------------------------------------------------------
# Grim family


def grim_reaper_height(x):
    """Height ``-log cos x`` of the Grim reaper curve, ``|x| < pi/2``."""
    if np.any(np.abs(x) >= 0.5 * math.pi):
        raise DomainError("Grim reaper is defined for |x| < pi/2")
    return _maybe_scalar(-np.log(np.cos(x)))


def oblique_grim_height(slab: SlabParams, x, yphi):
    """Oblique Grim plane ``-sec^2(t) log cos(x cos t) + tan(t) <y, phi>``.

    With ``theta -> 0`` this is the Grim hyperplane.
    """
    _check_in_slab(slab, x)
    c = slab.cos
    return _maybe_scalar(-np.log(np.cos(np.asarray(x) * c)) / c**2 + slab.tan * np.asarray(yphi))


def oblique_grim_jet(slab: SlabParams, x, yphi):
    """Value, gradient and Hessian of :func:`oblique_grim_height`.

    Returns ``(value, (u_x, u_phi), (u_xx, u_xphi, u_phiphi))`` as arrays.
    """
    _check_in_slab(slab, x)
    c = slab.cos
    x = np.asarray(x, dtype=float)
    arg = x * c
    value = -np.log(np.cos(arg)) / c**2 + slab.tan * np.asarray(yphi)
    ux = np.tan(arg) / c
    uxx = 1.0 / np.cos(arg) ** 2
    zero = np.zeros_like(uxx)
    return value, (ux, zero + slab.tan), (uxx, zero, zero)


def graph_translator_defect(grad, hess, extra_laplacian=0.0):
    """``H[u] * sqrt(1+|Du|^2) - 1`` from a two-variable jet.

    ``extra_laplacian`` carries Laplacian contributions from directions
    orthogonal to the gradient (the rotational ``(n-2) u_rho/rho`` term).
    """
    p, q = (np.asarray(g, dtype=float) for g in grad)
    hxx, hxq, hqq = (np.asarray(h, dtype=float) for h in hess)
    w2 = 1.0 + p * p + q * q
    # W^3 H = W^2 lap u - D2u(Du, Du), regrouped to avoid cancelling O(|Du|^4) terms
    w3h = hxx * (1.0 + q * q) + hqq * (1.0 + p * p) - 2.0 * hxq * p * q + w2 * extra_laplacian
    return _maybe_scalar(w3h / w2 - 1.0)


# ---------------------------------------------------------------------------
# subsolution and outer domain


def subsolution_value(bp: BarrierParams, x, rho):
    """``u_R(x, rho)``; ``+inf`` outside the slab."""
    s = bp.slab
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    t = s.tan
    with np.errstate(divide="ignore", invalid="ignore"):
        cosx = np.cos(np.abs(x) * s.cos)
        inside = np.abs(x) < s.half_width
        logcos = np.where(inside, np.log(np.where(inside, cosx, 1.0)), -np.inf)
    val = -logcos / s.cos**2 + t * t * (logcosh(rho / t) - logcosh(bp.R / t))
    return _maybe_scalar(val)


def subsolution_jet(bp: BarrierParams, p: PointXRho) -> JetValue:
    """Value, gradient and reduced Hessian of the shifted subsolution.

    The ``n-2`` tangential-sphere Hessian directions, each
    ``(tan/rho) tanh(rho/tan)``, are not part of the reduced jet; they
    enter through :func:`subsolution_residual`.
    """
    s = bp.slab
    x, rho = float(p[0]), float(p[1])
    _check_in_slab(s, x)
    t, c = s.tan, s.cos
    arg = x * c
    value = float(subsolution_value(bp, x, rho))
    gx = math.tan(arg) / c
    gr = t * math.tanh(rho / t)
    hxx = 1.0 / math.cos(arg) ** 2
    hrr = 1.0 / math.cosh(rho / t) ** 2 if abs(rho / t) < 350 else 0.0
    return JetValue(value, (gx, gr), (hxx, 0.0, hrr))


def _rot_slope_over_rho(t, rho):
    """``(t/rho) tanh(rho/t)`` with its limit 1 at ``rho = 0``."""
    rho = np.asarray(rho, dtype=float)
    s = rho / t
    small = np.abs(s) < 1e-4
    safe = np.where(small, 1.0, s)
    return np.where(small, 1.0 - s * s / 3.0, np.tanh(safe) / safe)


def subsolution_residual(bp: BarrierParams, x, rho):
    """``(1+|Du|^2)^{3/2} H[u] - (1+|Du|^2)`` for the subsolution.

    Uses the full n-dimensional Laplacian. Nonnegative exactly where the
    subsolution inequality holds.
    """
    s = bp.slab
    _check_in_slab(s, x)
    t, c = s.tan, s.cos
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    arg = x * c
    p = np.tan(arg) / c
    q = t * np.tanh(rho / t)
    a = 1.0 / np.cos(arg) ** 2
    b = np.exp(-2.0 * logcosh(rho / t))
    k = _rot_slope_over_rho(t, rho)
    w2 = 1.0 + p * p + q * q
    # (1+|Du|^2) lap u - D2u(Du,Du) with the a*p^2 and b*q^2 terms cancelled exactly
    w3h = a * (1.0 + q * q) + b * (1.0 + p * p) + (s.n - 2) * k * w2
    return _maybe_scalar(w3h - w2)


def outer_domain_contains(bp: BarrierParams, p: PointXRho):
    """True iff ``u_R(p) < 0``; points outside the slab are excluded."""
    x, rho = p
    return _maybe_bool(np.asarray(subsolution_value(bp, x, rho)) < 0.0)


def _maybe_bool(a):
    a = np.asarray(a)
    return bool(a) if a.ndim == 0 else a


def _boundary_log_arg(bp: BarrierParams, x):
    s = bp.slab
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        cosx = np.cos(np.abs(x) * s.cos)
        logcos = np.where(cosx > 0, np.log(np.where(cosx > 0, cosx, 1.0)), -np.inf)
    A = logcosh(bp.R / s.tan)
    return A + logcos / s.sin**2, A


def outer_boundary_rho(bp: BarrierParams, x):
    """Radius ``rho_b(x)`` of the outer-domain boundary above ``x``.

    Returns ``None`` (``nan`` for arrays) where ``x`` lies beyond the
    domain's x-extent. Values of the arccosh argument within round-off of 1
    are snapped to 1, so ``rho_b(x_max) == 0``.
    """
    L, A = _boundary_log_arg(bp, x)
    noise = 64.0 * np.finfo(float).eps * max(A, 1.0)
    L = np.where(np.abs(L) <= noise, 0.0, L)
    with np.errstate(invalid="ignore"):
        rho = np.where(L >= 0.0, bp.slab.tan * arccosh_from_log(np.maximum(L, 0.0)), np.nan)
    if rho.ndim == 0:
        return None if math.isnan(float(rho)) else float(rho)
    return rho


def outer_boundary_x(bp: BarrierParams, rho):
    """Positive ``x`` where the outer boundary crosses height ``rho``; nan if ``rho >= R``."""
    s = bp.slab
    rho = np.asarray(rho, dtype=float)
    # log cos(x cos) = sin^2 (logcosh(rho/t) - logcosh(R/t))
    expo = s.sin**2 * (logcosh(rho / s.tan) - logcosh(bp.R / s.tan))
    with np.errstate(invalid="ignore"):
        xb = np.where(expo < 0.0, np.arccos(np.exp(np.minimum(expo, 0.0))) / s.cos, np.nan)
    return _maybe_scalar(xb)


def outer_x_max(bp: BarrierParams) -> float:
    """Half-extent in x of the outer domain (its width on the axis)."""
    s = bp.slab
    return float(math.acos(math.exp(-s.sin**2 * float(logcosh(bp.R / s.tan)))) / s.cos)


# ---------------------------------------------------------------------------
# pancake supersolution


def pancake_potential(slab: SlabParams, x, w):
    """Level-set function of the rotated Angenent oval of width ``pi sec(theta)``.

    ``w = sqrt(|y|^2 + z^2)``; the value is nonnegative.
    """
    _check_in_slab(slab, x)
    c = slab.cos
    x = np.asarray(x, dtype=float)
    return _maybe_scalar((logcosh(np.asarray(w) * c) - np.log(np.cos(x * c))) / c**2)


def pancake_level(slab: SlabParams, R: float) -> float:
    """Level ``T = sec^2(theta) log cosh(R/tan(theta))`` defining the surface."""
    return float(logcosh(R / slab.tan)) / slab.cos**2


def supersolution_margin(slab: SlabParams, y_norm, z):
    """Supersolution margin of the pancake level set at ``(|y|, z)``.

    ``((|z|-(n-1))/|w|) tanh(|w|/sec) - cos(theta)``; nonnegative exactly
    where the pancake satisfies the supersolution inequality.
    """
    y_norm = np.asarray(y_norm, dtype=float)
    z = np.asarray(z, dtype=float)
    w = np.hypot(y_norm, z)
    if np.any(w == 0.0):
        raise DomainError("supersolution margin undefined at y = z = 0")
    return _maybe_scalar((np.abs(z) - (slab.n - 1)) / w * np.tanh(w * slab.cos) - slab.cos)


def cut_region_samples(slab: SlabParams, R: float, epsilon: float, m: int = 100):
    """Sample ``(|y|, z)`` on the part of the pancake below the cut plane.

    The cut region is ``z <= -R cos(theta-eps)/sin(theta)`` intersected with
    the pancake ``|w| <= R/sin(theta)``. An ``m x m`` polar grid, corners
    included, gives ``m*m`` samples.
    """
    if not (0.0 <= epsilon < slab.theta):
        raise ValueError(f"epsilon must lie in [0, theta), got {epsilon}")
    zc = R * math.cos(slab.theta - epsilon) / slab.sin
    wmax = R / slab.sin
    w = np.linspace(zc, wmax, m)
    frac = np.linspace(0.0, 1.0, m)
    psi_max = np.arccos(np.clip(zc / w, -1.0, 1.0))
    psi = psi_max[:, None] * frac[None, :]
    W = np.broadcast_to(w[:, None], psi.shape)
    return (W * np.sin(psi)).ravel(), (-W * np.cos(psi)).ravel()


def supersolution_scan(slab: SlabParams, epsilon: float, R: float | None = None, m: int = 100) -> float:
    """Minimum supersolution margin over the cut region.

    ``R`` defaults to ``R_eps = 2(n-1)/epsilon``.
    """
    if R is None:
        R = 2.0 * (slab.n - 1) / epsilon
    y, z = cut_region_samples(slab, R, epsilon, m)
    return float(np.min(supersolution_margin(slab, y, z)))


def epsilon0_estimate(slab: SlabParams, tol: float = 1e-6, m: int = 100, n_scan: int = 400) -> float:
    """Numerical threshold ``eps_0(n, theta)`` for the cut supersolution.

    Scans ``eps`` geometrically up to ``theta``; the result is the first
    scan failure refined by bisection to ``tol``, so every scanned
    ``eps' <= eps_0`` passes :func:`supersolution_scan` at ``R = R_eps'``.
    If no failure occurs below ``theta`` the (open) upper bound ``theta`` is
    approached and ``theta*(1-1e-9)`` returned.

    Raises:
        RuntimeError: no positive valid epsilon at scan resolution.
    """
    top = slab.theta * (1.0 - 1e-9)
    grid = np.geomspace(slab.theta * 1e-4, top, n_scan)

    def valid(e: float) -> bool:
        return supersolution_scan(slab, e, m=m) >= 0.0

    if not valid(grid[0]):
        raise RuntimeError(f"no valid epsilon found for n={slab.n}, theta={slab.theta}")
    lo = grid[0]
    hi = None
    for e in grid[1:]:
        if valid(e):
            lo = e
        else:
            hi = e
            break
    if hi is None:
        return float(top)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if valid(mid):
            lo = mid
        else:
            hi = mid
    return float(lo)


def inner_domain_contains(bp: BarrierParams, p: PointXRho):
    """Membership in the inner domain bounded by the cut supersolution's boundary.

    Uses radius ``bp.R`` and the effective offset ``bp.eps``.
    """
    s = bp.slab
    x, rho = (np.asarray(a, dtype=float) for a in p)
    e = bp.eps
    arg = np.sqrt(rho**2 * s.sin**2 + bp.R**2 * math.cos(s.theta - e) ** 2) / s.tan
    rhs = logcosh(arg) - logcosh(bp.R / s.tan)
    with np.errstate(divide="ignore", invalid="ignore"):
        cosx = np.cos(np.abs(x) * s.cos)
        lhs = np.where((np.abs(x) < s.half_width) & (cosx > 0), np.log(np.where(cosx > 0, cosx, 1.0)), -np.inf)
    return _maybe_bool(lhs > rhs)


def containment_gap(slab: SlabParams, R: float, epsilon: float, zeta):
    """Gap function whose nonpositivity places the inner domain inside the outer one.

    ``f(zeta) = g(zeta^2 s^2 + rho_e^2 c_e^2)/g(rho_e^2) - [g(zeta^2)/g(R^2)]^{s^2}``
    with ``g(w) = cosh(sqrt(w)/tan)``, ``s = sin(theta)``,
    ``c_e = cos(theta-eps)`` and ``rho_e = sin(theta)/sin(theta-eps) R``.
    """
    if not (0.0 <= epsilon < slab.theta):
        raise ValueError(f"epsilon must lie in [0, theta), got {epsilon}")
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta < 0):
        raise ValueError("zeta must be nonnegative")
    s2 = slab.sin**2
    ce = math.cos(slab.theta - epsilon)
    rho_e = slab.sin / math.sin(slab.theta - epsilon) * R
    a = log_g(slab, zeta**2 * s2 + rho_e**2 * ce**2) - log_g(slab, rho_e**2)
    b = s2 * (log_g(slab, zeta**2) - log_g(slab, R**2))
    return _maybe_scalar(np.exp(a) - np.exp(b))


def log_g(slab: SlabParams, w):
    """``log g(w) = log cosh(sqrt(w)/tan(theta))``."""
    return logcosh(np.sqrt(np.asarray(w, dtype=float)) / slab.tan)


# ---------------------------------------------------------------------------


def tangency_discriminant(omega, t, r):
    """``|r cos(w) phi + (r sin(w) + t) e|^2 - cos^2(w) t^2`` as the square ``(r + t sin w)^2``.

    Zero exactly at the tangency point ``r = -t sin(omega)``.
    """
    d = np.asarray(r, dtype=float) + np.asarray(t, dtype=float) * np.sin(omega)
    return _maybe_scalar(d * d)
