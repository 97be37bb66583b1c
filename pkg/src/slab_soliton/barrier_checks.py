"""
Sampled verification of the closed-form barrier inequalities.

Every scan here is deterministic given ``seed``: sample sets are stratified
(one jittered point per cell of a tensor lattice).
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .analysis import CheckRecord, VerificationReport
from .closed_forms import (
    BarrierParams,
    PointXRho,
    SlabParams,
    containment_gap,
    epsilon0_estimate,
    inner_domain_contains,
    log_g,
    oblique_grim_jet,
    graph_translator_defect,
    outer_domain_contains,
    subsolution_residual,
    supersolution_margin,
    cut_region_samples,
    tangency_discriminant,
)

__all__ = [
    "stratified",
    "subsolution_check",
    "supersolution_check",
    "containment_checks",
    "log_concavity_check",
    "tangency_check",
    "grim_identity_check",
    "barrier_report",
]


def stratified(rng: np.random.Generator, lo: float, hi: float, m: int) -> np.ndarray:
    """One uniform point in each of ``m`` equal cells of ``(lo, hi)``."""
    edges = np.linspace(lo, hi, m + 1)
    return edges[:-1] + (edges[1:] - edges[:-1]) * rng.uniform(0.0, 1.0, m)


def subsolution_check(slab: SlabParams, R: float, rng: np.random.Generator, m: int = 100, rho_max: Optional[float] = None) -> CheckRecord:
    """Min of the subsolution residual over ``m x m`` slab samples (threshold 1e-10)."""
    bp = BarrierParams(slab, R)
    hw = slab.half_width
    rho_max = 2.0 * R if rho_max is None else rho_max
    x = stratified(rng, -hw, hw, m)
    r = stratified(rng, 0.0, rho_max, m)
    X, Rr = np.meshgrid(x, r, indexing="ij")
    res = np.asarray(subsolution_residual(bp, X, Rr))
    return CheckRecord("subsolution", "lower barrier is a subsolution", float(res.min()), 1e-10, res.size, {"R": R, "rho_max": rho_max})


def supersolution_check(slab: SlabParams, epsilon: float, m: int = 100, eps0: Optional[float] = None) -> CheckRecord:
    """Min supersolution margin over the cut region at ``R = 2(n-1)/epsilon``."""
    R = 2.0 * (slab.n - 1) / epsilon
    y, z = cut_region_samples(slab, R, epsilon, m)
    mg = np.asarray(supersolution_margin(slab, y, z))
    info = {"epsilon": epsilon, "R": R}
    if eps0 is not None:
        info["epsilon0"] = eps0
    return CheckRecord("supersolution", "cut pancake is a supersolution below the cut", float(mg.min()), 0.0, mg.size, info)


def containment_checks(
    slab: SlabParams, R: float, epsilon: float, rng: np.random.Generator, n_zeta: int = 1000, m: int = 100
) -> list[CheckRecord]:
    """Containment of the inner domain in the outer one, three ways.

    * ``containment_gap_literal``: ``f(zeta) <= 1e-12`` on ``[0, 2R]``
      (informational: ``f`` is positive on this range).
    * ``containment_gap``: ``f(zeta) >= -1e-12`` on ``[0, R]``, the sign that
      actually implies containment.
    * ``containment_sampled``: inner-domain sample points (radius
      ``rho_eps``) all lie in the outer domain (radius ``R``).
    """
    z_all = stratified(rng, 0.0, 2.0 * R, n_zeta)
    f_all = np.asarray(containment_gap(slab, R, epsilon, z_all))
    literal = CheckRecord(
        "containment_gap_literal",
        "f(zeta) <= 1e-12 on [0, 2R] (as literally stated; informational)",
        float(-f_all.max()),
        math.inf,
        n_zeta,
        {"max_f": float(f_all.max()), "would_pass": bool(f_all.max() <= 1e-12)},
    )
    z_in = stratified(rng, 0.0, R, n_zeta)
    f_in = np.asarray(containment_gap(slab, R, epsilon, z_in))
    signed = CheckRecord("containment_gap", "f(zeta) >= 0 on [0, R]", float(f_in.min()), 1e-12, n_zeta, {"min_f": float(f_in.min())})
    rho_e = slab.sin / math.sin(slab.theta - epsilon) * R
    inner = BarrierParams(slab, rho_e, epsilon)
    outer = BarrierParams(slab, R)
    x = stratified(rng, -slab.half_width, slab.half_width, m)
    r = stratified(rng, 0.0, rho_e, m)
    X, Rr = np.meshgrid(x, r, indexing="ij")
    ins = np.asarray(inner_domain_contains(inner, PointXRho(X, Rr)))
    out = np.asarray(outer_domain_contains(outer, PointXRho(X, Rr)))
    bad = int(np.sum(ins & ~out))
    sampled = CheckRecord(
        "containment_sampled",
        "inner domain lies inside the outer domain",
        float(-bad),
        0.0,
        int(ins.sum()),
        {"violations": bad, "rho_eps": rho_e},
    )
    return [literal, signed, sampled]


def log_concavity_check(slab: SlabParams, rng: np.random.Generator, w_max: float = 400.0, n: int = 1000) -> CheckRecord:
    """Second differences of ``log cosh(sqrt(w)/tan)`` are nonpositive."""
    w = stratified(rng, 1e-3, w_max, n)
    h = 1e-3 * np.maximum(w, 1.0) ** 0.5
    w = np.maximum(w, 2 * h)
    d2 = (log_g(slab, w + h) - 2 * log_g(slab, w) + log_g(slab, w - h)) / h**2
    # finite-difference round-off ~ eps * |log g| / h^2
    tol = 64 * np.finfo(float).eps * np.abs(log_g(slab, w)).max() / float((h**2).min())
    return CheckRecord("log_concavity", "log g is concave", float(-d2.max()), tol, n)


def tangency_check(rng: np.random.Generator, n: int = 1000) -> CheckRecord:
    """The tangency discriminant is a perfect square with its root at ``r = -t sin(omega)``."""
    om = rng.uniform(0.0, 0.5 * math.pi, n)
    t = -rng.uniform(0.1, 50.0, n)
    r = rng.uniform(0.0, 60.0, n)
    vals = np.asarray(tangency_discriminant(om, t, r))
    direct = (r * np.cos(om)) ** 2 + (r * np.sin(om) + t) ** 2 - (np.cos(om) * t) ** 2
    at_root = np.asarray(tangency_discriminant(om, t, -t * np.sin(om)))
    scale = np.maximum(1.0, r**2 + t**2)
    agree = float(np.max(np.abs(vals - direct) / scale))
    return CheckRecord(
        "tangency",
        "circle tangent to the ray at a unique point",
        float(min(vals.min(), -np.abs(at_root).max(), -agree)),
        1e-12,
        n,
        {"max_root_value": float(np.abs(at_root).max()), "expansion_error": agree},
    )


def grim_identity_check(slab: SlabParams, rng: np.random.Generator, n: int = 100) -> CheckRecord:
    """Oblique Grim plane solves the translator equation (closed-form derivatives)."""
    hw = slab.half_width
    x = rng.uniform(-0.99 * hw, 0.99 * hw, n)
    y = rng.uniform(-10.0, 10.0, n)
    _, grad, hess = oblique_grim_jet(slab, x, y)
    d = np.abs(np.asarray(graph_translator_defect(grad, hess)))
    return CheckRecord("grim_identity", "oblique Grim plane is a translator", float(-d.max()), 1e-10, n)


def barrier_report(
    slab: SlabParams,
    seed: int = 0,
    epsilon: Optional[float] = None,
    m: int = 100,
    eps0: Optional[float] = None,
) -> VerificationReport:
    """All barrier scans for one slab.

    ``epsilon`` defaults to ``eps0/2``; the subsolution and containment scans
    use ``R = 2(n-1)/epsilon``.
    """
    rng = np.random.default_rng(seed)
    eps0 = epsilon0_estimate(slab) if eps0 is None else eps0
    eps = 0.5 * eps0 if epsilon is None else float(epsilon)
    R = 2.0 * (slab.n - 1) / eps
    recs = [
        subsolution_check(slab, R, rng, m),
        supersolution_check(slab, eps, m, eps0),
        *containment_checks(slab, R, eps, rng, m=m),
        log_concavity_check(slab, rng),
        tangency_check(rng),
        grim_identity_check(slab, rng),
    ]
    ctx = {"n": slab.n, "theta": slab.theta, "epsilon0": eps0, "epsilon": eps, "R": R, "seed": seed}
    return VerificationReport(recs, ctx)
