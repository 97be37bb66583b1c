"""
Masked finite-difference grid over the outer domain in ``(x, rho)``.

The grid is a uniform tensor grid on ``[-x_max, x_max] x [0, R]`` clipped to
the outer domain ``{u_R < 0}``.  Nodes adjacent to the curved Dirichlet
boundary carry fractional cut distances (Shortley-Weller) in each of the
four grid directions.  The axis ``rho = 0`` is a symmetry line handled by an
even ghost row.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable

import numpy as np

from .closed_forms import (
    BarrierParams,
    PointXRho,
    outer_boundary_rho,
    outer_boundary_x,
    outer_x_max,
    subsolution_value,
)

__all__ = [
    "NodeClass",
    "GridError",
    "MaskedGrid",
    "ScalarField",
    "build_grid",
    "interpolate",
    "E",
    "W",
    "N",
    "S",
]

# direction indices into MaskedGrid.alpha
E, W, N, S = 0, 1, 2, 3


class NodeClass(IntEnum):
    EXTERIOR = 0
    INTERIOR = 1
    BOUNDARY_ADJACENT = 2
    AXIS = 3


class GridError(ValueError):
    """Grid too coarse for the domain, or a query outside it."""


@dataclass(frozen=True, eq=False)
class MaskedGrid:
    """Immutable masked grid.

    Attributes:
        bp: barrier parameters fixing the domain.
        nx, nrho: node counts; ``nx`` is odd so a column sits at ``x = 0``.
        hx, hrho: spacings.
        x, rho: 1-D node coordinates (``x`` exactly antisymmetric).
        node_class: ``(nx, nrho)`` array of :class:`NodeClass` codes.
        alpha: ``(4, nx, nrho)`` fractional distances to the boundary in the
            E, W, N, S directions; 1 where the neighbour is a domain node.
            On the axis the S entry mirrors N (ghost row).
        index: ``(nx, nrho)`` unknown number of each node, -1 if exterior.
        merged: number of near-boundary nodes folded into the boundary.
    """

    bp: BarrierParams
    nx: int
    nrho: int
    hx: float
    hrho: float
    x: np.ndarray
    rho: np.ndarray
    node_class: np.ndarray
    alpha: np.ndarray
    index: np.ndarray
    merged: int = 0
    x_max: float = 0.0
    merge_threshold: float = 0.1
    snap_threshold: float = 1e-3
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def inside(self) -> np.ndarray:
        return self.node_class != NodeClass.EXTERIOR

    @property
    def n_unknowns(self) -> int:
        return int(self.inside.sum())

    @property
    def center(self) -> int:
        """Column index of ``x = 0``."""
        return (self.nx - 1) // 2

    @property
    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """``(i, j)`` index arrays of the unknowns, in unknown order."""
        if "nodes" not in self._cache:
            ii, jj = np.nonzero(self.inside)
            order = np.argsort(self.index[ii, jj])
            self._cache["nodes"] = (ii[order], jj[order])
        return self._cache["nodes"]

    @property
    def node_x(self) -> np.ndarray:
        return self.x[self.nodes[0]]

    @property
    def node_rho(self) -> np.ndarray:
        return self.rho[self.nodes[1]]

    @property
    def h(self) -> float:
        return max(self.hx, self.hrho)

    def full_stencil_mask(self) -> np.ndarray:
        """Nodes whose 3x3 neighbourhood (ghost-reflected at the axis) is inside."""
        if "full" not in self._cache:
            ins = self.inside
            pad = np.zeros((self.nx + 2, self.nrho + 2), dtype=bool)
            pad[1:-1, 1:-1] = ins
            pad[1:-1, 0] = ins[:, 1]  # even reflection across rho = 0
            ok = ins.copy()
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ok &= pad[1 + di : self.nx + 1 + di, 1 + dj : self.nrho + 1 + dj]
            self._cache["full"] = ok
        return self._cache["full"]

    def metadata(self) -> dict:
        return {
            "bp": self.bp.to_dict(),
            "nx": self.nx,
            "nrho": self.nrho,
            "hx": self.hx,
            "hrho": self.hrho,
            "x_max": self.x_max,
            "n_unknowns": self.n_unknowns,
            "merged_nodes": self.merged,
            "merge_threshold": self.merge_threshold,
            "snap_threshold": self.snap_threshold,
        }


SNAP_THRESHOLD = 1e-3


def build_grid(
    bp: BarrierParams,
    nx: int,
    nrho: int,
    merge_threshold: float = 0.1,
    snap_threshold: float = SNAP_THRESHOLD,
) -> MaskedGrid:
    """Build the masked grid for the outer domain of ``bp``.

    Cut distances come from the closed-form boundary curves ``rho_b(x)`` and
    ``x_b(rho)`` (clamped into ``(0, 1]``).  Nodes whose four cut distances
    are all below ``merge_threshold`` are merged into the boundary, as are
    nodes lying within ``snap_threshold`` cells of it in any direction.

    Raises:
        GridError: bad node counts, or the domain is too thin for the grid.
    """
    if nx < 16 or nrho < 16:
        raise GridError(f"need nx, nrho >= 16, got {nx}, {nrho}")
    if nx % 2 == 0:
        raise GridError(f"nx must be odd so that x = 0 is a node column, got {nx}")
    xm = outer_x_max(bp)
    hx = 2.0 * xm / (nx - 1)
    hrho = bp.R / (nrho - 1)
    c = (nx - 1) // 2
    x = (np.arange(nx) - c) * hx
    rho = np.arange(nrho) * hrho
    ax = np.abs(x)

    XX, RR = np.meshgrid(ax, rho, indexing="ij")
    inside = np.asarray(subsolution_value(bp, XX, RR)) < 0.0

    rho_b = np.asarray(outer_boundary_rho(bp, ax))  # nan beyond x_max
    x_b = np.asarray(outer_boundary_x(bp, rho))  # nan for rho >= R
    tiny = 1e-12

    merged = np.zeros_like(inside)
    while True:
        alpha = np.ones((4, nx, nrho))
        ins_pad = np.zeros((nx + 2, nrho + 1), dtype=bool)
        ins_pad[1:-1, :-1] = inside
        mer_pad = np.zeros_like(ins_pad)
        mer_pad[1:-1, :-1] = merged
        # east / west: cut where the neighbour in the row is outside
        east_out = inside & ~ins_pad[2:, :-1]
        east_merged = inside & mer_pad[2:, :-1]
        # only x >= 0 nodes see the right-hand boundary; the row segment is symmetric
        a_e = (x_b[None, :] - x[:, None]) / hx
        a_e = np.where(np.isfinite(a_e), a_e, tiny)
        alpha[E] = np.where(east_out, np.clip(a_e, tiny, 1.0), 1.0)
        alpha[E] = np.where(east_merged, 1.0, alpha[E])
        alpha[W] = alpha[E][::-1, :]
        north_out = inside & ~ins_pad[1:-1, 1:]
        north_merged = inside & mer_pad[1:-1, 1:]
        a_n = (rho_b[:, None] - rho[None, :]) / hrho
        a_n = np.where(np.isfinite(a_n), a_n, tiny)
        alpha[N] = np.where(north_out, np.clip(a_n, tiny, 1.0), 1.0)
        alpha[N] = np.where(north_merged, 1.0, alpha[N])
        alpha[S] = 1.0
        alpha[S, :, 0] = alpha[N, :, 0]
        alpha[:, ~inside] = 1.0
        new = inside & (np.all(alpha < merge_threshold, axis=0) | np.any(alpha < snap_threshold, axis=0))
        if not new.any():
            break
        inside = inside & ~new
        merged = merged | new

    node_class = np.zeros((nx, nrho), dtype=np.int8)
    # boundary-adjacent: a cut direction, or a merged (Dirichlet) neighbour
    pad = np.zeros((nx + 2, nrho + 1), dtype=bool)
    pad[1:-1, :-1] = inside
    south = np.concatenate([inside[:, 1:2], inside[:, :-1]], axis=1)
    full_nb = pad[2:, :-1] & pad[:-2, :-1] & pad[1:-1, 1:] & south
    cut = np.any(alpha < 1.0, axis=0) | ~full_nb
    node_class[inside & ~cut] = NodeClass.INTERIOR
    node_class[inside & cut] = NodeClass.BOUNDARY_ADJACENT
    node_class[inside & (np.arange(nrho)[None, :] == 0)] = NodeClass.AXIS

    index = -np.ones((nx, nrho), dtype=np.int64)
    index[inside] = np.arange(int(inside.sum()))

    grid = MaskedGrid(
        bp=bp,
        nx=nx,
        nrho=nrho,
        hx=hx,
        hrho=hrho,
        x=x,
        rho=rho,
        node_class=node_class,
        alpha=alpha,
        index=index,
        merged=int(merged.sum()),
        x_max=xm,
        merge_threshold=merge_threshold,
        snap_threshold=snap_threshold,
    )
    _check_resolution(grid)
    return grid


def _check_resolution(grid: MaskedGrid) -> None:
    ins = grid.inside
    if ins[grid.center].sum() < 3 or ins[:, 0].sum() < 3:
        raise GridError("domain too thin: fewer than 3 nodes on the x = 0 column or the axis")
    # every node needs at least one neighbouring domain node along some grid line
    pad = np.zeros((grid.nx + 2, grid.nrho + 2), dtype=bool)
    pad[1:-1, 1:-1] = ins
    pad[1:-1, 0] = ins[:, 1]
    nb = pad[2:, 1:-1] | pad[:-2, 1:-1] | pad[1:-1, 2:] | pad[1:-1, :-2]
    if np.any(ins & ~nb):
        raise GridError("grid too coarse: isolated domain nodes")
    if not grid.full_stencil_mask().any():
        raise GridError("grid too coarse: no node with a full 3x3 stencil")


@dataclass(eq=False)
class ScalarField:
    """Values at the unknowns of a grid (unknown order)."""

    grid: MaskedGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_unknowns,):
            raise ValueError(f"expected {self.grid.n_unknowns} values, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @classmethod
    def from_function(cls, grid: MaskedGrid, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> "ScalarField":
        return cls(grid, np.broadcast_to(fn(grid.node_x, grid.node_rho), (grid.n_unknowns,)).copy())

    def to_array(self, fill: float = np.nan) -> np.ndarray:
        out = np.full((self.grid.nx, self.grid.nrho), fill)
        i, j = self.grid.nodes
        out[i, j] = self.values
        return out

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy())

    # serialization: CSV columns x, rho, class, value plus a JSON sidecar
    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "rho", "class", "value"])
        i, j = self.grid.nodes
        cls = self.grid.node_class[i, j]
        for xv, rv, cv, vv in zip(self.grid.x[i], self.grid.rho[j], cls, self.values):
            w.writerow([f"{xv:.17g}", f"{rv:.17g}", NodeClass(int(cv)).name, f"{vv:.17g}"])
        return buf.getvalue()

    def metadata_json(self) -> str:
        return json.dumps(self.grid.metadata(), sort_keys=True, indent=2)

    @classmethod
    def from_csv(cls, grid: MaskedGrid, text: str) -> "ScalarField":
        rows = list(csv.DictReader(ln for ln in io.StringIO(text) if not ln.startswith("#")))
        if len(rows) != grid.n_unknowns:
            raise ValueError(f"CSV has {len(rows)} rows, grid has {grid.n_unknowns} unknowns")
        xs = np.array([float(r["x"]) for r in rows])
        rs = np.array([float(r["rho"]) for r in rows])
        if not (np.allclose(xs, grid.node_x, rtol=0, atol=1e-12) and np.allclose(rs, grid.node_rho, rtol=0, atol=1e-12)):
            raise ValueError("CSV node coordinates do not match the grid")
        return cls(grid, np.array([float(r["value"]) for r in rows]))


def interpolate(fld: ScalarField, p: PointXRho) -> float:
    """Interpolate a field at ``p``.

    Bilinear in cells with four domain corners.  In cut cells the value is
    linear along each bounding row between domain nodes and boundary
    intercepts (value 0), then linear in ``rho``; where the upper row is
    outside the domain the vertical boundary point ``rho_b(x)`` is used.

    Raises:
        GridError: ``p`` is outside the domain.
    """
    g = fld.grid
    x, r = float(p[0]), float(p[1])
    if r < 0 or r > g.rho[-1] or abs(x) > g.x_max:
        raise GridError(f"point {p} outside the grid")
    rb = outer_boundary_rho(g.bp, abs(x))
    if rb is None or r > rb + 1e-12 * max(1.0, g.bp.R):
        raise GridError(f"point {p} outside the domain")
    arr = fld.to_array()
    fi = (x - g.x[0]) / g.hx
    fj = r / g.hrho
    i0 = min(int(math.floor(fi)), g.nx - 2)
    j0 = min(int(math.floor(fj)), g.nrho - 2)
    tx = fi - i0
    ty = fj - j0
    ins = g.inside
    if ins[i0, j0] and ins[i0 + 1, j0] and ins[i0, j0 + 1] and ins[i0 + 1, j0 + 1]:
        return float(
            (1 - tx) * (1 - ty) * arr[i0, j0]
            + tx * (1 - ty) * arr[i0 + 1, j0]
            + (1 - tx) * ty * arr[i0, j0 + 1]
            + tx * ty * arr[i0 + 1, j0 + 1]
        )

    def along_row(j: int) -> float | None:
        # value at (x, rho_j) or None if that point is outside
        if not (ins[i0, j] or ins[i0 + 1, j]):
            return None
        if ins[i0, j] and ins[i0 + 1, j]:
            return float((1 - tx) * arr[i0, j] + tx * arr[i0 + 1, j])
        if ins[i0, j]:
            d = g.alpha[E, i0, j]
            return float(arr[i0, j] * (1 - tx / d)) if tx <= d else None
        d = g.alpha[W, i0 + 1, j]
        s = 1 - tx
        return float(arr[i0 + 1, j] * (1 - s / d)) if s <= d else None

    lo = along_row(j0)
    hi = along_row(j0 + 1)
    if lo is None and hi is None:
        # both row points outside: the point sits in a thin sliver next to the boundary
        return 0.0
    if hi is not None and lo is not None:
        return (1 - ty) * lo + ty * hi
    if lo is not None:
        # upper row outside: close the segment at the boundary point rho_b(x)
        top = (rb - g.rho[j0]) / g.hrho
        if top <= 0:
            return lo
        return lo * max(0.0, 1 - ty / top)
    # lower row outside cannot happen for a rho-downward-closed domain except at round-off
    return hi
