"""Convex translating solitons of mean curvature flow in slabs, computed and checked."""

from .analysis import CheckRecord, VerificationReport, grim_fit, level_set_width, max_axis_tilt, tip_find, verify
from .barrier_checks import barrier_report
from .closed_forms import BarrierParams, PointXRho, SlabParams, epsilon0_estimate
from .grid import GridError, MaskedGrid, NodeClass, ScalarField, build_grid, interpolate
from .operator import geometry_at, geometry_field, jacobian, translator_residual
from .solver import (
    NonConverged,
    Resolution,
    SolverConfig,
    SolverError,
    TranslatorSolution,
    continuation_sweep,
    solve,
)

__version__ = "0.1.0"
