"""Asynchronous block-iterative splitting for structured monotone inclusions."""

from .blockspace import BlockVec, LayoutError, SpaceLayout, StateX, inner, lincomb, norm_sq
from .operators import (
    CatalogError,
    CocoerciveOp,
    CouplingOp,
    LinearOp,
    LipMonotoneOp,
    ResolventOp,
    adjoint_apply,
    apply_linear,
    catalog_build,
    resolvent,
)
from .problem import KTCandidate, ProblemSpec, ProblemValidationError, alpha_min, kt_residual, validate
from .saddle import GraphPoint, HalfSpaceCut, apply_C, build_cut, saddle_residual
from .schedule import HistoryBuffer, Schedule, blocks_at, lag_at
from .solver import (
    IterationRecord,
    SolveReport,
    StepParams,
    StopRule,
    default_params,
    haugazeau_project,
    run,
    step_strong,
    step_weak,
    xi_select,
)
from .frontends import MinSpec, VISpec, min_to_problem, vi_to_problem

__version__ = "0.1.0"
