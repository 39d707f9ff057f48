"""Group l0-regularized regression with certified optimality."""

from ._core import (
    AdditiveProblem,
    BnbResult,
    DimensionError,
    Error,
    InputError,
    Penalty,
    PathPoint,
    PreconditionError,
    Problem,
    Solution,
    assemble_additive,
    bcd_fit,
    compute_metrics,
    estimate_big_m,
    fit_path,
    generate,
    group_hard_threshold,
    lambda0_grid,
    lambda0_max,
    local_search_fit,
    pgd_constrained,
    pgd_penalized,
    psi,
    psi_prox,
    root_relaxation,
    solve_exact,
    tune_validation,
)

__all__ = [name for name in dir() if not name.startswith("_")]
