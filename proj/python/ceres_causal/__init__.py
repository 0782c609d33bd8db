from ._core import (
    CeresError,
    DimensionMismatch,
    InvalidInput,
    InvalidProblem,
    MemoryBank,
    Spec,
    SpecError,
    TimeOrderError,
    backdoor_adjust,
    fixture,
    frontdoor_adjust,
    intervene,
    observational,
    run,
    simplex_project,
    softmax,
    solve_entropic_qp,
    solve_simplex_qp,
)

__all__ = [
    "CeresError",
    "DimensionMismatch",
    "InvalidInput",
    "InvalidProblem",
    "MemoryBank",
    "Spec",
    "SpecError",
    "TimeOrderError",
    "backdoor_adjust",
    "fixture",
    "frontdoor_adjust",
    "intervene",
    "observational",
    "run",
    "simplex_project",
    "softmax",
    "solve_entropic_qp",
    "solve_simplex_qp",
]
