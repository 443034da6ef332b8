"""QUBO solver backends.

Every backend has the signature ``solver(q, cfg) -> SolveResult`` (the
remote client also takes an endpoint) and returns a best sample whose
energy was recomputed from the assignment.
"""

from functools import partial

from .anneal import descend, is_local_minimum, solve_greedy, solve_sa
from .base import (
    EnergyMismatchError,
    ScheduleError,
    SolveResult,
    Solver,
    SolverConfig,
    SolverError,
    checked_sample,
)
from .decompose import clamp, solve_decomposed
from .exhaustive import solve_exhaustive
from .remote import (
    EnergyValidationError,
    MalformedResponseError,
    NoSamplesError,
    RemoteConnectionError,
    RemoteSolverError,
    solve_remote,
)

__all__ = [
    "EnergyMismatchError",
    "EnergyValidationError",
    "MalformedResponseError",
    "NoSamplesError",
    "RemoteConnectionError",
    "RemoteSolverError",
    "SOLVER_NAMES",
    "ScheduleError",
    "SolveResult",
    "Solver",
    "SolverConfig",
    "SolverError",
    "checked_sample",
    "clamp",
    "descend",
    "get_solver",
    "is_local_minimum",
    "solve_decomposed",
    "solve_exhaustive",
    "solve_greedy",
    "solve_remote",
    "solve_sa",
]

SOLVER_NAMES = ("exhaustive", "sa", "greedy", "decomposed", "remote")


def _remote(q, cfg=None, *, endpoint: str):
    return solve_remote(q, endpoint, cfg)


def get_solver(name: str, endpoint: str | None = None, inner: str = "exhaustive") -> Solver:
    """Solver callable by name; ``remote`` needs ``endpoint``."""
    if name == "exhaustive":
        return solve_exhaustive
    if name == "sa":
        return solve_sa
    if name == "greedy":
        return solve_greedy
    if name == "decomposed":
        return partial(solve_decomposed, inner=get_solver(inner))
    if name == "remote":
        if not endpoint:
            raise ValueError("the remote solver needs an endpoint")
        return partial(_remote, endpoint=endpoint)
    raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVER_NAMES)}")
