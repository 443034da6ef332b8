from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from ..qubo import QuboProblem, Sample, energy

ENERGY_TOL = 1e-9


class SolverError(RuntimeError):
    """Base class for solver failures."""


class ScheduleError(ValueError):
    """Invalid annealing schedule or solver configuration."""


class EnergyMismatchError(SolverError):
    """A solver reported an energy that does not match its assignment."""


@dataclass(frozen=True)
class SolverConfig:
    """Knobs shared by all solver backends.

    ``t_start``/``t_end`` left as ``None`` resolve against the problem:
    ``t_start = max|coef| * n`` and ``t_end = 1e-3 * max|coef|``. The
    temperature falls geometrically over ``sweeps`` sweeps.
    """

    seed: int = 0
    num_restarts: int = 10
    sweeps: int = 1000
    t_start: Optional[float] = None
    t_end: Optional[float] = None
    subproblem_size: int = 12
    time_budget: Optional[float] = None
    max_passes: int = 100
    workers: int = 1
    debug: bool = False

    def __post_init__(self):
        if self.num_restarts < 1:
            raise ScheduleError(f"num_restarts must be >= 1, got {self.num_restarts}")
        if self.sweeps < 1:
            raise ScheduleError(f"sweeps must be >= 1, got {self.sweeps}")
        if self.subproblem_size < 2:
            raise ScheduleError(f"subproblem_size must be >= 2, got {self.subproblem_size}")
        if self.workers < 1:
            raise ScheduleError(f"workers must be >= 1, got {self.workers}")
        if self.time_budget is not None and self.time_budget <= 0:
            raise ScheduleError("time_budget must be positive")
        if self.t_end is not None and self.t_end <= 0:
            raise ScheduleError(f"t_end must be > 0, got {self.t_end}")
        if self.t_start is not None and self.t_end is not None and not self.t_start > self.t_end:
            raise ScheduleError(f"need t_start > t_end, got {self.t_start} <= {self.t_end}")

    def temperatures(self, q: QuboProblem) -> np.ndarray:
        scale = q.max_abs_coefficient() or 1.0
        t_start = scale * max(q.n, 1) if self.t_start is None else self.t_start
        t_end = 1e-3 * scale if self.t_end is None else self.t_end
        if not t_start > t_end > 0:
            raise ScheduleError(f"need t_start > t_end > 0, got {t_start}, {t_end}")
        if self.sweeps == 1:
            return np.array([t_end])
        ratio = (t_end / t_start) ** (1.0 / (self.sweeps - 1))
        return t_start * ratio ** np.arange(self.sweeps)

    def replace(self, **changes) -> "SolverConfig":
        return SolverConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolveResult:
    best: Sample
    energy_history: list[float] = field(default_factory=list)
    evaluations: int = 0
    wall_time: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def energy(self) -> float:
        return self.best.energy

    @property
    def assignment(self) -> np.ndarray:
        return self.best.assignment


Solver = Callable[[QuboProblem, SolverConfig], SolveResult]


def checked_sample(q: QuboProblem, assignment, claimed: Optional[float] = None, tol: float = ENERGY_TOL) -> Sample:
    """Sample with its energy recomputed from scratch.

    If ``claimed`` is given it must agree with the recomputed energy.
    """
    e = energy(q, assignment)
    if claimed is not None and not math.isclose(e, claimed, rel_tol=0.0, abs_tol=tol * max(1.0, abs(e))):
        raise EnergyMismatchError(f"claimed energy {claimed!r} but assignment evaluates to {e!r}")
    return Sample(assignment, e)


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    """Independent stream for one restart."""
    return np.random.default_rng([seed, restart])
