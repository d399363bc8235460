"""The adaptive finite element DtN loop and the uniform-refinement study."""

from __future__ import annotations

import enum
import logging
import math
import time
from dataclasses import dataclass
from typing import Callable, ClassVar, List, Optional, Sequence

import numpy as np

from .analytic import Evaluator, h1_error, h1_norm_region
from .assembly import DiscreteField, LinearSystem, assemble_system, solve
from .dtn import (
    DtnOperator,
    build_dtn_operator,
    select_truncation,
    trace_coefficients,
    trace_norm,
)
from .estimator import ErrorIndicators, indicators
from .exceptions import StagnationError
from .mesh import (
    DEFAULT_MIN_ANGLE,
    Mesh,
    bisect,
    build_initial_mesh,
    min_angle,
    structured_mesh,
)
from .models import BaseModel, KeyMapping, ProblemSpec
from .space import DofMap, build_dof_map

_LOGGER = logging.getLogger(__name__)

STAGNATION_WINDOW = 3

STAGNATION_RATIO = 0.99


@dataclass(frozen=True)
class AdaptConfig(BaseModel["AdaptConfig"]):
    """Parameters of the adaptive loop."""

    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {
        "tolerance": "tolerance",
        "tau": "tau",
        "dtn_tol": "dtn_tol",
        "max_iterations": "max_iterations",
        "max_dof": "max_dof",
        "h0": "h0",
        "min_angle": "min_angle",
        "retighten_dtn": "retighten_dtn",
    }

    tolerance: float
    tau: float = 0.5
    dtn_tol: float = 1e-8
    max_iterations: int = 50
    max_dof: int = 200_000
    h0: float = 0.1
    min_angle: float = DEFAULT_MIN_ANGLE
    retighten_dtn: bool = False
    num_threads: int = 1

    def __post_init__(self) -> None:
        if not self.tolerance > 0.0:
            raise ValueError("tolerance must be positive")
        if not 0.0 < self.tau < 1.0:
            raise ValueError("tau out of (0,1)")
        if not self.dtn_tol > 0.0:
            raise ValueError("dtn_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.max_dof < 1:
            raise ValueError("max_dof must be positive")
        if not self.h0 > 0.0:
            raise ValueError("h0 must be positive")


@dataclass(frozen=True)
class IterationRecord(BaseModel["IterationRecord"]):
    """One solve of the adaptive loop, as written to the convergence table."""

    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {
        "iter": "iteration",
        "dof": "dof",
        "N": "N",
        "eps_N": "eps_N",
        "eps_h": "eps_h",
        "e_h": "e_h",
        "seconds": "seconds",
    }

    iteration: int
    dof: int
    N: int
    eps_N: float
    eps_h: float
    e_h: Optional[float] = None
    seconds: float = 0.0

    @property
    def effectivity(self) -> Optional[float]:
        if self.e_h is None or self.e_h == 0.0:
            return None
        return self.eps_h / self.e_h

    @classmethod
    def from_row(cls, row: dict) -> "IterationRecord":
        """Parse one convergence table row of strings."""
        return cls(
            iteration=int(row["iter"]),
            dof=int(row["dof"]),
            N=int(row["N"]),
            eps_N=float(row["eps_N"]),
            eps_h=float(row["eps_h"]),
            e_h=float(row["e_h"]) if row["e_h"] not in ("", None) else None,
            seconds=float(row["seconds"]),
        )

    @classmethod
    def columns(cls) -> List[str]:
        """Convergence table header, in column order."""
        return list(cls._KEY_TO_MODEL_MAPPINGS)

    def to_row(self) -> dict:
        return {
            key: getattr(self, attr)
            for key, attr in self._KEY_TO_MODEL_MAPPINGS.items()
        }


class TerminationCause(str, enum.Enum):
    """Why the adaptive loop stopped."""

    TOLERANCE = "tolerance"
    MAX_ITERATIONS = "max_iterations"
    MAX_DOF = "max_dof"


@dataclass(frozen=True, eq=False)
class SolveStep:
    """Everything produced by one solve on one mesh."""

    mesh: Mesh
    dofmap: DofMap
    dtn: DtnOperator
    system: LinearSystem
    field: DiscreteField
    indicators: ErrorIndicators


@dataclass(eq=False)
class AdaptResult:
    """Records of an adaptive run together with its final state."""

    records: List[IterationRecord]
    final: SolveStep
    cause: TerminationCause

    @property
    def mesh(self) -> Mesh:
        return self.final.mesh

    @property
    def field(self) -> DiscreteField:
        return self.final.field


@dataclass(frozen=True)
class StudyRecord:
    """One level of a uniform-refinement study."""

    omega: float
    level: int
    h: float
    dof: int
    e_h: float
    rate: Optional[float] = None


def mark(eta: Sequence[float], tau: float) -> np.ndarray:
    """Maximum strategy: every K with η_K > τ max η.

    Returns
    -------
    numpy.ndarray
        Sorted triangle indices; empty when every indicator vanishes.
    """
    eta = np.asarray(eta, dtype=float)
    if eta.size == 0:
        raise ValueError("no indicators to mark")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau out of (0,1)")
    return np.nonzero(eta > tau * eta.max())[0]


def incident_norm(problem: ProblemSpec) -> float:
    return h1_norm_region(problem.wave, problem.medium, problem.area)


def choose_truncation(problem: ProblemSpec, dtn_tol: float):
    """Truncation order for ``problem`` with b′ = max f."""
    return select_truncation(
        problem.medium,
        problem.wave.theta,
        problem.period,
        problem.b,
        problem.profile.max_height,
        dtn_tol,
        incident_norm(problem),
        kind=problem.wave.kind,
    )


def solve_on_mesh(
    problem: ProblemSpec,
    mesh: Mesh,
    N: int,
    num_threads: int = 1,
    dofmap: Optional[DofMap] = None,
) -> SolveStep:
    """Assemble, solve and estimate on one mesh."""
    qp = problem.qp
    if dofmap is None:
        dofmap = build_dof_map(mesh, qp)
    dtn = build_dtn_operator(mesh, dofmap, problem.medium, qp, N)
    system = assemble_system(
        mesh, dofmap, problem.medium, problem.wave, dtn, num_threads
    )
    solution = solve(system)
    coefficients = trace_coefficients(dofmap, solution.full(), dtn)
    _LOGGER.debug(
        "trace on y=b: H^1/2 norm %.4e", trace_norm(dtn, coefficients)
    )
    estimate = indicators(
        mesh, dofmap, solution, dtn, problem.medium, qp, coefficients
    )
    return SolveStep(mesh, dofmap, dtn, system, solution, estimate)


def _stagnated(records: List[IterationRecord]) -> bool:
    if len(records) <= STAGNATION_WINDOW:
        return False
    earlier = records[-1 - STAGNATION_WINDOW].eps_h
    return records[-1].eps_h > STAGNATION_RATIO * earlier


def adaptive_solve(
    problem: ProblemSpec,
    config: AdaptConfig,
    exact: Optional[Evaluator] = None,
    callback: Optional[Callable[[IterationRecord, SolveStep], None]] = None,
    mesh: Optional[Mesh] = None,
) -> AdaptResult:
    """Run solve, estimate, mark and refine until ε_h ≤ ε.

    Parameters
    ----------
    problem : ProblemSpec
    config : AdaptConfig
    exact : Evaluator, optional
        Exact scattered field; when given every record carries e_h.
    callback : Callable, optional
        Called with each record and its solve step (snapshots, progress).
    mesh : Mesh, optional
        Starting mesh instead of the one built from ``config.h0``.

    Returns
    -------
    AdaptResult

    Raises
    ------
    StagnationError
        If ε_h drops by less than 1% over three iterations or every
        indicator vanishes above the tolerance.
    """
    N, eps_N = choose_truncation(problem, config.dtn_tol)
    dtn_tol = config.dtn_tol
    if mesh is None:
        mesh = build_initial_mesh(
            problem.profile, problem.b, config.h0, config.min_angle
        )
    records: List[IterationRecord] = []
    dofmap = None
    cause = TerminationCause.TOLERANCE

    for iteration in range(config.max_iterations):
        started = time.perf_counter()
        if config.retighten_dtn and records:
            tightened = min(dtn_tol, 0.1 * records[-1].eps_h)
            if tightened < dtn_tol:
                dtn_tol = tightened
                N, eps_N = choose_truncation(problem, dtn_tol)
        step = solve_on_mesh(problem, mesh, N, config.num_threads, dofmap)
        e_h = None
        if exact is not None:
            e_h = h1_error(mesh, step.field.full(), exact)
        record = IterationRecord(
            iteration=iteration,
            dof=step.dofmap.size,
            N=N,
            eps_N=eps_N,
            eps_h=step.indicators.eps_h,
            e_h=e_h,
            seconds=time.perf_counter() - started,
        )
        records.append(record)
        _LOGGER.info(
            "iter %d: dof=%d N=%d eps_h=%.4e e_h=%s",
            iteration,
            record.dof,
            N,
            record.eps_h,
            "-" if e_h is None else f"{e_h:.4e}",
        )
        if callback is not None:
            callback(record, step)

        if record.eps_h <= config.tolerance:
            cause = TerminationCause.TOLERANCE
            break
        if iteration + 1 >= config.max_iterations:
            cause = TerminationCause.MAX_ITERATIONS
            break
        if _stagnated(records):
            raise StagnationError(
                f"eps_h fell by less than 1% over {STAGNATION_WINDOW}"
                " iterations",
                records,
            )
        marks = mark(step.indicators.eta, config.tau)
        if marks.size == 0:
            raise StagnationError(
                "all indicators vanish while eps_h is above tolerance", records
            )
        refined = bisect(mesh, marks)
        if min_angle(refined) < config.min_angle:
            _LOGGER.warning(
                "refined mesh has minimum angle %.2f deg below %.2f deg",
                min_angle(refined),
                config.min_angle,
            )
        dofmap = build_dof_map(refined, problem.qp)
        if dofmap.size > config.max_dof:
            cause = TerminationCause.MAX_DOF
            break
        mesh = refined

    _LOGGER.info("adaptive loop stopped: %s", cause.value)
    return AdaptResult(records=records, final=step, cause=cause)


def uniform_study(
    problem: ProblemSpec,
    divisions: Sequence[int],
    dtn_tol: float = 1e-8,
    exact: Optional[Evaluator] = None,
    num_threads: int = 1,
) -> List[StudyRecord]:
    """Solve on a sequence of structured meshes with Λ/d columns.

    Rows scale with the columns of the first level, so doubling ``d``
    gives nested meshes of one fixed shape. The rate between consecutive
    levels is log(e_prev/e)/log(h_prev/h). Without an exact field the
    estimate ε_h stands in for e_h.
    """
    N, _ = choose_truncation(problem, dtn_tol)
    depth = problem.b - problem.profile.min_height
    out: List[StudyRecord] = []
    if not divisions:
        return out
    d0 = divisions[0]
    rows0 = max(1, math.ceil(d0 * depth / problem.period - 1e-9))
    for level, d in enumerate(divisions):
        h = problem.period / d
        ny = max(1, round(rows0 * d / d0))
        mesh = structured_mesh(problem.profile, problem.b, d, ny)
        step = solve_on_mesh(problem, mesh, N, num_threads)
        if exact is not None:
            error = h1_error(mesh, step.field.full(), exact)
        else:
            error = step.indicators.eps_h
        rate = None
        if out and error > 0.0 and out[-1].e_h > 0.0:
            rate = math.log(out[-1].e_h / error) / math.log(out[-1].h / h)
        record = StudyRecord(
            omega=problem.medium.omega,
            level=level,
            h=h,
            dof=step.dofmap.size,
            e_h=error,
            rate=rate,
        )
        _LOGGER.info(
            "study omega=%g level %d: h=%.4g dof=%d e_h=%.4e rate=%s",
            record.omega,
            level,
            h,
            record.dof,
            error,
            "-" if rate is None else f"{rate:.3f}",
        )
        out.append(record)
    return out
