""" End-to-end convergence checks on the two reference gratings. """

import numpy as np
import pytest

from elastodtn.adapt import (
    AdaptConfig,
    AdaptResult,
    TerminationCause,
    adaptive_solve,
    uniform_study,
)
from elastodtn.analytic import ExactFlatSolution
from elastodtn.mesh import validate
from elastodtn.models import ProblemSpec

from .conftest import flat_problem

pytestmark = pytest.mark.slow

TARGET_DOF = 50_000
CORNER_DOF = 20_000
CORNER_RADIUS = 0.05
# eps_h may tick up by this fraction between consecutive iterations
MONOTONE_SLACK = 0.05


def _slope(records, key: str, count: int = 4) -> float:
    tail = records[-count:]
    dof = np.log([r.dof for r in tail])
    err = np.log([getattr(r, key) for r in tail])
    return float(np.polyfit(dof, err, 1)[0])


@pytest.fixture(scope="module")
def flat_exact(example1: ProblemSpec) -> ExactFlatSolution:
    return ExactFlatSolution.from_problem(example1.medium, example1.wave)


@pytest.fixture(scope="module", params=[2.0, 4.0], ids=["omega2", "omega4"])
def flat_run(request) -> AdaptResult:
    problem = flat_problem(request.param)
    exact = ExactFlatSolution.from_problem(problem.medium, problem.wave)
    config = AdaptConfig(tolerance=1e-12, h0=0.1, max_dof=TARGET_DOF)
    return adaptive_solve(problem, config, exact)


@pytest.fixture(scope="module")
def corner_run(example2: ProblemSpec) -> AdaptResult:
    config = AdaptConfig(tolerance=1e-12, h0=0.05, max_dof=CORNER_DOF)
    return adaptive_solve(example2, config)


def test_uniform_refinement_is_first_order(
    example1: ProblemSpec, flat_exact
) -> None:
    records = uniform_study(example1, [5, 10, 20, 40], exact=flat_exact)

    rates = [r.rate for r in records[1:]]
    assert len(rates) == 3
    assert all(0.85 <= rate <= 1.15 for rate in rates)


def test_flat_adaptive_run_converges(flat_run: AdaptResult) -> None:
    records = flat_run.records

    assert flat_run.cause is TerminationCause.MAX_DOF
    dofs = [r.dof for r in records]
    assert all(a < b for a, b in zip(dofs, dofs[1:]))
    assert flat_run.field.relative_residual <= 1e-10
    assert -0.6 <= _slope(records, "e_h") <= -0.4
    assert validate(flat_run.mesh) == []


def test_flat_estimate_decreases_every_iteration(flat_run: AdaptResult) -> None:
    estimates = [r.eps_h for r in flat_run.records]

    assert len(estimates) >= 5
    for before, after in zip(estimates, estimates[1:]):
        assert after <= before * (1.0 + MONOTONE_SLACK)
    assert estimates[-1] < estimates[0] / 4.0


def test_flat_estimator_is_reliable(flat_run: AdaptResult) -> None:
    ratios = [r.effectivity for r in flat_run.records[-5:]]
    median = float(np.median(ratios))

    assert all(median / 3.0 <= ratio <= 3.0 * median for ratio in ratios)


def test_corner_run_converges_optimally(corner_run: AdaptResult) -> None:
    records = corner_run.records

    assert corner_run.cause is TerminationCause.MAX_DOF
    assert -0.65 <= _slope(records, "eps_h") <= -0.35


def _mean_diameter_near(mesh, point: np.ndarray, radius: float) -> float:
    centroids = mesh.vertices[mesh.triangles].mean(axis=1)
    near = np.linalg.norm(centroids - point, axis=1) < radius
    assert near.any()
    return float(mesh.diameters[near].mean())


def test_corner_run_refines_near_the_peaks(
    example2: ProblemSpec, corner_run: AdaptResult
) -> None:
    mesh = corner_run.mesh
    overall = float(mesh.diameters.mean())
    corners = example2.profile.corners()
    peaks = example2.profile.corners(reentrant_only=True)

    assert len(corners) == 3 and len(peaks) == 2
    for corner in corners:
        ratio = _mean_diameter_near(mesh, corner, CORNER_RADIUS) / overall
        reentrant = any(np.allclose(corner, peak) for peak in peaks)
        assert ratio <= (0.6 if reentrant else 1.05)
    for peak in peaks:
        assert _mean_diameter_near(mesh, peak, 0.4 * CORNER_RADIUS) <= overall / 3.0
