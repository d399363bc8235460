""" Shared problems and meshes. """

import math

import pytest

from elastodtn.mesh import Mesh, build_initial_mesh, structured_mesh
from elastodtn.models import (
    ElasticMedium,
    IncidentWave,
    ProblemSpec,
    SurfaceProfile,
    WaveKind,
)

PERIOD = 0.5
B = 0.25
THETA = math.pi / 3

CORNER_PROFILE = (
    (0.0, 0.0),
    (0.125, 0.1),
    (0.25, 0.0),
    (0.375, 0.1),
    (0.5, 0.0),
)


def flat_problem(omega: float = 2.0) -> ProblemSpec:
    return ProblemSpec(
        SurfaceProfile.flat(PERIOD),
        B,
        ElasticMedium(2.0, 1.0, omega),
        IncidentWave(WaveKind.COMPRESSIONAL, THETA),
    )


@pytest.fixture(scope="module")
def example1() -> ProblemSpec:
    # flat rigid surface, lambda=2, mu=1, omega=2
    return flat_problem()


@pytest.fixture(scope="module")
def example2() -> ProblemSpec:
    return ProblemSpec(
        SurfaceProfile(CORNER_PROFILE),
        B,
        ElasticMedium(1.0, 2.0, 2.0),
        IncidentWave(WaveKind.COMPRESSIONAL, THETA),
    )


@pytest.fixture(scope="module")
def coarse_mesh(example1: ProblemSpec) -> Mesh:
    return build_initial_mesh(example1.profile, example1.b, 0.25)


@pytest.fixture(scope="module")
def grid_mesh(example1: ProblemSpec) -> Mesh:
    # 4 x 2 cells: 15 vertices, 5 on each of S and y=b
    return structured_mesh(example1.profile, example1.b, 4, 2)
