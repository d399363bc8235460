"""ElastoDtN - adaptive finite elements for elastic scattering by periodic gratings."""

from .adapt import AdaptConfig, AdaptResult, adaptive_solve, uniform_study
from .config import RunConfig, load_config, parse_config
from .models import (
    ElasticMedium,
    IncidentWave,
    ProblemSpec,
    QuasiPeriodicParams,
    SurfaceProfile,
    WaveKind,
)

__all__ = [
    "AdaptConfig",
    "AdaptResult",
    "ElasticMedium",
    "IncidentWave",
    "ProblemSpec",
    "QuasiPeriodicParams",
    "RunConfig",
    "SurfaceProfile",
    "WaveKind",
    "adaptive_solve",
    "load_config",
    "parse_config",
    "uniform_study",
]
