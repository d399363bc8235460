"""Run configuration files.

A run file is TOML. Every section maps onto a model through its
``_KEY_TO_MODEL_MAPPINGS`` table; unknown keys are errors.

.. code-block:: toml

    mode = "adapt"

    [medium]
    lambda = 2.0
    mu = 1.0
    omega = 2.0

    [incidence]
    kind = "compressional"
    theta = 1.0471975511965976

    [geometry]
    period = 0.5
    b = 0.25
    profile = [[0.0, 0.0], [0.5, 0.0]]

    [adapt]
    tolerance = 0.05
"""

from __future__ import annotations

import enum
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar, Dict, List, Optional, Tuple

from .adapt import AdaptConfig
from .exceptions import ConfigError, ElastoDtnError
from .models import (
    BaseModel,
    ElasticMedium,
    IncidentWave,
    KeyMapping,
    ProblemSpec,
    SurfaceProfile,
    WaveKind,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

_LOGGER = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-2
"""Adaptive tolerance ε used when ``[adapt]`` omits ``tolerance``."""


class RunMode(str, enum.Enum):
    SOLVE = "solve"
    ADAPT = "adapt"
    STUDY = "study"


@dataclass(frozen=True)
class MediumSection(BaseModel["MediumSection"]):
    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {
        "lambda": "lam",
        "mu": "mu",
        "omega": "omega",
    }

    lam: float
    mu: float
    omega: float


@dataclass(frozen=True)
class IncidenceSection(BaseModel["IncidenceSection"]):
    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {
        "kind": "kind",
        "theta": "theta",
        "amplitude": "amplitude",
    }

    theta: float
    kind: str = WaveKind.COMPRESSIONAL.value
    amplitude: float = 1.0


@dataclass(frozen=True)
class GeometrySection(BaseModel["GeometrySection"]):
    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {
        "period": "period",
        "b": "b",
        "profile": "profile",
    }

    period: float
    b: float
    profile: Optional[List[List[float]]] = None


@dataclass(frozen=True)
class StudySection(BaseModel["StudySection"]):
    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {
        "divisions": "divisions",
        "omegas": "omegas",
    }

    divisions: Tuple[int, ...] = (5, 10, 20, 40)
    omegas: Optional[Tuple[float, ...]] = None


@dataclass(frozen=True)
class OutputsSection(BaseModel["OutputsSection"]):
    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {
        "directory": "directory",
        "vtk": "vtk",
        "csv": "csv",
        "matrix": "matrix",
        "snapshots": "snapshots",
    }

    directory: str = "out"
    vtk: bool = True
    csv: bool = True
    matrix: bool = False
    snapshots: bool = False


@dataclass(frozen=True)
class RunConfig:
    """A fully validated run file."""

    mode: RunMode
    problem: ProblemSpec
    adapt: AdaptConfig
    study: StudySection = field(default_factory=StudySection)
    outputs: OutputsSection = field(default_factory=OutputsSection)
    source: str = "<memory>"

    @property
    def medium(self) -> ElasticMedium:
        return self.problem.medium


_SECTIONS = ("medium", "incidence", "geometry", "adapt", "study", "outputs")


def _section(data: Dict[str, Any], name: str, source: str) -> Dict[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(source, name, "expected a table")
    return value


def _checked(source: str, key: str, build):
    """Run ``build`` and report any validation error against ``key``."""
    try:
        return build()
    except ConfigError:
        raise
    except (ValueError, TypeError, ElastoDtnError) as exc:
        raise ConfigError(source, key, str(exc)) from exc


def parse_config(data: Dict[str, Any], source: str = "<dict>") -> RunConfig:
    """Validate an already parsed TOML document.

    Raises
    ------
    ConfigError
        With the dotted key path of the first offending entry.
    """
    unknown = sorted(set(data) - set(_SECTIONS) - {"mode"})
    if unknown:
        raise ConfigError(source, unknown[0], "unknown key")
    mode = _checked(source, "mode", lambda: RunMode(data.get("mode", "adapt")))

    medium_data = MediumSection.from_dict(
        _section(data, "medium", source), source, "medium"
    )
    if not medium_data.mu > 0.0:
        raise ConfigError(source, "medium.mu", "mu must be positive")
    if not medium_data.lam + medium_data.mu > 0.0:
        raise ConfigError(source, "medium.lambda", "lambda + mu must be positive")
    if not medium_data.omega > 0.0:
        raise ConfigError(source, "medium.omega", "omega must be positive")
    medium = ElasticMedium(
        float(medium_data.lam), float(medium_data.mu), float(medium_data.omega)
    )

    incidence = IncidenceSection.from_dict(
        _section(data, "incidence", source), source, "incidence"
    )
    wave = _checked(
        source,
        "incidence.theta",
        lambda: IncidentWave(
            WaveKind(incidence.kind),
            float(incidence.theta),
            float(incidence.amplitude),
        ),
    )

    geometry = GeometrySection.from_dict(
        _section(data, "geometry", source), source, "geometry"
    )
    if geometry.profile is None:
        profile = _checked(
            source,
            "geometry.period",
            lambda: SurfaceProfile.flat(float(geometry.period)),
        )
    else:
        profile = _checked(
            source,
            "geometry.profile",
            lambda: SurfaceProfile(tuple(map(tuple, geometry.profile))),
        )
        if not math.isclose(profile.period, float(geometry.period)):
            raise ConfigError(
                source,
                "geometry.profile",
                f"last breakpoint x={profile.period} differs from period"
                f" {geometry.period}",
            )
    problem = _checked(
        source,
        "geometry.b",
        lambda: ProblemSpec(profile, float(geometry.b), medium, wave),
    )

    adapt_data = _section(data, "adapt", source)
    tau = adapt_data.get("tau", 0.5)
    if not isinstance(tau, (int, float)) or not 0.0 < tau < 1.0:
        raise ConfigError(source, "adapt.tau", "tau out of (0,1)")
    adapt = _checked(
        source,
        "adapt",
        lambda: AdaptConfig.from_dict(
            {"tolerance": DEFAULT_TOLERANCE, **adapt_data}, source, "adapt"
        ),
    )
    study_data = dict(_section(data, "study", source))
    for key in ("divisions", "omegas"):
        if key in study_data:
            study_data[key] = tuple(study_data[key])
    study = StudySection.from_dict(study_data, source, "study")
    if any(int(d) < 1 for d in study.divisions):
        raise ConfigError(source, "study.divisions", "divisions must be >= 1")
    outputs = OutputsSection.from_dict(
        _section(data, "outputs", source), source, "outputs"
    )
    _LOGGER.info(
        "loaded %s: kappa_p=%.6g kappa_s=%.6g",
        source,
        medium.kappa_p,
        medium.kappa_s,
    )
    return RunConfig(
        mode=mode,
        problem=problem,
        adapt=adapt,
        study=study,
        outputs=outputs,
        source=source,
    )


def load_config(path: "str | Path") -> RunConfig:
    """Read and validate a TOML run file.

    Raises
    ------
    ConfigError
        If the file cannot be read, is not valid TOML, or fails validation.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(str(path), "", f"cannot read file ({exc})") from exc
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(path), "", f"parse error: {exc}") from exc
    return parse_config(data, str(path))
