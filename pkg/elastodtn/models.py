"""Shared value types: surface, medium, incidence and the key-mapped base."""

from __future__ import annotations

import enum
import math
from dataclasses import MISSING, dataclass, field, fields
from typing import (
    Any,
    ClassVar,
    Dict,
    Generic,
    Sequence,
    Tuple,
    TypeVar,
)

import numpy as np

from .exceptions import ConfigError, MediumError, ProfileError

ExternalKey = TypeVar("ExternalKey", bound=str)

ModelAttr = TypeVar("ModelAttr", bound=str)

KeyMapping = Dict[ExternalKey, ModelAttr]

ModelT = TypeVar("ModelT", bound="BaseModel")


class BaseModel(Generic[ModelT]):
    """Base model built from a flat mapping of external keys."""

    _KEY_TO_MODEL_MAPPINGS: ClassVar[KeyMapping] = {}

    @classmethod
    def from_dict(
        cls,
        data: Dict[str, Any],
        source: str = "<dict>",
        section: str = "",
    ) -> ModelT:
        """Create a ModelT object from a dictionary.

        Unknown keys are rejected and missing required keys are reported by
        their dotted path, so a typo in a run file never passes silently.

        Raises
        ------
        ConfigError
            If a key is unknown or a required key is missing.
        """
        prefix = f"{section}." if section else ""
        unknown = sorted(set(data) - set(cls._KEY_TO_MODEL_MAPPINGS))
        if unknown:
            raise ConfigError(source, prefix + unknown[0], "unknown key")

        required = {
            f.name
            for f in fields(cls)  # type: ignore[arg-type]
            if f.init
            and f.default is MISSING
            and f.default_factory is MISSING  # type: ignore[misc]
        }
        kwargs = {}
        for key, value in cls._KEY_TO_MODEL_MAPPINGS.items():
            if key in data:
                kwargs[value] = data[key]
            elif value in required:
                raise ConfigError(source, prefix + key, "missing key")
        return cls(**kwargs)  # type: ignore


@dataclass(frozen=True)
class SurfaceProfile:
    """Piecewise-linear periodic surface y = f(x) over one period."""

    breakpoints: Tuple[Tuple[float, float], ...]

    def __post_init__(self) -> None:
        points = tuple(
            (float(x), float(y)) for x, y in self.breakpoints  # type: ignore
        )
        object.__setattr__(self, "breakpoints", points)
        if len(points) < 2:
            raise ProfileError("a profile needs at least two breakpoints")
        if points[0][0] != 0.0:
            raise ProfileError(
                f"first breakpoint must sit at x=0, got x={points[0][0]}"
            )
        xs = np.array([p[0] for p in points])
        steps = np.diff(xs)
        if np.any(steps <= 0.0):
            bad = int(np.argmax(steps <= 0.0)) + 1
            raise ProfileError(
                f"breakpoint x values must increase strictly (index {bad})"
            )
        if points[0][1] != points[-1][1]:
            raise ProfileError(
                f"profile is not periodic: f(0)={points[0][1]} !="
                f" f(period)={points[-1][1]}"
            )

    @classmethod
    def flat(cls, period: float, height: float = 0.0) -> "SurfaceProfile":
        """Flat surface f = height."""
        return cls(((0.0, height), (period, height)))

    @property
    def period(self) -> float:
        """Period Λ, the x value of the last breakpoint."""
        return self.breakpoints[-1][0]

    @property
    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.breakpoints])

    @property
    def ys(self) -> np.ndarray:
        return np.array([p[1] for p in self.breakpoints])

    @property
    def max_height(self) -> float:
        return float(self.ys.max())

    @property
    def min_height(self) -> float:
        return float(self.ys.min())

    @property
    def is_flat(self) -> bool:
        return bool(np.all(self.ys == self.ys[0]))

    def __call__(self, x: "float | np.ndarray") -> np.ndarray:
        return np.interp(x, self.xs, self.ys)

    def check_below(self, b: float) -> None:
        """Raise ProfileError unless the surface lies strictly below y=b."""
        if self.max_height >= b:
            raise ProfileError(
                f"max f = {self.max_height} must lie strictly below b = {b}"
            )

    def area_below(self, b: float) -> float:
        """Area of Ω = {f(x) < y < b} over one period."""
        xs, ys = self.xs, self.ys
        under = float(np.sum(0.5 * (ys[1:] + ys[:-1]) * np.diff(xs)))
        return b * self.period - under

    def corners(self, reentrant_only: bool = False) -> np.ndarray:
        """Interior breakpoints where the slope changes.

        A corner is re-entrant for the domain above the surface when the
        slope decreases across it (a peak of f).
        """
        xs, ys = self.xs, self.ys
        slopes = np.diff(ys) / np.diff(xs)
        turn = np.diff(slopes)
        keep = turn < 0.0 if reentrant_only else turn != 0.0
        idx = np.nonzero(keep)[0] + 1
        return np.column_stack([xs[idx], ys[idx]])


@dataclass(frozen=True)
class ElasticMedium:
    """Homogeneous isotropic medium with unit density."""

    lam: float
    mu: float
    omega: float

    def __post_init__(self) -> None:
        if not self.mu > 0.0:
            raise MediumError(f"mu must be positive, got {self.mu}")
        if not self.lam + self.mu > 0.0:
            raise MediumError(
                f"lambda + mu must be positive, got {self.lam + self.mu}"
            )
        if not self.omega > 0.0:
            raise MediumError(f"omega must be positive, got {self.omega}")

    @property
    def kappa_p(self) -> float:
        """Compressional wavenumber κ₁ = ω / (λ + 2μ)^{1/2}."""
        return self.omega / math.sqrt(self.lam + 2.0 * self.mu)

    @property
    def kappa_s(self) -> float:
        """Shear wavenumber κ₂ = ω / μ^{1/2}."""
        return self.omega / math.sqrt(self.mu)


class WaveKind(str, enum.Enum):
    """Polarization of the incident plane wave."""

    COMPRESSIONAL = "compressional"
    SHEAR = "shear"


@dataclass(frozen=True)
class IncidentWave:
    """Incident plane wave impinging from above at angle theta."""

    kind: WaveKind
    theta: float
    amplitude: complex = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", WaveKind(self.kind))
        if not -math.pi / 2 < self.theta < math.pi / 2:
            raise ValueError(
                f"incident angle must lie in (-pi/2, pi/2), got {self.theta}"
            )

    @property
    def direction(self) -> np.ndarray:
        """Propagation direction d = (sin θ, -cos θ)."""
        return np.array([math.sin(self.theta), -math.cos(self.theta)])

    @property
    def direction_perp(self) -> np.ndarray:
        """Shear polarization d⊥ = (cos θ, sin θ)."""
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    @property
    def polarization(self) -> np.ndarray:
        if self.kind is WaveKind.COMPRESSIONAL:
            return self.direction
        return self.direction_perp

    def wavenumber(self, medium: ElasticMedium) -> float:
        if self.kind is WaveKind.COMPRESSIONAL:
            return medium.kappa_p
        return medium.kappa_s

    def alpha(self, medium: ElasticMedium) -> float:
        """Fundamental quasi-periodicity wavenumber α = κ sin θ."""
        return self.wavenumber(medium) * math.sin(self.theta)


@dataclass(frozen=True)
class QuasiPeriodicParams:
    """Quasi-periodicity u(Λ, y) = e^{iαΛ} u(0, y)."""

    alpha: float
    period: float
    phase: complex = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "phase", complex(np.exp(1j * self.alpha * self.period))
        )

    @classmethod
    def from_wave(
        cls, wave: IncidentWave, medium: ElasticMedium, period: float
    ) -> "QuasiPeriodicParams":
        return cls(wave.alpha(medium), period)


@dataclass(frozen=True)
class ProblemSpec:
    """Everything that defines one grating scattering problem."""

    profile: SurfaceProfile
    b: float
    medium: ElasticMedium
    wave: IncidentWave

    def __post_init__(self) -> None:
        self.profile.check_below(self.b)

    @property
    def period(self) -> float:
        return self.profile.period

    @property
    def qp(self) -> QuasiPeriodicParams:
        return QuasiPeriodicParams.from_wave(
            self.wave, self.medium, self.period
        )

    @property
    def area(self) -> float:
        return self.profile.area_below(self.b)


def as_points(points: Sequence[Sequence[float]]) -> np.ndarray:
    """Coerce a point or list of points into an (n, 2) float array."""
    arr = np.asarray(points, dtype=float)
    return arr.reshape(-1, 2)
