"""Exceptions for the elastodtn solver."""

from typing import Any, List, Optional


class ElastoDtnError(Exception):
    """Base class for solver errors."""


class ProfileError(ElastoDtnError, ValueError):
    """Raised when a surface profile violates its invariants."""


class GeometryError(ElastoDtnError, ValueError):
    """Raised when the computational domain is degenerate."""


class MeshError(ElastoDtnError, ValueError):
    """Raised when a mesh cannot be used for assembly or refinement."""


class MediumError(ElastoDtnError, ValueError):
    """Raised when the Lamé parameters or frequency are inadmissible."""


class ResonanceError(ElastoDtnError, ValueError):
    """Raised when a Rayleigh mode sits at a resonance, |alpha_n| = kappa."""

    def __init__(self, n: Optional[int], alpha_n: float, kappa: float):
        self.n = n
        self.alpha_n = alpha_n
        self.kappa = kappa
        label = "" if n is None else f" for mode n={n}"
        super().__init__(
            f"resonance{label}: |alpha_n|={abs(alpha_n):.15g} matches"
            f" kappa={kappa:.15g}"
        )


class DtnMismatchError(ElastoDtnError, ValueError):
    """Raised when DtN moments and modes do not describe the same set."""


class SolverError(ElastoDtnError, RuntimeError):
    """Raised when the linear solve fails."""


class SingularSystemError(SolverError):
    """Raised when the sparse factorization is singular or ill conditioned."""

    def __init__(self, pivot_ratio: float, detail: str = "") -> None:
        self.pivot_ratio = pivot_ratio
        message = f"singular system (min/max pivot ratio {pivot_ratio:.3e})"
        if detail:
            message = f"{message}: {detail}"
        super().__init__(message)


class StagnationError(ElastoDtnError, RuntimeError):
    """Raised when the adaptive loop stops reducing the error estimate."""

    def __init__(self, message: str, records: Optional[List[Any]] = None):
        self.records = list(records or [])
        super().__init__(message)


class ConfigError(ElastoDtnError, ValueError):
    """Raised when a run configuration cannot be parsed or validated."""

    def __init__(self, path: str, key: str, message: str) -> None:
        self.path = path
        self.key = key
        where = f"{path}: {key}" if key else path
        super().__init__(f"{where}: {message}")
