"""Plane waves, the flat-surface closed-form solution and error norms."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .mesh import Mesh, shape_gradients
from .models import ElasticMedium, IncidentWave, WaveKind, as_points

_LOGGER = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
"""Maps points (n, 2) to values (n, 2) and gradients (n, 2, 2)."""

# Symmetric triangle rules: (weight, barycentric orbit generator) rows.
_DUNAVANT = {
    4: (
        (0.223381589678011, (0.108103018168070, 0.445948490915965)),
        (0.109951743655322, (0.816847572980459, 0.091576213509771)),
    ),
    5: (
        (0.225, None),
        (0.132394152788506, (0.059715871789770, 0.470142064105115)),
        (0.125939180544827, (0.797426985353087, 0.101286507323456)),
    ),
}

QUADRATURE_CHECK = 0.01


def triangle_rule(degree: int) -> Tuple[np.ndarray, np.ndarray]:
    """Barycentric points (q, 3) and weights summing to one."""
    if degree not in _DUNAVANT:
        raise ValueError(f"no triangle rule of degree {degree}")
    points, weights = [], []
    for weight, orbit in _DUNAVANT[degree]:
        if orbit is None:
            points.append((1 / 3, 1 / 3, 1 / 3))
            weights.append(weight)
            continue
        a, b = orbit
        for perm in ((a, b, b), (b, a, b), (b, b, a)):
            points.append(perm)
            weights.append(weight)
    return np.array(points), np.array(weights)


def incident_field(
    wave: IncidentWave, medium: ElasticMedium, points: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """Value and gradient of the incident plane wave.

    Parameters
    ----------
    wave : IncidentWave
    medium : ElasticMedium
    points : numpy.ndarray
        One point or an (n, 2) array.

    Returns
    -------
    values : numpy.ndarray
        p e^{iκ x·d} with p = d (P wave) or d⊥ (S wave), shape (n, 2).
    gradients : numpy.ndarray
        ``gradients[k, a, j]`` = ∂_j u_a, shape (n, 2, 2).
    """
    xy = as_points(points)
    kappa = wave.wavenumber(medium)
    d = wave.direction
    phase = np.exp(1j * kappa * (xy @ d)) * wave.amplitude
    values = phase[:, None] * wave.polarization[None, :]
    gradients = 1j * kappa * values[:, :, None] * d[None, None, :]
    return values, gradients


def plane_wave_h1_norm(area: float, kappa: float) -> float:
    """‖u‖_{H¹} of a unit plane wave over a region of the given area."""
    return math.sqrt(area * (1.0 + kappa * kappa))


def h1_norm_region(wave: IncidentWave, medium: ElasticMedium, area: float) -> float:
    """‖u^inc‖_{H¹(Ω)} in closed form, with Ω of the given area."""
    return plane_wave_h1_norm(area, wave.wavenumber(medium)) * abs(
        wave.amplitude
    )


@dataclass(frozen=True)
class ExactFlatSolution:
    """Reflected P and S waves of a P wave hitting the rigid plane y = 0."""

    alpha: float
    beta: float
    gamma: float
    r_p: float
    r_s: float
    kappa_p: float
    amplitude: float = 1.0

    @classmethod
    def from_problem(
        cls, medium: ElasticMedium, wave: IncidentWave
    ) -> "ExactFlatSolution":
        if wave.kind is not WaveKind.COMPRESSIONAL:
            raise ValueError("the closed form covers compressional incidence")
        kappa = medium.kappa_p
        alpha = kappa * math.sin(wave.theta)
        beta = kappa * math.cos(wave.theta)
        gamma = math.sqrt(medium.kappa_s ** 2 - alpha ** 2)
        denom = alpha ** 2 + beta * gamma
        return cls(
            alpha=alpha,
            beta=beta,
            gamma=gamma,
            r_p=(alpha ** 2 - beta * gamma) / denom,
            r_s=2.0 * alpha * beta / denom,
            kappa_p=kappa,
            amplitude=wave.amplitude,
        )

    def _waves(self):
        k = self.kappa_p / self.amplitude
        yield -self.r_p / k * np.array([self.alpha, self.beta]), np.array(
            [self.alpha, self.beta]
        )
        yield -self.r_s / k * np.array([self.gamma, -self.alpha]), np.array(
            [self.alpha, self.gamma]
        )

    def evaluate(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Scattered field and its gradient at ``points``."""
        xy = as_points(points)
        values = np.zeros((len(xy), 2), dtype=complex)
        gradients = np.zeros((len(xy), 2, 2), dtype=complex)
        for amplitude, wavevector in self._waves():
            term = np.exp(1j * (xy @ wavevector))[:, None] * amplitude[None, :]
            values += term
            gradients += 1j * term[:, :, None] * wavevector[None, None, :]
        return values, gradients

    def __call__(self, points: np.ndarray):
        return self.evaluate(points)

    def traction(self, medium: ElasticMedium, points: np.ndarray) -> np.ndarray:
        """ℬu = μ∂_y u + (λ+μ)(0, 1)ᵀ∇·u of the scattered field."""
        _, grads = self.evaluate(points)
        out = medium.mu * grads[:, :, 1]
        out[:, 1] += (medium.lam + medium.mu) * (
            grads[:, 0, 0] + grads[:, 1, 1]
        )
        return out

    def mode_zero(self, b: float) -> np.ndarray:
        """Fourier coefficient of the n = 0 mode of the trace on y = b."""
        values, _ = self.evaluate(np.array([[0.0, b]]))
        return values[0]


def exact_scattered_flat(
    params: ExactFlatSolution, medium: ElasticMedium, point: np.ndarray
) -> np.ndarray:
    """Scattered displacement at one point (``medium`` kept for symmetry)."""
    del medium
    values, _ = params.evaluate(point)
    return values[0] if np.ndim(point) == 1 else values


def interpolate(mesh: Mesh, exact: Evaluator) -> np.ndarray:
    """Nodal interpolant of ``exact``, shape (num_vertices, 2)."""
    values, _ = exact(mesh.vertices)
    return values


def _error_integrals(
    mesh: Mesh, full: np.ndarray, exact: Evaluator, degree: int
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    bary, weights = triangle_rule(degree)
    corners = mesh.vertices[mesh.triangles]
    grads, areas = shape_gradients(corners)
    nodal = np.asarray(full, dtype=complex).reshape(-1, 2)[mesh.triangles]
    grad_h = np.einsum("tia,tij->taj", nodal, grads)
    qpoints = np.einsum("qi,tid->tqd", bary, corners)
    u_h = np.einsum("qi,tia->tqa", bary, nodal)
    values, gradients = exact(qpoints.reshape(-1, 2))
    nt, nq = len(corners), len(weights)
    values = values.reshape(nt, nq, 2)
    gradients = gradients.reshape(nt, nq, 2, 2)
    err = values - u_h
    derr = gradients - grad_h[:, None, :, :]
    scale = areas[:, None] * weights[None, :]
    l2 = np.sum(scale * np.sum(np.abs(err) ** 2, axis=2))
    semi = np.sum(scale * np.sum(np.abs(derr) ** 2, axis=(2, 3)))
    div = np.sum(scale * np.abs(derr[:, :, 0, 0] + derr[:, :, 1, 1]) ** 2)
    return l2, semi, div


def _verified(
    mesh: Mesh, full: np.ndarray, exact: Evaluator, combine
) -> float:
    value = combine(*_error_integrals(mesh, full, exact, 4))
    check = combine(*_error_integrals(mesh, full, exact, 5))
    if value > 0.0 and abs(check - value) > QUADRATURE_CHECK * value:
        _LOGGER.warning(
            "error quadrature unresolved: degree 4 gives %.6e, degree 5 %.6e",
            value,
            check,
        )
    return math.sqrt(value)


def h1_error(mesh: Mesh, full: np.ndarray, exact: Evaluator) -> float:
    """e_h = ‖u − u_h‖_{H¹(Ω)} by degree-4 quadrature, checked at degree 5.

    Parameters
    ----------
    mesh : Mesh
    full : numpy.ndarray
        Per-vertex discrete field, shape (num_vertices, 2).
    exact : Evaluator
        Returns exact values and gradients at arbitrary points.
    """
    return _verified(mesh, full, exact, lambda l2, semi, div: l2 + semi)


def energy_error(
    mesh: Mesh, full: np.ndarray, exact: Evaluator, medium: ElasticMedium
) -> float:
    """Weighted error (μ‖∇e‖² + (λ+μ)‖∇·e‖² + ω²‖e‖²)^{1/2}."""

    def combine(l2, semi, div):
        return (
            medium.mu * semi
            + (medium.lam + medium.mu) * div
            + medium.omega ** 2 * l2
        )

    return _verified(mesh, full, exact, combine)
