"""Residual a posteriori error indicators."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .assembly import DiscreteField
from .dtn import DtnOperator, evaluate_TN, trace_coefficients
from .mesh import BoundaryTag, Mesh, shape_gradients
from .models import ElasticMedium, QuasiPeriodicParams
from .space import DofMap

_LOGGER = logging.getLogger(__name__)

GAUSS_POINTS = 5

RICHARDSON_RTOL = 1e-8

FieldLike = Union[DiscreteField, np.ndarray]


@dataclass(frozen=True, eq=False)
class ErrorIndicators:
    """Per-triangle indicators η_K and the global estimate ε_h."""

    eta: np.ndarray
    eps_h: float
    residual_part: np.ndarray
    jump_part: np.ndarray

    @classmethod
    def from_parts(
        cls, residual_part: np.ndarray, jump_part: np.ndarray
    ) -> "ErrorIndicators":
        eta = residual_part + jump_part
        return cls(
            eta=eta,
            eps_h=float(np.sqrt(np.sum(eta ** 2))),
            residual_part=residual_part,
            jump_part=jump_part,
        )


def _full(field: FieldLike) -> np.ndarray:
    if isinstance(field, DiscreteField):
        return field.full()
    return np.asarray(field, dtype=complex).reshape(-1, 2)


def element_gradients(mesh: Mesh, full: np.ndarray) -> np.ndarray:
    """Constant gradient of the P1 field per triangle, ``G[t, a, j] = ∂_j u_a``."""
    grads, _ = shape_gradients(mesh.vertices[mesh.triangles])
    nodal = np.asarray(full, dtype=complex).reshape(-1, 2)[mesh.triangles]
    return np.einsum("tia,tij->taj", nodal, grads)


def traction(
    gradient: np.ndarray, normal: np.ndarray, medium: ElasticMedium
) -> np.ndarray:
    """μ(∇u)ν + (λ+μ)(∇·u)ν for stacks of gradients and normals."""
    gradient = np.asarray(gradient)
    normal = np.broadcast_to(np.asarray(normal, dtype=float), gradient.shape[:-1])
    div = gradient[..., 0, 0] + gradient[..., 1, 1]
    return medium.mu * np.einsum("...aj,...j->...a", gradient, normal) + (
        medium.lam + medium.mu
    ) * div[..., None] * normal


def element_residual(
    mesh: Mesh, full: np.ndarray, medium: ElasticMedium
) -> np.ndarray:
    """h_K ω² ‖u_h‖_{L²(K)} for every triangle.

    The P1 field has no second derivatives, so the Navier residual reduces
    to ω²u_h, integrated exactly with the P1 mass matrix.
    """
    nodal = np.asarray(full, dtype=complex).reshape(-1, 2)[mesh.triangles]
    squares = np.sum(np.abs(nodal) ** 2, axis=(1, 2)) + np.sum(
        np.abs(nodal.sum(axis=1)) ** 2, axis=1
    )
    l2 = np.sqrt(np.abs(mesh.areas) / 12.0 * squares)
    return mesh.diameters * medium.omega ** 2 * l2


def _outward_normals(mesh: Mesh, edges: np.ndarray, owners: np.ndarray):
    v = mesh.vertices
    a, b = v[mesh.edges[edges, 0]], v[mesh.edges[edges, 1]]
    d = b - a
    lengths = np.hypot(d[:, 0], d[:, 1])
    normal = np.column_stack([d[:, 1], -d[:, 0]]) / lengths[:, None]
    centroid = v[mesh.triangles[owners]].mean(axis=1)
    flip = np.sum(normal * (0.5 * (a + b) - centroid), axis=1) < 0.0
    normal[flip] *= -1.0
    return normal, lengths


def interior_jump(
    mesh: Mesh, full: np.ndarray, medium: ElasticMedium
) -> np.ndarray:
    """‖J_e‖_{L²(e)} per edge; zero on boundary edges.

    J_e is the sum of the two one-sided tractions with their own outward
    normals, constant along e for P1 fields.
    """
    out = np.zeros(len(mesh.edges))
    interior = np.nonzero(mesh.edge_triangles[:, 1] >= 0)[0]
    if interior.size == 0:
        return out
    k1 = mesh.edge_triangles[interior, 0]
    k2 = mesh.edge_triangles[interior, 1]
    normal, lengths = _outward_normals(mesh, interior, k1)
    G = element_gradients(mesh, full)
    jump = traction(G[k1] - G[k2], normal, medium)
    out[interior] = np.sqrt(lengths) * np.linalg.norm(jump, axis=1)
    return out


def _gauss(x0: np.ndarray, x1: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = np.polynomial.legendre.leggauss(GAUSS_POINTS)
    half = 0.5 * (x1 - x0)
    mid = 0.5 * (x1 + x0)
    return mid[:, None] + half[:, None] * nodes[None, :], half[:, None] * weights


def gamma_jump(
    mesh: Mesh,
    full: np.ndarray,
    medium: ElasticMedium,
    dtn: DtnOperator,
    coefficients: np.ndarray,
) -> np.ndarray:
    """‖2(𝒯_N u_h − ℬu_h)‖_{L²(e)} per edge on Γ; zero elsewhere.

    Each edge integral uses Gauss-Legendre quadrature and is repeated on the
    two halves of the edge; the halved value is kept and any disagreement
    above the tolerance is logged.
    """
    out = np.zeros(len(mesh.edges))
    top = mesh.edge_index(mesh.tagged_edges(BoundaryTag.TOP))
    if top.size == 0:
        return out
    owners = mesh.edge_triangles[top, 0]
    G = element_gradients(mesh, full)[owners]
    normal_traction = traction(G, np.array([0.0, 1.0]), medium)
    xs = mesh.vertices[mesh.edges[top]][:, :, 0]
    x0, x1 = xs.min(axis=1), xs.max(axis=1)

    def integrate(lo, hi, owner_rows):
        points, weights = _gauss(lo, hi)
        tn = evaluate_TN(dtn, coefficients, points.reshape(-1))
        tn = tn.reshape(points.shape + (2,))
        diff = 2.0 * (tn - normal_traction[owner_rows][:, None, :])
        return np.sum(weights * np.sum(np.abs(diff) ** 2, axis=2), axis=1)

    rows = np.arange(len(top))
    coarse = integrate(x0, x1, rows)
    mid = 0.5 * (x0 + x1)
    fine = integrate(x0, mid, rows) + integrate(mid, x1, rows)
    gap = np.abs(fine - coarse)
    unresolved = gap > RICHARDSON_RTOL * np.maximum(fine, 1e-300)
    if np.any(unresolved):
        _LOGGER.debug(
            "gamma jump quadrature: %d of %d edges differ by up to %.3e",
            int(unresolved.sum()),
            len(top),
            float(gap.max()),
        )
    out[top] = np.sqrt(fine)
    return out


def periodic_jump(
    mesh: Mesh,
    full: np.ndarray,
    medium: ElasticMedium,
    qp: QuasiPeriodicParams,
) -> Tuple[np.ndarray, np.ndarray]:
    """Jump norms for every (left, right) periodic edge pair.

    Returns
    -------
    Tuple[numpy.ndarray, numpy.ndarray]
        ‖J_e‖ for the left edges and ‖J_e′‖ for their right partners; the
        two agree because the phase factor is unimodular.

    Raises
    ------
    MeshError
        If a periodic edge has no partner.
    """
    pairs = mesh.periodic_edge_pairs
    if len(pairs) == 0:
        return np.zeros(0), np.zeros(0)
    G = element_gradients(mesh, full)
    left_owner = mesh.edge_triangles[pairs[:, 0], 0]
    right_owner = mesh.edge_triangles[pairs[:, 1], 0]
    ex = np.array([1.0, 0.0])
    t_left = traction(G[left_owner], ex, medium)
    t_right = traction(G[right_owner], ex, medium)
    jump_left = t_left - np.conj(qp.phase) * t_right
    jump_right = t_right - qp.phase * t_left
    lengths = mesh.edge_lengths
    left = np.sqrt(lengths[pairs[:, 0]]) * np.linalg.norm(jump_left, axis=1)
    right = np.sqrt(lengths[pairs[:, 1]]) * np.linalg.norm(jump_right, axis=1)
    return left, right


def indicators(
    mesh: Mesh,
    dofmap: DofMap,
    field: FieldLike,
    dtn: DtnOperator,
    medium: ElasticMedium,
    qp: QuasiPeriodicParams,
    coefficients: Optional[np.ndarray] = None,
) -> ErrorIndicators:
    """η_K = h_K‖𝓡u_h‖_K + (½ Σ_{e⊂∂K} h_e‖J_e‖²)^{1/2} on every triangle.

    Surface edges carry no jump since the Dirichlet data is imposed exactly.
    """
    full = _full(field)
    if coefficients is None:
        coefficients = trace_coefficients(dofmap, full, dtn)
    residual = element_residual(mesh, full, medium)

    edge_norm = interior_jump(mesh, full, medium)
    edge_norm += gamma_jump(mesh, full, medium, dtn, coefficients)
    left, right = periodic_jump(mesh, full, medium, qp)
    pairs = mesh.periodic_edge_pairs
    if len(pairs):
        edge_norm[pairs[:, 0]] = left
        edge_norm[pairs[:, 1]] = right
    weighted = mesh.edge_lengths * edge_norm ** 2
    jump = np.sqrt(0.5 * weighted[mesh.triangle_edges].sum(axis=1))
    result = ErrorIndicators.from_parts(residual, jump)
    _LOGGER.debug(
        "indicators: eps_h=%.4e, max eta=%.4e", result.eps_h, result.eta.max()
    )
    return result
