"""Assembly and solution of the truncated DtN finite element system."""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .analytic import incident_field
from .dtn import DtnOperator
from .exceptions import DtnMismatchError, MeshError, SingularSystemError
from .mesh import Mesh, shape_gradients
from .models import ElasticMedium, IncidentWave
from .space import DofMap, apply_constraints, lift_values

_LOGGER = logging.getLogger(__name__)

DEGENERATE_AREA = 1e-14
"""Triangle areas below this fraction of the squared mesh extent are rejected."""

PIVOT_RATIO_FLOOR = 1e-14

RESIDUAL_TOL = 1e-10

BATCH = 4096


def element_matrices(
    points: np.ndarray, medium: ElasticMedium
) -> Tuple[np.ndarray, np.ndarray]:
    """Exact P1 stiffness and mass matrices of a batch of triangles.

    Local unknowns are interleaved: row ``2 * i + a`` is component ``a`` of
    the hat function of local vertex ``i``.

    Returns
    -------
    stiffness : numpy.ndarray
        μ∫∇u:∇v + (λ+μ)∫(∇·u)(∇·v), shape (nt, 6, 6).
    mass : numpy.ndarray
        ∫u·v, shape (nt, 6, 6).
    """
    grads, areas = shape_gradients(points)
    nt = len(points)
    eye = np.eye(2)
    dots = np.einsum("tid,tjd->tij", grads, grads)
    lap = np.einsum("tij,ab->tiajb", dots, eye)
    div = np.einsum("tia,tjb->tiajb", grads, grads)
    stiffness = (medium.mu * lap + (medium.lam + medium.mu) * div).reshape(
        nt, 6, 6
    ) * areas[:, None, None]
    scalar_mass = (np.ones((3, 3)) + np.eye(3)) / 12.0
    mass = np.einsum("ij,ab->iajb", scalar_mass, eye).reshape(6, 6)
    mass = mass[None, :, :] * areas[:, None, None]
    return stiffness, mass


def _element_worker(
    points: np.ndarray,
    medium: ElasticMedium,
    out: np.ndarray,
    start: int,
    step: int,
) -> None:
    """Fill the element blocks of batches ``start, start + step, ...``."""
    w2 = medium.omega ** 2
    for first in range(start * BATCH, len(points), step * BATCH):
        chunk = slice(first, min(first + BATCH, len(points)))
        stiffness, mass = element_matrices(points[chunk], medium)
        out[chunk] = stiffness - w2 * mass


def check_areas(mesh: Mesh) -> None:
    """Raise MeshError for degenerate or inverted triangles."""
    extent = np.ptp(mesh.vertices, axis=0).max()
    bad = np.nonzero(mesh.areas < DEGENERATE_AREA * extent * extent)[0]
    if bad.size:
        raise MeshError(
            f"triangle {bad[0]} is degenerate (area {mesh.areas[bad[0]]:.3e})"
        )


def assemble_navier(
    mesh: Mesh, medium: ElasticMedium, num_threads: int = 1
) -> sp.csr_matrix:
    """Navier form on every vertex, before any constraint is applied.

    Element blocks are computed by ``num_threads`` workers on interleaved
    batches and written to disjoint slots, so the result does not depend on
    the thread count.
    """
    check_areas(mesh)
    points = mesh.vertices[mesh.triangles]
    blocks = np.empty((mesh.num_triangles, 6, 6))
    threads: List[threading.Thread] = []
    for i in range(max(1, num_threads)):
        thread = threading.Thread(
            target=_element_worker,
            args=(points, medium, blocks, i, max(1, num_threads)),
        )
        threads.append(thread)

    for thread in threads:
        thread.start()

    for thread in threads:
        thread.join()

    local = np.stack(
        [2 * mesh.triangles, 2 * mesh.triangles + 1], axis=2
    ).reshape(-1, 6)
    rows = np.repeat(local, 6, axis=1).reshape(-1)
    cols = np.tile(local, (1, 6)).reshape(-1)
    size = 2 * mesh.num_vertices
    return sp.coo_matrix(
        (blocks.reshape(-1), (rows, cols)), shape=(size, size)
    ).tocsr()


def assemble_interior(
    mesh: Mesh,
    dofmap: DofMap,
    medium: ElasticMedium,
    num_threads: int = 1,
    navier: Optional[sp.spmatrix] = None,
) -> sp.csr_matrix:
    """Hermitian interior matrix on the free unknowns.

    Slave rows and columns are folded into their masters through the
    prolongation (phase on columns, its conjugate on rows); Dirichlet
    columns are left to :func:`assemble_lift`.
    """
    if navier is None:
        navier = assemble_navier(mesh, medium, num_threads)
    P = dofmap.prolongation()
    return (P.conj().T @ navier @ P).tocsr()


def assemble_dtn(dofmap: DofMap, dtn: DtnOperator) -> sp.csr_matrix:
    """Truncated DtN boundary matrix B on the free unknowns.

    Raises
    ------
    DtnMismatchError
        If ``dtn`` was built for other Γ vertices than ``dofmap`` lists.
    """
    if not np.array_equal(dofmap.gamma_vertices, dtn.gamma_vertices):
        raise DtnMismatchError("DtN moments do not match the Γ vertices")
    dense = dtn.block().reshape(2 * len(dtn.gamma_vertices), -1)
    idx = dofmap.gamma_dofs
    rows = np.repeat(idx, len(idx))
    cols = np.tile(idx, len(idx))
    return sp.coo_matrix(
        (dense.reshape(-1), (rows, cols)), shape=(dofmap.size, dofmap.size)
    ).tocsr()


def assemble_lift(
    mesh: Mesh,
    dofmap: DofMap,
    wave: IncidentWave,
    medium: ElasticMedium,
    navier: Optional[sp.spmatrix] = None,
    dirichlet_values: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """Right-hand side of the Dirichlet lift g = −u^inc on S.

    Parameters
    ----------
    dirichlet_values : numpy.ndarray, optional
        Replaces −u^inc at ``dofmap.dirichlet_vertices`` (manufactured data).

    Returns
    -------
    rhs : numpy.ndarray
        −(columns of constrained unknowns) · g on the free rows.
    dirichlet_values : numpy.ndarray
        Values at ``dofmap.dirichlet_vertices``, shape (n_S, 2).
    """
    if dirichlet_values is None:
        values, _ = incident_field(
            wave, medium, mesh.vertices[dofmap.dirichlet_vertices]
        )
        dirichlet_values = -values
    dirichlet_values = np.asarray(dirichlet_values, dtype=complex).reshape(
        -1, 2
    )
    if navier is None:
        navier = assemble_navier(mesh, medium)
    lift = lift_values(dofmap, dirichlet_values).reshape(-1)
    P = dofmap.prolongation()
    rhs = -(P.conj().T @ (navier @ lift))
    return np.asarray(rhs).reshape(-1), dirichlet_values


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """System matrix A − B, right-hand side and the data to rebuild a field."""

    matrix: sp.spmatrix
    rhs: np.ndarray
    dirichlet_values: Optional[np.ndarray] = None
    dofmap: Optional[DofMap] = None
    interior: Optional[sp.spmatrix] = None
    boundary: Optional[sp.spmatrix] = None


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Computed unknowns together with what is needed to expand them."""

    values: np.ndarray
    dofmap: Optional[DofMap] = None
    dirichlet_values: Optional[np.ndarray] = None
    relative_residual: float = 0.0

    @property
    def nodal(self) -> np.ndarray:
        """Unknowns as (free_count, 2) vectors."""
        return self.values.reshape(-1, 2)

    def full(self) -> np.ndarray:
        """Per-vertex field with slave and Dirichlet values restored."""
        if self.dofmap is None:
            raise ValueError("field has no dof map to expand it")
        return apply_constraints(
            self.dofmap, self.values, self.dirichlet_values
        )


def assemble_system(
    mesh: Mesh,
    dofmap: DofMap,
    medium: ElasticMedium,
    wave: IncidentWave,
    dtn: DtnOperator,
    num_threads: int = 1,
    dirichlet_values: Optional[np.ndarray] = None,
) -> LinearSystem:
    """Assemble the full truncated system on one mesh."""
    navier = assemble_navier(mesh, medium, num_threads)
    interior = assemble_interior(mesh, dofmap, medium, navier=navier)
    boundary = assemble_dtn(dofmap, dtn)
    rhs, values = assemble_lift(
        mesh, dofmap, wave, medium, navier, dirichlet_values
    )
    _LOGGER.debug(
        "assembled %d unknowns, %d nonzeros", dofmap.size, interior.nnz
    )
    return LinearSystem(
        matrix=(interior - boundary).tocsc(),
        rhs=rhs,
        dirichlet_values=values,
        dofmap=dofmap,
        interior=interior,
        boundary=boundary,
    )


def solve_linear(matrix: sp.spmatrix, rhs: np.ndarray) -> Tuple[np.ndarray, float]:
    """Sparse LU solve with a pivot check and one step of refinement.

    Returns
    -------
    Tuple[numpy.ndarray, float]
        Solution and relative residual ‖Ax − b‖ / ‖b‖.

    Raises
    ------
    SingularSystemError
        If SuperLU fails or the pivot ratio falls below the floor.
    """
    matrix = sp.csc_matrix(matrix, dtype=complex)
    rhs = np.asarray(rhs, dtype=complex).reshape(-1)
    try:
        lu = splu(matrix)
    except RuntimeError as exc:
        raise SingularSystemError(0.0, str(exc)) from exc
    pivots = np.abs(lu.U.diagonal())
    ratio = float(pivots.min() / pivots.max()) if pivots.size else 1.0
    _LOGGER.debug("LU pivot ratio %.3e", ratio)
    if not ratio > PIVOT_RATIO_FLOOR:
        raise SingularSystemError(ratio)

    norm = np.linalg.norm(rhs)
    if norm == 0.0:
        return np.zeros_like(rhs), 0.0
    x = lu.solve(rhs)
    residual = rhs - matrix @ x
    if np.linalg.norm(residual) > RESIDUAL_TOL * norm:
        x = x + lu.solve(residual)
        residual = rhs - matrix @ x
    relative = float(np.linalg.norm(residual) / norm)
    if relative > RESIDUAL_TOL:
        _LOGGER.warning("relative residual %.3e above %.0e", relative, RESIDUAL_TOL)
    return x, relative


def solve(system: LinearSystem) -> DiscreteField:
    """Solve ``system`` and wrap the unknowns as a :class:`DiscreteField`."""
    x, relative = solve_linear(system.matrix, system.rhs)
    return DiscreteField(
        values=x,
        dofmap=system.dofmap,
        dirichlet_values=system.dirichlet_values,
        relative_residual=relative,
    )
