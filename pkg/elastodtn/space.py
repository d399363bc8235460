"""Degrees of freedom of the quasi-periodic P1 vector space."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import GeometryError, MeshError
from .mesh import BoundaryTag, Mesh
from .models import QuasiPeriodicParams

_LOGGER = logging.getLogger(__name__)


class VertexKind(enum.IntEnum):
    """Role of a mesh vertex in the discrete space."""

    FREE = 0
    SLAVE = 1
    DIRICHLET = 2


@dataclass(frozen=True, eq=False)
class DofMap:
    """Vertex to unknown mapping.

    Free vertex ``v`` owns the scalar unknowns ``2 * dof[v]`` (x component)
    and ``2 * dof[v] + 1`` (y component). A slave vertex on x = Λ carries the
    value of its ``master`` on x = 0 times ``phase``.
    """

    status: np.ndarray
    dof: np.ndarray
    master: np.ndarray
    phase: complex
    free_count: int
    gamma_vertices: np.ndarray
    dirichlet_vertices: np.ndarray

    @property
    def num_vertices(self) -> int:
        return len(self.status)

    @property
    def size(self) -> int:
        """Number of scalar complex unknowns."""
        return 2 * self.free_count

    @property
    def free_vertices(self) -> np.ndarray:
        return np.nonzero(self.status == VertexKind.FREE)[0]

    @property
    def slave_vertices(self) -> np.ndarray:
        return np.nonzero(self.status == VertexKind.SLAVE)[0]

    @property
    def gamma_dofs(self) -> np.ndarray:
        """Unknown indices of the Γ masters, interleaved by component."""
        base = 2 * self.dof[self.gamma_vertices]
        return np.column_stack([base, base + 1]).reshape(-1)

    def prolongation(self) -> sp.csr_matrix:
        """Sparse map from unknowns to per-vertex values (Dirichlet rows 0).

        Returns
        -------
        scipy.sparse.csr_matrix
            Complex matrix of shape (2 * num_vertices, 2 * free_count).
        """
        free = self.free_vertices
        slaves = self.slave_vertices
        owners = np.concatenate([free, slaves])
        cols = self.dof[np.concatenate([free, self.master[slaves]])]
        weights = np.concatenate(
            [np.ones(len(free), complex), np.full(len(slaves), self.phase)]
        )
        rows = np.concatenate([2 * owners, 2 * owners + 1])
        cols = np.concatenate([2 * cols, 2 * cols + 1])
        weights = np.concatenate([weights, weights])
        return sp.csr_matrix(
            (weights, (rows, cols)),
            shape=(2 * self.num_vertices, self.size),
        )


def build_dof_map(mesh: Mesh, qp: QuasiPeriodicParams) -> DofMap:
    """Assign free, slave and Dirichlet roles to every vertex.

    Parameters
    ----------
    mesh : Mesh
        A valid mesh.
    qp : QuasiPeriodicParams
        Supplies the slave multiplier e^{iαΛ}.

    Returns
    -------
    DofMap

    Raises
    ------
    GeometryError
        If a vertex lies on both the surface S and Γ.
    MeshError
        If a right boundary vertex has no periodic partner.
    """
    nv = mesh.num_vertices
    surface = mesh.boundary_vertices(BoundaryTag.SURFACE)
    top = mesh.boundary_vertices(BoundaryTag.TOP)
    shared = np.intersect1d(surface, top)
    if shared.size:
        raise GeometryError(
            f"vertex {shared[0]} lies on both the surface and y=b;"
            " b must exceed max f"
        )

    status = np.full(nv, VertexKind.FREE, dtype=np.int64)
    master = np.full(nv, -1, dtype=np.int64)
    partner = np.full(nv, -1, dtype=np.int64)
    partner[mesh.periodic_pairs[:, 1]] = mesh.periodic_pairs[:, 0]

    right = mesh.boundary_vertices(BoundaryTag.RIGHT)
    right = np.setdiff1d(right, surface)
    if np.any(partner[right] < 0):
        orphan = right[partner[right] < 0][0]
        raise MeshError(f"right boundary vertex {orphan} has no partner")
    status[right] = VertexKind.SLAVE
    master[right] = partner[right]
    status[surface] = VertexKind.DIRICHLET
    if np.any(status[master[right]] != VertexKind.FREE):
        raise MeshError("periodic master vertex is not free")

    free = status == VertexKind.FREE
    dof = np.full(nv, -1, dtype=np.int64)
    dof[free] = np.arange(int(free.sum()))

    gamma = top[status[top] == VertexKind.FREE]
    gamma = gamma[np.argsort(mesh.vertices[gamma, 0], kind="stable")]
    _LOGGER.debug(
        "dof map: %d free, %d slave, %d dirichlet, %d on gamma",
        int(free.sum()),
        len(right),
        len(surface),
        len(gamma),
    )
    return DofMap(
        status=status,
        dof=dof,
        master=master,
        phase=qp.phase,
        free_count=int(free.sum()),
        gamma_vertices=gamma,
        dirichlet_vertices=surface,
    )


def lift_values(
    dofmap: DofMap, dirichlet_values: Optional[np.ndarray]
) -> np.ndarray:
    """Per-vertex field that is zero except for the Dirichlet data."""
    full = np.zeros((dofmap.num_vertices, 2), dtype=complex)
    if dirichlet_values is not None:
        full[dofmap.dirichlet_vertices] = np.asarray(
            dirichlet_values, dtype=complex
        ).reshape(-1, 2)
    return full


def apply_constraints(
    dofmap: DofMap,
    values: np.ndarray,
    dirichlet_values: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Expand unknowns into a per-vertex field.

    Parameters
    ----------
    dofmap : DofMap
    values : numpy.ndarray
        The ``2 * free_count`` unknowns.
    dirichlet_values : numpy.ndarray, optional
        Values on ``dofmap.dirichlet_vertices`` (zero when omitted).

    Returns
    -------
    numpy.ndarray
        Complex array of shape (num_vertices, 2).
    """
    values = np.asarray(values, dtype=complex).reshape(-1)
    if values.size != dofmap.size:
        raise ValueError(
            f"expected {dofmap.size} unknowns, got {values.size}"
        )
    full = lift_values(dofmap, dirichlet_values)
    free = dofmap.free_vertices
    nodal = values.reshape(-1, 2)
    full[free] = nodal[dofmap.dof[free]]
    slaves = dofmap.slave_vertices
    full[slaves] = dofmap.phase * nodal[dofmap.dof[dofmap.master[slaves]]]
    return full


def restrict(dofmap: DofMap, full: np.ndarray) -> np.ndarray:
    """Unknown vector holding the values of a per-vertex field at masters."""
    full = np.asarray(full, dtype=complex).reshape(-1, 2)
    return full[dofmap.free_vertices].reshape(-1)
