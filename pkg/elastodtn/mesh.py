"""Conforming triangulations of one grating period and their refinement.

Triangles are stored with the newest vertex first: for ``[v0, v1, v2]`` the
refinement edge is ``(v1, v2)``. Bisection inserts the midpoint ``m`` of that
edge and produces ``[m, v0, v1]`` and ``[m, v2, v0]``, so every child again
has its newest vertex first and keeps positive orientation.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Set, Tuple

import numpy as np

from .exceptions import MeshError
from .models import SurfaceProfile

_LOGGER = logging.getLogger(__name__)

DEFAULT_MIN_ANGLE = 15.0
"""Shape-regularity floor in degrees checked by :func:`validate`."""


class BoundaryTag(enum.IntEnum):
    """Boundary edge families of the period cell."""

    SURFACE = 1
    TOP = 2
    LEFT = 3
    RIGHT = 4


def _frozen(array: np.ndarray, dtype: type) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulation of Ω with boundary tags and periodic pairing."""

    vertices: np.ndarray
    """Vertex coordinates, shape (nv, 2)."""
    triangles: np.ndarray
    """Vertex triples, newest vertex first, positively oriented."""
    boundary_edges: np.ndarray
    """Boundary edges as vertex pairs, shape (nb, 2)."""
    boundary_tags: np.ndarray
    """:class:`BoundaryTag` value of each boundary edge."""
    periodic_pairs: np.ndarray
    """(left vertex, right vertex) pairs with identical y."""
    period: float
    parents: np.ndarray = field(default=None)  # type: ignore[assignment]
    """Index of the triangle each triangle was refined from."""

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", _frozen(self.vertices, float))
        for name, width in (
            ("triangles", 3),
            ("boundary_edges", 2),
            ("periodic_pairs", 2),
        ):
            value = np.asarray(getattr(self, name), dtype=np.int64)
            object.__setattr__(
                self, name, _frozen(value.reshape(-1, width), np.int64)
            )
        object.__setattr__(
            self, "boundary_tags", _frozen(self.boundary_tags, np.int64)
        )
        parents = self.parents
        if parents is None:
            parents = np.arange(len(self.triangles))
        object.__setattr__(self, "parents", _frozen(parents, np.int64))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    @property
    def refinement_edges(self) -> np.ndarray:
        """Refinement edge of every triangle, shape (nt, 2)."""
        return self.triangles[:, 1:]

    @cached_property
    def _topology(self):
        tri = self.triangles
        nt = len(tri)
        local = np.stack(
            [tri[:, [1, 2]], tri[:, [2, 0]], tri[:, [0, 1]]], axis=1
        ).reshape(-1, 2)
        local = np.sort(local, axis=1)
        edges, inverse, counts = np.unique(
            local, axis=0, return_inverse=True, return_counts=True
        )
        inverse = np.asarray(inverse).reshape(-1)
        owner = np.repeat(np.arange(nt), 3)
        order = np.argsort(inverse, kind="stable")
        first = np.searchsorted(inverse[order], np.arange(len(edges)))
        edge_tris = np.full((len(edges), 2), -1, dtype=np.int64)
        edge_tris[:, 0] = owner[order[first]]
        twice = counts >= 2
        edge_tris[twice, 1] = owner[order[first[twice] + 1]]
        return edges, inverse.reshape(nt, 3), edge_tris, counts

    @property
    def edges(self) -> np.ndarray:
        """Unique edges as sorted vertex pairs."""
        return self._topology[0]

    @property
    def triangle_edges(self) -> np.ndarray:
        """Edge index of local edge k (opposite vertex k) per triangle."""
        return self._topology[1]

    @property
    def edge_triangles(self) -> np.ndarray:
        """The (up to) two triangles of each edge, -1 where missing."""
        return self._topology[2]

    @property
    def edge_counts(self) -> np.ndarray:
        return self._topology[3]

    def edge_index(self, pairs: np.ndarray) -> np.ndarray:
        """Edge indices of vertex pairs, -1 for pairs that are not edges."""
        pairs = np.sort(np.asarray(pairs, dtype=np.int64).reshape(-1, 2), 1)
        nv = self.num_vertices
        keys = self.edges[:, 0] * nv + self.edges[:, 1]
        wanted = pairs[:, 0] * nv + pairs[:, 1]
        pos = np.clip(np.searchsorted(keys, wanted), 0, max(len(keys) - 1, 0))
        found = keys[pos] == wanted if len(keys) else np.zeros(len(wanted), bool)
        return np.where(found, pos, -1)

    def tagged_edges(self, tag: BoundaryTag) -> np.ndarray:
        return self.boundary_edges[self.boundary_tags == int(tag)]

    def boundary_vertices(self, tag: BoundaryTag) -> np.ndarray:
        return np.unique(self.tagged_edges(tag))

    @cached_property
    def areas(self) -> np.ndarray:
        """Signed triangle areas."""
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def diameters(self) -> np.ndarray:
        """Triangle diameters h_K (longest edge)."""
        return self.edge_lengths[self.triangle_edges].max(axis=1)

    @cached_property
    def min_angles(self) -> np.ndarray:
        """Smallest interior angle per triangle in degrees."""
        p = self.vertices[self.triangles]
        angles = []
        for k in range(3):
            u = p[:, (k + 1) % 3] - p[:, k]
            v = p[:, (k + 2) % 3] - p[:, k]
            cos = np.sum(u * v, axis=1) / (
                np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
            )
            angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
        return np.min(np.stack(angles, axis=1), axis=1)

    @cached_property
    def periodic_edge_pairs(self) -> np.ndarray:
        """(left edge, right edge) index pairs for the periodic sides.

        Raises
        ------
        MeshError
            If a left boundary edge has no mirrored right edge.
        """
        partner = np.full(self.num_vertices, -1, dtype=np.int64)
        partner[self.periodic_pairs[:, 0]] = self.periodic_pairs[:, 1]
        left = self.tagged_edges(BoundaryTag.LEFT)
        mirrored = partner[left]
        if np.any(mirrored < 0):
            raise MeshError("left boundary edge without a periodic partner")
        left_idx = self.edge_index(left)
        right_idx = self.edge_index(mirrored)
        if np.any(right_idx < 0) or np.any(left_idx < 0):
            raise MeshError("unpaired periodic boundary edge")
        return np.column_stack([left_idx, right_idx])


def shape_gradients(points: np.ndarray):
    """Gradients of the barycentric coordinates of P1 triangles.

    Parameters
    ----------
    points : numpy.ndarray
        Vertex coordinates, shape (nt, 3, 2).

    Returns
    -------
    gradients : numpy.ndarray
        ``gradients[t, i]`` is ∇λ_i on triangle t, shape (nt, 3, 2).
    areas : numpy.ndarray
        Signed areas, shape (nt,).
    """
    x, y = points[..., 0], points[..., 1]
    areas = 0.5 * (
        (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0])
        - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    )
    grads = np.empty(points.shape)
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        grads[:, i, 0] = y[:, j] - y[:, k]
        grads[:, i, 1] = x[:, k] - x[:, j]
    grads /= 2.0 * areas[:, None, None]
    return grads, areas


@dataclass(frozen=True)
class MeshDiagnostic:
    """One violated mesh invariant."""

    kind: str
    index: int
    message: str

    def __str__(self) -> str:
        return self.message


def _orient_longest_first(vertices: np.ndarray, tri: np.ndarray) -> np.ndarray:
    """Rotate each triple so the longest edge is the refinement edge."""
    p = vertices[tri]
    lengths = np.stack(
        [
            np.linalg.norm(p[:, (k + 2) % 3] - p[:, (k + 1) % 3], axis=1)
            for k in range(3)
        ],
        axis=1,
    )
    start = np.argmax(lengths, axis=1)
    rows = np.arange(len(tri))[:, None]
    cols = (start[:, None] + np.arange(3)[None, :]) % 3
    return tri[rows, cols]


def _triangle_min_angle(a: np.ndarray, b: np.ndarray, c: np.ndarray):
    p = np.stack([a, b, c], axis=1)
    worst = np.full(len(a), 180.0)
    for k in range(3):
        u = p[:, (k + 1) % 3] - p[:, k]
        v = p[:, (k + 2) % 3] - p[:, k]
        cos = np.sum(u * v, axis=1) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        worst = np.minimum(
            worst, np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        )
    return worst


def _columns(profile: SurfaceProfile, nx: int):
    spacing = profile.period / nx
    xs, ys = [0.0], [profile.breakpoints[0][1]]
    for (x0, y0), (x1, y1) in zip(
        profile.breakpoints[:-1], profile.breakpoints[1:]
    ):
        n = max(1, math.ceil((x1 - x0) / spacing - 1e-9))
        xs.extend(np.linspace(x0, x1, n + 1)[1:])
        ys.extend(np.linspace(y0, y1, n + 1)[1:])
    return np.array(xs), np.array(ys)


def structured_mesh(
    profile: SurfaceProfile, b: float, nx: int, ny: int
) -> Mesh:
    """Mesh the period cell with a column-wise mapped structured grid.

    Columns are placed per profile segment (so every breakpoint is a column)
    and each column is split into ``ny`` cells between f(x) and b. Each cell
    is cut along the diagonal giving the larger minimum angle.

    Parameters
    ----------
    profile : SurfaceProfile
        Surface, validated against ``b``.
    b : float
        Height of the artificial boundary Γ.
    nx : int
        Target number of columns over one period.
    ny : int
        Number of cell rows.

    Returns
    -------
    Mesh
    """
    profile.check_below(b)
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be positive")
    cx, cf = _columns(profile, nx)
    m = len(cx) - 1
    levels = np.arange(ny + 1) / ny
    x = np.repeat(cx, ny + 1)
    y = (cf[:, None] + (b - cf)[:, None] * levels[None, :]).reshape(-1)
    grid_y = y.reshape(m + 1, ny + 1)
    grid_y[:, 0] = cf
    grid_y[:, -1] = b
    # bit-identical mirror of the left column
    grid_y[m, :] = grid_y[0, :]
    x[m * (ny + 1):] = profile.period
    vertices = np.column_stack([x, grid_y.reshape(-1)])

    def vid(i, k):
        return i * (ny + 1) + k

    ii, kk = np.meshgrid(np.arange(m), np.arange(ny), indexing="ij")
    ii, kk = ii.reshape(-1), kk.reshape(-1)
    a, bb = vid(ii, kk), vid(ii + 1, kk)
    c, d = vid(ii + 1, kk + 1), vid(ii, kk + 1)
    pa, pb, pc, pd = (vertices[v] for v in (a, bb, c, d))
    quality_ac = np.minimum(
        _triangle_min_angle(pa, pb, pc), _triangle_min_angle(pa, pc, pd)
    )
    quality_bd = np.minimum(
        _triangle_min_angle(pa, pb, pd), _triangle_min_angle(pb, pc, pd)
    )
    use_ac = quality_ac >= quality_bd - 1e-12
    first = np.where(use_ac[:, None], np.column_stack([a, bb, c]),
                     np.column_stack([a, bb, d]))
    second = np.where(use_ac[:, None], np.column_stack([a, c, d]),
                      np.column_stack([bb, c, d]))
    triangles = np.empty((2 * len(a), 3), dtype=np.int64)
    triangles[0::2] = first
    triangles[1::2] = second
    triangles = _orient_longest_first(vertices, triangles)

    cols = np.arange(m)
    rows = np.arange(ny)
    edges = [
        np.column_stack([vid(cols, 0), vid(cols + 1, 0)]),
        np.column_stack([vid(cols, ny), vid(cols + 1, ny)]),
        np.column_stack([vid(0, rows), vid(0, rows + 1)]),
        np.column_stack([vid(m, rows), vid(m, rows + 1)]),
    ]
    tags = [
        np.full(m, BoundaryTag.SURFACE),
        np.full(m, BoundaryTag.TOP),
        np.full(ny, BoundaryTag.LEFT),
        np.full(ny, BoundaryTag.RIGHT),
    ]
    levels_idx = np.arange(ny + 1)
    pairs = np.column_stack([vid(0, levels_idx), vid(m, levels_idx)])
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_edges=np.vstack(edges),
        boundary_tags=np.concatenate(tags),
        periodic_pairs=pairs,
        period=profile.period,
    )


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def flip_edges(
    mesh: Mesh, max_edge: Optional[float] = None, max_sweeps: int = 50
) -> Mesh:
    """Swap interior diagonals while that raises the local minimum angle.

    Only edges shared by two triangles whose union is a strictly convex
    quadrilateral are swapped, so boundary edges, tags and periodic pairs
    are untouched. A new diagonal longer than ``max_edge`` is refused.
    Refinement edges are reassigned to the longest edge afterwards.
    """
    v = mesh.vertices
    tri = [list(t) for t in mesh.triangles]
    flips = 0
    for _ in range(max_sweeps):
        owners: Dict[Tuple[int, int], List[int]] = {}
        for t, corners in enumerate(tri):
            for k in range(3):
                a, b = corners[(k + 1) % 3], corners[(k + 2) % 3]
                owners.setdefault((min(a, b), max(a, b)), []).append(t)
        touched: Set[int] = set()
        swept = 0
        for (p, q), pair in owners.items():
            if len(pair) != 2 or touched.intersection(pair):
                continue
            t1, t2 = pair
            r = next(x for x in tri[t1] if x not in (p, q))
            s = next(x for x in tri[t2] if x not in (p, q))
            vp, vq, vr, vs = v[p], v[q], v[r], v[s]
            if _cross(vr, vs, vp) * _cross(vr, vs, vq) >= 0.0:
                continue
            if _cross(vp, vq, vr) * _cross(vp, vq, vs) >= 0.0:
                continue
            if max_edge is not None and np.linalg.norm(vr - vs) > max_edge:
                continue
            before = _triangle_min_angle(
                np.array([vp, vq]), np.array([vq, vp]), np.array([vr, vs])
            ).min()
            after = _triangle_min_angle(
                np.array([vr, vs]), np.array([vs, vr]), np.array([vp, vq])
            ).min()
            if after <= before + 1e-9:
                continue
            first, second = [r, s, p], [s, r, q]
            for new in (first, second):
                if _cross(v[new[0]], v[new[1]], v[new[2]]) < 0.0:
                    new[1], new[2] = new[2], new[1]
            tri[t1], tri[t2] = first, second
            touched.update(pair)
            swept += 1
        flips += swept
        if swept == 0:
            break
    if flips == 0:
        return mesh
    _LOGGER.debug("edge flips: %d diagonals swapped", flips)
    triangles = _orient_longest_first(v, np.array(tri, dtype=np.int64))
    return replace(mesh, triangles=triangles, parents=None)


def build_initial_mesh(
    profile: SurfaceProfile,
    b: float,
    h0: float,
    min_angle: float = DEFAULT_MIN_ANGLE,
) -> Mesh:
    """Initial triangulation of Ω with maximum edge length at most ``h0``.

    The structured grid is cleaned up by :func:`flip_edges`. A
    :class:`UserWarning` is issued when the result still has an angle below
    ``min_angle``, which happens for steep profile segments.

    Raises
    ------
    ProfileError
        If the profile is invalid or does not lie strictly below ``b``.
    ValueError
        If ``h0`` is not positive.
    """
    profile.check_below(b)
    if not h0 > 0.0:
        raise ValueError(f"h0 must be positive, got {h0}")
    spacing = h0 / math.sqrt(2.0)
    nx = max(1, math.ceil(profile.period / spacing - 1e-9))
    ny = max(1, math.ceil((b - profile.min_height) / spacing - 1e-9))
    for _ in range(64):
        mesh = structured_mesh(profile, b, nx, ny)
        longest = float(mesh.edge_lengths.max())
        if longest <= h0:
            mesh = flip_edges(mesh, max_edge=h0)
            worst = float(mesh.min_angles.min())
            _LOGGER.debug(
                "initial mesh: %d vertices, %d triangles, max edge %.4g,"
                " min angle %.2f deg",
                mesh.num_vertices,
                mesh.num_triangles,
                longest,
                worst,
            )
            if worst < min_angle:
                warnings.warn(
                    f"initial mesh has minimum angle {worst:.2f} deg below"
                    f" {min_angle} deg; consider a smaller h0 or a gentler"
                    " profile",
                    UserWarning,
                )
            return mesh
        nx, ny = nx + max(1, nx // 4), ny + max(1, ny // 4)
    raise MeshError(f"could not reach max edge length {h0}")


def _closure(mesh: Mesh, cut: np.ndarray) -> np.ndarray:
    ref = mesh.triangle_edges[:, 0]
    pairs = mesh.periodic_edge_pairs
    while True:
        before = cut.copy()
        if len(pairs):
            mirrored = cut[pairs[:, 0]] | cut[pairs[:, 1]]
            cut[pairs[:, 0]] = mirrored
            cut[pairs[:, 1]] = mirrored
        need = cut[mesh.triangle_edges].any(axis=1) & ~cut[ref]
        cut[ref[need]] = True
        if np.array_equal(before, cut):
            return cut


def bisect(mesh: Mesh, marks: Sequence[int]) -> Mesh:
    """Refine the marked triangles by newest-vertex bisection.

    Closure refinement keeps the mesh conforming, and a split edge on one
    periodic side forces the split of its mirror so the left and right
    vertex sets stay identical.

    Parameters
    ----------
    mesh : Mesh
        Mesh to refine.
    marks : Sequence[int]
        Triangle indices to refine.

    Returns
    -------
    Mesh
        The refined mesh (``mesh`` itself when ``marks`` is empty), with
        ``parents`` pointing into ``mesh.triangles``.
    """
    marks = np.unique(np.asarray(marks, dtype=np.int64).reshape(-1))
    if marks.size == 0:
        return mesh
    if marks[0] < 0 or marks[-1] >= mesh.num_triangles:
        raise MeshError("mark index out of range for this mesh")

    edges = mesh.edges
    cut = np.zeros(len(edges), dtype=bool)
    cut[mesh.triangle_edges[marks, 0]] = True
    cut = _closure(mesh, cut)

    nv = mesh.num_vertices
    cut_idx = np.nonzero(cut)[0]
    mid = np.full(len(edges), -1, dtype=np.int64)
    mid[cut_idx] = nv + np.arange(len(cut_idx))
    points = 0.5 * (
        mesh.vertices[edges[cut_idx, 0]] + mesh.vertices[edges[cut_idx, 1]]
    )
    vertices = np.vstack([mesh.vertices, points])
    pairs = mesh.periodic_edge_pairs
    split_pairs = pairs[cut[pairs[:, 0]]] if len(pairs) else pairs
    new_left = mid[split_pairs[:, 0]]
    new_right = mid[split_pairs[:, 1]]
    vertices[new_left, 0] = 0.0
    vertices[new_right, 0] = mesh.period
    vertices[new_right, 1] = vertices[new_left, 1]

    total = len(vertices)
    cut_keys = edges[cut_idx, 0] * total + edges[cut_idx, 1]
    cut_mid = mid[cut_idx]
    tris = mesh.triangles.copy()
    parents = np.arange(mesh.num_triangles)
    while True:
        lo = np.minimum(tris[:, 1], tris[:, 2])
        hi = np.maximum(tris[:, 1], tris[:, 2])
        keys = lo * total + hi
        pos = np.clip(np.searchsorted(cut_keys, keys), 0, len(cut_keys) - 1)
        hit = cut_keys[pos] == keys
        if not hit.any():
            break
        t = tris[hit]
        m = cut_mid[pos[hit]]
        children = np.column_stack([m, t[:, 2], t[:, 0]])
        tris[hit] = np.column_stack([m, t[:, 0], t[:, 1]])
        tris = np.vstack([tris, children])
        parents = np.concatenate([parents, parents[hit]])

    bidx = mesh.edge_index(mesh.boundary_edges)
    split = cut[bidx]
    be = mesh.boundary_edges
    bm = mid[bidx[split]]
    boundary = np.vstack(
        [
            np.where(split[:, None], np.column_stack([be[:, 0], mid[bidx]]), be),
            np.column_stack([bm, be[split, 1]]),
        ]
    )
    tags = np.concatenate([mesh.boundary_tags, mesh.boundary_tags[split]])
    periodic = np.vstack(
        [mesh.periodic_pairs, np.column_stack([new_left, new_right])]
    )
    _LOGGER.debug(
        "bisect: %d marked, %d edges split, %d -> %d triangles",
        marks.size,
        len(cut_idx),
        mesh.num_triangles,
        len(tris),
    )
    return Mesh(
        vertices=vertices,
        triangles=tris,
        boundary_edges=boundary,
        boundary_tags=tags,
        periodic_pairs=periodic,
        period=mesh.period,
        parents=parents,
    )


def refine_uniformly(mesh: Mesh, rounds: int = 1) -> Mesh:
    """Bisect every triangle ``rounds`` times."""
    for _ in range(rounds):
        mesh = bisect(mesh, np.arange(mesh.num_triangles))
    return mesh


def validate(
    mesh: Mesh, min_angle: float = DEFAULT_MIN_ANGLE
) -> List[MeshDiagnostic]:
    """Check every mesh invariant.

    Returns
    -------
    List[MeshDiagnostic]
        Empty when the mesh is valid, otherwise one entry per violation
        naming the offending triangle, edge or vertex.
    """
    found: List[MeshDiagnostic] = []
    areas = mesh.areas
    for t in np.nonzero(areas <= 0.0)[0]:
        found.append(
            MeshDiagnostic(
                "area",
                int(t),
                f"triangle {t} has non-positive area {areas[t]:.3e}",
            )
        )

    counts = mesh.edge_counts
    for e in np.nonzero(counts > 2)[0]:
        found.append(
            MeshDiagnostic(
                "conformity", int(e), f"edge {e} is shared by {counts[e]} triangles"
            )
        )
    bidx = mesh.edge_index(mesh.boundary_edges)
    tagged = np.zeros(len(mesh.edges), dtype=bool)
    tagged[bidx[bidx >= 0]] = True
    for i in np.nonzero(bidx < 0)[0]:
        found.append(
            MeshDiagnostic(
                "boundary", int(i), f"boundary edge {i} is not a mesh edge"
            )
        )
    for e in np.nonzero((counts == 1) & ~tagged)[0]:
        a, b = mesh.edges[e]
        found.append(
            MeshDiagnostic(
                "conformity",
                int(e),
                f"edge {e} ({a}, {b}) bounds one triangle but is not on the"
                " boundary (hanging vertex)",
            )
        )
    for e in np.nonzero((counts == 2) & tagged)[0]:
        found.append(
            MeshDiagnostic(
                "boundary", int(e), f"tagged boundary edge {e} is interior"
            )
        )

    v = mesh.vertices
    for k, (left, right) in enumerate(mesh.periodic_pairs):
        if v[left, 0] != 0.0 or v[right, 0] != mesh.period:
            found.append(
                MeshDiagnostic(
                    "periodic",
                    k,
                    f"periodic pair {k} ({left}, {right}) is not on x=0 and"
                    " x=period",
                )
            )
        elif v[left, 1] != v[right, 1]:
            found.append(
                MeshDiagnostic(
                    "periodic",
                    k,
                    f"periodic pair {k} ({left}, {right}) has mismatched y",
                )
            )
    left_vertices = mesh.boundary_vertices(BoundaryTag.LEFT)
    right_vertices = mesh.boundary_vertices(BoundaryTag.RIGHT)
    orphan_left = np.setdiff1d(left_vertices, mesh.periodic_pairs[:, 0])
    orphan_right = np.setdiff1d(right_vertices, mesh.periodic_pairs[:, 1])
    for i in orphan_left:
        found.append(
            MeshDiagnostic(
                "periodic",
                int(i),
                f"orphaned left-boundary vertex {i} (y={v[i, 1]:.17g})",
            )
        )
    reported = set(v[orphan_left, 1].tolist())
    for i in orphan_right:
        if v[i, 1] in reported:
            continue
        found.append(
            MeshDiagnostic(
                "periodic",
                int(i),
                f"orphaned right-boundary vertex {i} (y={v[i, 1]:.17g})",
            )
        )

    angles = mesh.min_angles
    for t in np.nonzero((areas > 0.0) & (angles < min_angle - 1e-9))[0]:
        found.append(
            MeshDiagnostic(
                "angle",
                int(t),
                f"triangle {t} has minimum angle {angles[t]:.2f} deg below"
                f" {min_angle} deg",
            )
        )
    return found


def min_angle(mesh: Mesh) -> float:
    """Smallest interior angle of the mesh in degrees."""
    return float(mesh.min_angles.min())
