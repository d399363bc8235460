""" Tests for mesh construction, bisection and validation. """

import numpy as np
import pytest

from elastodtn.exceptions import MeshError, ProfileError
from elastodtn.mesh import (
    BoundaryTag,
    Mesh,
    bisect,
    build_initial_mesh,
    flip_edges,
    min_angle,
    refine_uniformly,
    shape_gradients,
    structured_mesh,
    validate,
)
from elastodtn.models import SurfaceProfile

SAWTOOTH = SurfaceProfile(((0.0, 0.0), (0.25, 0.1), (0.5, 0.0)))
STEEP = SurfaceProfile(((0.0, 0.0), (0.05, 0.2), (0.5, 0.0)))


def _side_heights(mesh: Mesh, x: float) -> np.ndarray:
    on_side = mesh.vertices[:, 0] == x
    return np.sort(mesh.vertices[on_side, 1])


def _assert_mirrored(mesh: Mesh) -> None:
    assert np.array_equal(
        _side_heights(mesh, 0.0), _side_heights(mesh, mesh.period)
    )
    left, right = mesh.periodic_pairs.T
    assert np.array_equal(mesh.vertices[left, 1], mesh.vertices[right, 1])


def test_initial_mesh_flat_coarse(coarse_mesh: Mesh) -> None:
    assert coarse_mesh.num_triangles >= 4
    assert validate(coarse_mesh) == []
    assert coarse_mesh.edge_lengths.max() <= 0.25
    assert coarse_mesh.areas.sum() == pytest.approx(0.125)
    assert len(coarse_mesh.periodic_pairs) == len(
        _side_heights(coarse_mesh, 0.0)
    )
    _assert_mirrored(coarse_mesh)


def test_initial_mesh_respects_h0() -> None:
    mesh = build_initial_mesh(SurfaceProfile.flat(0.5), 0.25, 0.05)

    assert mesh.edge_lengths.max() <= 0.05
    assert validate(mesh) == []


def test_initial_mesh_follows_the_surface() -> None:
    mesh = build_initial_mesh(SAWTOOTH, 0.25, 0.05)

    assert validate(mesh) == []
    for x, y in SAWTOOTH.breakpoints:
        hits = np.hypot(mesh.vertices[:, 0] - x, mesh.vertices[:, 1] - y)
        assert hits.min() == 0.0
    surface = mesh.boundary_vertices(BoundaryTag.SURFACE)
    points = mesh.vertices[surface]
    assert points[:, 1] == pytest.approx(SAWTOOTH(points[:, 0]), abs=1e-14)
    assert mesh.areas.sum() == pytest.approx(SAWTOOTH.area_below(0.25))


def test_initial_mesh_rejects_bad_input() -> None:
    with pytest.raises(ProfileError):
        build_initial_mesh(SAWTOOTH, 0.1, 0.05)
    with pytest.raises(ValueError):
        build_initial_mesh(SAWTOOTH, 0.25, 0.0)


def _parallelogram() -> Mesh:
    return Mesh(
        vertices=[[0.0, 0.0], [1.0, 0.0], [1.5, 1.0], [0.5, 1.0]],
        triangles=[[0, 1, 2], [0, 2, 3]],
        boundary_edges=np.zeros((0, 2)),
        boundary_tags=np.zeros(0),
        periodic_pairs=np.zeros((0, 2)),
        period=1.0,
    )


def test_flip_swaps_the_long_diagonal() -> None:
    mesh = _parallelogram()

    flipped = flip_edges(mesh)

    assert {tuple(sorted(t)) for t in flipped.triangles.tolist()} == {
        (0, 1, 3),
        (1, 2, 3),
    }
    assert np.all(flipped.areas > 0.0)
    assert min_angle(flipped) == pytest.approx(53.130102, abs=1e-5)
    assert min_angle(flipped) > min_angle(mesh)
    assert flip_edges(mesh, max_edge=1.0) is mesh


def test_flips_keep_the_boundary_of_a_steep_grid() -> None:
    mesh = structured_mesh(STEEP, 0.25, 12, 6)

    flipped = flip_edges(mesh)

    assert min_angle(flipped) >= min_angle(mesh)
    assert validate(flipped, min_angle=0.0) == []
    assert flipped.areas.sum() == pytest.approx(mesh.areas.sum())
    assert np.array_equal(flipped.boundary_edges, mesh.boundary_edges)
    assert np.array_equal(flipped.periodic_pairs, mesh.periodic_pairs)
    _assert_mirrored(flipped)


def test_flat_initial_mesh_is_not_flagged(recwarn) -> None:
    mesh = build_initial_mesh(SurfaceProfile.flat(0.5), 0.25, 0.1)

    assert min_angle(mesh) >= 15.0
    assert not [w for w in recwarn if issubclass(w.category, UserWarning)]


def test_initial_mesh_warns_below_the_angle_floor() -> None:
    with pytest.warns(UserWarning, match="minimum angle"):
        mesh = build_initial_mesh(SAWTOOTH, 0.25, 0.1, min_angle=89.0)

    assert validate(mesh, min_angle=0.0) == []


def test_structured_mesh_counts(grid_mesh: Mesh) -> None:
    assert grid_mesh.num_vertices == 15
    assert grid_mesh.num_triangles == 16
    assert len(grid_mesh.boundary_vertices(BoundaryTag.SURFACE)) == 5
    assert len(grid_mesh.boundary_vertices(BoundaryTag.TOP)) == 5
    assert len(grid_mesh.periodic_pairs) == 3


def test_newest_vertex_is_opposite_the_longest_edge(grid_mesh: Mesh) -> None:
    lengths = grid_mesh.edge_lengths[grid_mesh.triangle_edges]

    assert np.all(lengths[:, 0] == lengths.max(axis=1))


def test_mesh_is_immutable(grid_mesh: Mesh) -> None:
    with pytest.raises(ValueError):
        grid_mesh.vertices[0, 0] = 1.0


def test_bisect_without_marks_is_identity(coarse_mesh: Mesh) -> None:
    assert bisect(coarse_mesh, []) is coarse_mesh


def test_bisect_rejects_foreign_marks(coarse_mesh: Mesh) -> None:
    with pytest.raises(MeshError):
        bisect(coarse_mesh, [coarse_mesh.num_triangles])


def test_bisect_splits_marked_triangle(coarse_mesh: Mesh) -> None:
    refined = bisect(coarse_mesh, [0])

    assert refined.num_triangles > coarse_mesh.num_triangles
    assert validate(refined) == []
    # children tile their parents exactly
    tiled = np.bincount(
        refined.parents,
        weights=refined.areas,
        minlength=coarse_mesh.num_triangles,
    )
    assert tiled == pytest.approx(coarse_mesh.areas)
    assert np.count_nonzero(refined.parents == 0) >= 2


def test_bisect_on_left_side_mirrors_to_right(coarse_mesh: Mesh) -> None:
    mesh = coarse_mesh
    target = None
    for _ in range(3):
        mesh = refine_uniformly(mesh)
        ends = mesh.vertices[mesh.refinement_edges][:, :, 0]
        on_left = np.nonzero(np.all(ends == 0.0, axis=1))[0]
        if on_left.size:
            target = int(on_left[0])
            break
    assert target is not None

    before = set(_side_heights(mesh, 0.0).tolist())
    refined = bisect(mesh, [target])
    after = set(_side_heights(refined, 0.0).tolist())

    assert len(after - before) >= 1
    _assert_mirrored(refined)
    assert validate(refined) == []


def test_bisect_all_triangles() -> None:
    mesh = structured_mesh(SurfaceProfile.flat(0.5), 0.25, 4, 4)
    assert mesh.num_triangles == 32

    refined = bisect(mesh, np.arange(mesh.num_triangles))

    assert 2 * mesh.num_triangles <= refined.num_triangles
    assert refined.num_triangles <= 4 * mesh.num_triangles
    assert min_angle(refined) >= min_angle(mesh) - 1e-9


def test_repeated_random_refinement_stays_valid(coarse_mesh: Mesh) -> None:
    rng = np.random.default_rng(7)
    mesh = coarse_mesh
    for _ in range(12):
        count = max(1, mesh.num_triangles // 4)
        marks = rng.choice(mesh.num_triangles, size=count, replace=False)
        mesh = bisect(mesh, marks)
        assert validate(mesh) == []
        _assert_mirrored(mesh)
    assert min_angle(mesh) >= 15.0
    assert mesh.areas.sum() == pytest.approx(0.125)


def test_validate_reports_orphaned_periodic_vertex(grid_mesh: Mesh) -> None:
    pairs = np.delete(grid_mesh.periodic_pairs, 1, axis=0)
    broken = Mesh(
        vertices=grid_mesh.vertices,
        triangles=grid_mesh.triangles,
        boundary_edges=grid_mesh.boundary_edges,
        boundary_tags=grid_mesh.boundary_tags,
        periodic_pairs=pairs,
        period=grid_mesh.period,
    )

    found = validate(broken)

    assert len(found) == 1
    assert found[0].kind == "periodic"
    assert found[0].index == grid_mesh.periodic_pairs[1, 0]
    assert "left-boundary" in str(found[0])


def test_validate_reports_clockwise_triangle(grid_mesh: Mesh) -> None:
    triangles = np.array(grid_mesh.triangles)
    triangles[3] = triangles[3, [0, 2, 1]]
    broken = Mesh(
        vertices=grid_mesh.vertices,
        triangles=triangles,
        boundary_edges=grid_mesh.boundary_edges,
        boundary_tags=grid_mesh.boundary_tags,
        periodic_pairs=grid_mesh.periodic_pairs,
        period=grid_mesh.period,
    )

    found = validate(broken)

    assert [(d.kind, d.index) for d in found] == [("area", 3)]


def test_shape_gradients_reference_triangle() -> None:
    points = np.array([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])

    grads, areas = shape_gradients(points)

    assert areas == pytest.approx([0.5])
    assert grads[0] == pytest.approx(
        np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    )
    assert grads[0].sum(axis=0) == pytest.approx([0.0, 0.0])


def test_periodic_edge_pairs_line_up(grid_mesh: Mesh) -> None:
    pairs = grid_mesh.periodic_edge_pairs
    left = grid_mesh.vertices[grid_mesh.edges[pairs[:, 0]]]
    right = grid_mesh.vertices[grid_mesh.edges[pairs[:, 1]]]

    assert len(pairs) == 2
    assert np.all(left[:, :, 0] == 0.0)
    assert np.all(right[:, :, 0] == 0.5)
    assert np.array_equal(
        np.sort(left[:, :, 1], axis=1), np.sort(right[:, :, 1], axis=1)
    )
