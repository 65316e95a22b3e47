# -*- coding: utf-8 -*-
import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.broadphase import BroadPhaseStats
from modules.contact_surface import (
    ContactPolygon,
    Plane,
    clip_polygon,
    clip_tet_tet_plane,
    compute_contact_surface,
    equal_pressure_plane,
    export_surface,
    linear_pressure,
    load_surface,
    sample_pressure_gap,
    tessellate_centroid_fan,
    tet_pair_plane,
)
from modules.errors import ContactStateError, DegenerateTetError, InputError
from modules.mesh import Pose, barycentric_matrices, tet_signed_volumes

UNIT_TET = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
MODULUS = 1e5


def _random_tet(rng, min_volume=1e-3):
    while True:
        points = rng.random((4, 3))
        volume = tet_signed_volumes(points, np.arange(4)[None, :])[0]
        if abs(volume) >= min_volume:
            return points


def _pressure_at(tet, pressures, points):
    inverse = barycentric_matrices(tet)[0]
    zeta = points @ inverse[:, :3].T + inverse[:, 3]
    return zeta @ pressures


def _inside(tet, points, tol=1e-9):
    inverse = barycentric_matrices(tet)[0]
    zeta = points @ inverse[:, :3].T + inverse[:, 3]
    return bool(np.all(zeta >= -tol))


# ---------------------------------------------------------------------------
# Плоскость равного давления
# ---------------------------------------------------------------------------


def test_plane_normalises():
    plane = Plane([0.0, 0.0, 2.0], -1.0)
    assert_allclose(plane.normal, [0, 0, 1])
    assert plane.offset == pytest.approx(-0.5)
    assert_allclose(plane.project([1.0, 2.0, 3.0]), [1.0, 2.0, 0.5])
    with pytest.raises(InputError):
        Plane([0.0, 0.0, 0.0], 1.0)


def test_linear_pressure_reproduces_vertices(rng):
    tet = _random_tet(rng)
    pressures = rng.random(4) * MODULUS
    gradient, constant = linear_pressure(tet, pressures)
    assert_allclose(tet @ gradient + constant, pressures, rtol=1e-10)
    with pytest.raises(DegenerateTetError):
        linear_pressure(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float), pressures)


def test_coincident_tets_give_diagonal_plane():
    pressures_a = MODULUS * np.array([0.0, 1.0, 0.0, 0.0])  # p ∝ x
    pressures_b = MODULUS * np.array([0.0, 0.0, 1.0, 0.0])  # p ∝ y
    plane = equal_pressure_plane(UNIT_TET, pressures_a, UNIT_TET, pressures_b)
    assert_allclose(plane.normal, np.array([1.0, -1.0, 0.0]) / np.sqrt(2.0))
    assert plane.offset == pytest.approx(0.0, abs=1e-15)

    polygon = clip_tet_tet_plane(UNIT_TET, UNIT_TET, plane, pressures_a)
    assert polygon.n_vertices == 3
    area, centroid = polygon.area_centroid()
    assert area == pytest.approx(np.sqrt(2.0) / 4.0)
    assert_allclose(centroid, [1 / 6, 1 / 6, 1 / 3], atol=1e-14)
    assert_allclose(np.sort(polygon.pressures), [0.0, 0.0, 0.5 * MODULUS], atol=1e-9)


def test_parallel_fields_have_no_plane(rng):
    tet = _random_tet(rng)
    pressures = rng.random(4) * MODULUS
    assert equal_pressure_plane(tet, pressures, tet, pressures) is None
    assert equal_pressure_plane(tet, pressures, tet, pressures + 10.0) is None


def test_equal_pressure_on_clipped_polygon(rng):
    polygons = 0
    for _ in range(1000):
        tet_a, tet_b = _random_tet(rng), _random_tet(rng)
        p_a, p_b = rng.random(4) * MODULUS, rng.random(4) * MODULUS
        plane = equal_pressure_plane(tet_a, p_a, tet_b, p_b)
        if plane is None:
            continue
        polygon = clip_tet_tet_plane(tet_a, tet_b, plane, p_a)
        if polygon is None:
            continue
        polygons += 1
        points = polygon.vertices
        assert np.abs(plane.signed_distance(points)).max() <= 1e-9
        assert np.abs(_pressure_at(tet_a, p_a, points) - _pressure_at(tet_b, p_b, points)).max() <= 1e-8 * MODULUS
        assert _inside(tet_a, points) and _inside(tet_b, points)
        assert_allclose(polygon.pressures, np.maximum(_pressure_at(tet_a, p_a, points), 0.0),
                        atol=1e-8 * MODULUS)
    assert polygons > 50


def test_disjoint_tets_give_no_polygon():
    plane = Plane([0.0, 0.0, 1.0], -0.25)
    assert clip_tet_tet_plane(UNIT_TET, UNIT_TET + 5.0, plane) is None


def test_tet_pair_plane_uses_poses(cube):
    mesh, field_ = cube
    top_a = 10  # верхняя грань A
    bottom_b = 8  # нижняя грань B
    plane = tet_pair_plane(mesh, field_, Pose.identity(), top_a,
                           mesh, field_, Pose.from_rotvec([0.0, 0.0, 0.9]), bottom_b)
    assert_allclose(plane.normal, [0.0, 0.0, -1.0], atol=1e-12)
    assert -plane.offset / plane.normal[2] == pytest.approx(0.45)


# ---------------------------------------------------------------------------
# Отсечение и триангуляция
# ---------------------------------------------------------------------------


def test_clip_polygon_halves_square():
    square = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    kept = clip_polygon(square, 0.5 - square[:, 0])
    assert len(kept) == 4
    assert kept[:, 0].max() == pytest.approx(0.5)
    assert len(clip_polygon(square, -np.ones(4))) == 0
    assert clip_polygon(square, np.ones(4)) is square


def test_centroid_fan():
    square = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    polygon = ContactPolygon(square, Plane([0, 0, 1], 0.0), (0, 0), square[:, 0] * MODULUS)
    triangles, pressures = tessellate_centroid_fan(polygon)
    assert triangles.shape == (4, 3, 3)
    assert_allclose(triangles[:, 2], np.tile([0.5, 0.5, 0.0], (4, 1)))
    assert_allclose(pressures[:, 2], 0.5 * MODULUS)
    cross = np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0])
    assert_allclose(0.5 * cross[:, 2].sum(), 1.0)
    assert np.all(cross[:, 2] > 0.0)

    with pytest.raises(InputError):
        tessellate_centroid_fan(ContactPolygon(square[:2], polygon.plane, (0, 0), np.zeros(2)))


# ---------------------------------------------------------------------------
# Поверхность двух тел
# ---------------------------------------------------------------------------


def _stacked_cubes(cube, height=0.9):
    mesh, field_ = cube
    return compute_contact_surface(mesh, field_, Pose.identity(), mesh, field_,
                                   Pose.from_rotvec([0.0, 0.0, height]))


def test_stacked_cubes_surface(cube):
    surface = _stacked_cubes(cube)
    assert not surface.is_empty
    assert surface.normals.shape == (surface.n_triangles, 3)

    areas = surface.triangle_areas()
    vector_area = (areas[:, None] * surface.normals).sum(axis=0)
    assert_allclose(vector_area[:2], 0.0, atol=1e-9)
    assert vector_area[2] < 0.0

    pairs = [tuple(p) for p in surface.pairs.tolist()]
    assert pairs == sorted(pairs)
    assert surface.centroid()[2] == pytest.approx(0.45, abs=0.05)
    # на центральной плоскости z=0.45 давление E·0.1, ближе к рёбрам меньше
    assert surface.pressures.min() >= 0.0
    assert surface.pressures.max() == pytest.approx(0.1 * 1e6, rel=1e-9)
    assert surface.summary()["triangles"] == surface.n_triangles


def test_separated_cubes_surface(cube):
    mesh, field_ = cube
    stats = BroadPhaseStats()
    surface = compute_contact_surface(mesh, field_, Pose.identity(), mesh, field_,
                                      Pose.from_rotvec([0.0, 0.0, 1.2]), stats=stats)
    assert surface.is_empty
    assert surface.area == 0.0
    assert surface.mean_pressure() == 0.0
    assert np.all(np.isnan(surface.centroid()))
    assert stats.candidates == 0


def test_export_and_load_surface(tmp_path, cube):
    surface = _stacked_cubes(cube)
    path, sidecar = export_surface(surface, tmp_path / "surface.obj")
    assert sidecar.name == "surface.p0.txt"

    loaded = load_surface(path)
    assert_allclose(loaded.triangles, surface.triangles, rtol=0, atol=0)
    assert_allclose(loaded.pressures, surface.pressures, rtol=0, atol=0)
    nonzero = surface.triangle_areas() > 1e-12
    assert_allclose(loaded.normals[nonzero], surface.normals[nonzero], atol=1e-9)


def test_load_surface_missing_sidecar(tmp_path):
    path = tmp_path / "lonely.obj"
    path.write_text("v 0 0 0\n", encoding="utf-8")
    with pytest.raises(InputError):
        load_surface(path)


# ---------------------------------------------------------------------------
# Аналитические сечения и веер
# ---------------------------------------------------------------------------


def test_unit_tet_cut_by_horizontal_plane():
    polygon = clip_tet_tet_plane(UNIT_TET, UNIT_TET, Plane([0.0, 0.0, 1.0], -0.25))
    assert polygon.n_vertices == 3
    area, centroid = polygon.area_centroid()
    # сечение z=0.25 - прямоугольный треугольник с катетами 0.75
    assert area == pytest.approx(0.5 * 0.75 ** 2)
    assert_allclose(centroid, [0.25, 0.25, 0.25], atol=1e-14)


def test_regular_pentagon_fan_is_congruent():
    angles = 2.0 * np.pi * np.arange(5) / 5.0
    pentagon = np.column_stack([np.cos(angles), np.sin(angles), np.zeros(5)])
    polygon = ContactPolygon(pentagon, Plane([0, 0, 1], 0.0), (0, 0), np.full(5, MODULUS))
    triangles, pressures = tessellate_centroid_fan(polygon)
    assert triangles.shape == (5, 3, 3)
    assert_allclose(triangles[:, 2], 0.0, atol=1e-14)

    sides = np.sort(np.linalg.norm(triangles - np.roll(triangles, 1, axis=1), axis=2), axis=1)
    assert_allclose(sides, np.tile(sides[0], (5, 1)), rtol=1e-12)
    cross = np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0])
    assert_allclose(0.5 * cross[:, 2], 0.5 * np.sin(2.0 * np.pi / 5.0), rtol=1e-12)
    assert_allclose(pressures, MODULUS)


def test_centroid_fan_keeps_vanishing_triangles():
    # повторённая вершина даёт треугольник нулевой площади
    square = np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    polygon = ContactPolygon(square, Plane([0, 0, 1], 0.0), (0, 0), np.zeros(5))
    triangles, _ = tessellate_centroid_fan(polygon)
    cross = np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0])
    assert len(triangles) == 5
    assert np.count_nonzero(cross[:, 2] == 0.0) == 1
    assert 0.5 * cross[:, 2].sum() == pytest.approx(1.0)

    # вырожденный многоугольник: центр веера в среднем вершин, без NaN
    segment = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    pressures = np.array([0.0, 1.0, 2.0]) * MODULUS
    triangles, fan_pressures = tessellate_centroid_fan(
        ContactPolygon(segment, Plane([0, 0, 1], 0.0), (0, 0), pressures)
    )
    assert len(triangles) == 3
    assert_allclose(triangles[:, 2], np.tile([1.0, 0.0, 0.0], (3, 1)))
    assert_allclose(fan_pressures[:, 2], MODULUS)
    assert not np.isnan(fan_pressures).any()


# ---------------------------------------------------------------------------
# Связность и непрерывность поверхности
# ---------------------------------------------------------------------------

TILTED_POSE = Pose.from_rotvec([0.03, -0.02, 0.88], [0.05, -0.04, 0.3])


def _polygon_edges(surface):
    starts = np.concatenate([polygon.vertices for polygon in surface.polygons])
    ends = np.concatenate([np.roll(polygon.vertices, -1, axis=0) for polygon in surface.polygons])
    owners = np.concatenate([np.full(polygon.n_vertices, k) for k, polygon in enumerate(surface.polygons)])
    return starts, ends, owners


def _strictly_inside(mesh, pose, points, margin=1e-7):
    local = pose.inverse_transform_points(points)
    low, high = mesh.vertices.min(axis=0), mesh.vertices.max(axis=0)
    return np.all((local > low + margin) & (local < high - margin), axis=1)


def test_interior_edges_are_shared_by_neighbours(cube):
    mesh, field_ = cube
    surface = compute_contact_surface(mesh, field_, Pose.identity(), mesh, field_, TILTED_POSE)
    starts, ends, owners = _polygon_edges(surface)
    midpoints = 0.5 * (starts + ends)
    interior = (
        _strictly_inside(mesh, Pose.identity(), midpoints)
        & _strictly_inside(mesh, TILTED_POSE, midpoints)
        & (np.linalg.norm(ends - starts, axis=1) > 1e-7)
    )
    assert interior.sum() > 10

    tol = 1e-9
    for k in np.flatnonzero(interior):
        same = (np.linalg.norm(starts - starts[k], axis=1) < tol) & (np.linalg.norm(ends - ends[k], axis=1) < tol)
        flipped = (np.linalg.norm(starts - ends[k], axis=1) < tol) & (np.linalg.norm(ends - starts[k], axis=1) < tol)
        partners = np.flatnonzero((same | flipped) & (owners != owners[k]))
        # ровно один сосед: ни щелей, ни наложений
        assert len(partners) == 1, f"ребро {k} многоугольника {owners[k]}: соседей {len(partners)}"


def test_area_and_centroid_are_continuous_in_pose(cube):
    mesh, field_ = cube
    base = compute_contact_surface(mesh, field_, Pose.identity(), mesh, field_, TILTED_POSE)
    for h in (1e-3, 1e-4, 1e-5):
        for direction in np.eye(3):
            moved = compute_contact_surface(mesh, field_, Pose.identity(), mesh, field_,
                                            TILTED_POSE.translated(h * direction))
            assert abs(moved.area - base.area) <= 10.0 * h
            assert np.linalg.norm(moved.centroid() - base.centroid()) <= 10.0 * h


# ---------------------------------------------------------------------------
# Шар на слое: предел жёсткого тела
# ---------------------------------------------------------------------------


def _sphere_surface(make_sphere_on_slab, ratio):
    (mesh_a, field_a, pose_a), (mesh_b, field_b, pose_b) = make_sphere_on_slab(ratio=ratio)
    return compute_contact_surface(mesh_a, field_a, pose_a, mesh_b, field_b, pose_b)


def test_stiff_sphere_surface_matches_cap_area(make_sphere_on_slab):
    radius, depth = 0.5, 0.1
    surface = _sphere_surface(make_sphere_on_slab, 1e3)
    # поверхность ложится на погружённый сегмент шара: 2πrd
    assert surface.area == pytest.approx(2.0 * np.pi * radius * depth, rel=0.05)
    assert surface.triangles[..., 2].max() <= 1e-9


def test_sphere_surface_approaches_cap_with_stiffness(make_sphere_on_slab):
    areas = [_sphere_surface(make_sphere_on_slab, ratio).area for ratio in (10.0, 100.0, 1000.0)]
    assert areas[0] < areas[1] < areas[2]
    cap = 2.0 * np.pi * 0.5 * 0.1
    errors = [abs(area - cap) for area in areas]
    assert errors[2] < errors[0]


# ---------------------------------------------------------------------------
# Выборочная проверка равенства давлений
# ---------------------------------------------------------------------------


def test_sampled_pressures_agree_on_surface(cube):
    mesh, field_ = cube
    surface = compute_contact_surface(mesh, field_, Pose.identity(), mesh, field_, TILTED_POSE)
    first = sample_pressure_gap(surface, mesh, field_, mesh, field_, 200, np.random.default_rng(3))
    again = sample_pressure_gap(surface, mesh, field_, mesh, field_, 200, np.random.default_rng(3))
    assert first == again
    assert first["samples"] == 200
    assert first["relative_gap"] < 1e-8


def test_sample_pressure_gap_edge_cases(cube, rng, tmp_path):
    mesh, field_ = cube
    empty = compute_contact_surface(mesh, field_, Pose.identity(), mesh, field_, Pose.from_rotvec([0, 0, 1.5]))
    assert sample_pressure_gap(empty, mesh, field_, mesh, field_, 10, rng)["samples"] == 0

    surface = _stacked_cubes(cube)
    with pytest.raises(InputError):
        sample_pressure_gap(surface, mesh, field_, mesh, field_, -1, rng)

    path, _ = export_surface(surface, tmp_path / "surface.obj")
    with pytest.raises(ContactStateError):
        sample_pressure_gap(load_surface(path), mesh, field_, mesh, field_, 10, rng)
