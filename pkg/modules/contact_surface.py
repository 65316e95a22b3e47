# -*- coding: utf-8 -*-
"""
Узкая фаза: плоскость равного давления для пары тетраэдров, отсечение
многоугольника tetA ∩ tetB ∩ плоскость, веерная триангуляция от центроида
и сборка поверхности контакта.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from modules.broadphase import BroadPhaseStats, Bvh, broad_phase, build_bvh
from modules.errors import ContactStateError, DegenerateTetError, InputError
from modules.field_gen import ExtentField
from modules.helpers import plane_basis, polygon_area_centroid, triangle_areas
from modules.logger import log
from modules.mesh import DEGENERATE_VOLUME, Pose, TetMesh, barycentric_matrices, eval_extent, tet_signed_volumes


# Константы
PLANE_DEGENERACY = 1e-14  # относительный порог параллельных полей
POLYGON_AREA_FLOOR = 1e-16  # м², минимальная площадь многоугольника
MERGE_TOL = 1e-12  # относительный допуск слияния совпадающих вершин


@dataclass(frozen=True)
class Plane:
    """Плоскость n̂·R + d = 0 в мировой системе"""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = np.asarray(self.normal, dtype=float).reshape(3)
        norm = np.linalg.norm(normal)
        if norm == 0.0:
            raise InputError("Нормаль плоскости не может быть нулевой")
        object.__setattr__(self, "normal", normal / norm)
        object.__setattr__(self, "offset", float(self.offset) / norm)

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal + self.offset

    def project(self, point: np.ndarray) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        return point - self.signed_distance(point) * self.normal


@dataclass
class ContactPolygon:
    """Выпуклый многоугольник поверхности контакта для одной пары тетраэдров"""

    vertices: np.ndarray
    plane: Plane
    pair: Tuple[int, int]
    pressures: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def area_centroid(self):
        return polygon_area_centroid(self.vertices, self.plane.normal)


@dataclass
class ContactSurface:
    """
    Поверхность контакта S∩ двух тел

    triangles: (T, 3, 3) вершины треугольников, мировая система
    pressures: (T, 3) p₀ в вершинах треугольников
    normals: (T, 3) нормаль фасета n̂ (от B к A)
    pairs: (T, 2) исходная пара (tetA, tetB) для каждого треугольника
    """

    triangles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3)))
    pressures: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    normals: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    pairs: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int))
    polygons: List[ContactPolygon] = field(default_factory=list)
    pose_a: Optional[Pose] = None
    pose_b: Optional[Pose] = None

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def is_empty(self) -> bool:
        return self.n_triangles == 0

    def triangle_areas(self) -> np.ndarray:
        return triangle_areas(self.triangles)

    @property
    def area(self) -> float:
        return float(self.triangle_areas().sum())

    def centroid(self) -> np.ndarray:
        """Центр тяжести площади поверхности"""
        areas = self.triangle_areas()
        if areas.sum() == 0.0:
            return np.full(3, np.nan)
        centers = self.triangles.mean(axis=1)
        return (areas[:, None] * centers).sum(axis=0) / areas.sum()

    def mean_pressure(self) -> float:
        areas = self.triangle_areas()
        if areas.sum() == 0.0:
            return 0.0
        return float((areas * self.pressures.mean(axis=1)).sum() / areas.sum())

    def summary(self) -> dict:
        return {
            "polygons": len(self.polygons),
            "triangles": self.n_triangles,
            "area": self.area,
            "mean_pressure": self.mean_pressure(),
        }


# ---------------------------------------------------------------------------
# Плоскость равного давления
# ---------------------------------------------------------------------------


def linear_pressure(tet_world: np.ndarray, vertex_pressures: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Линейная функция давления внутри тетраэдра: p₀(R) = g·R + c

    tet_world: (4, 3) вершины в мировой системе, vertex_pressures: (4,) p₀ в вершинах
    """
    if abs(tet_signed_volumes(tet_world, np.arange(4)[None, :])[0]) < DEGENERATE_VOLUME:
        raise DegenerateTetError("Вырожденный тетраэдр при построении плоскости равного давления")
    inverse = barycentric_matrices(tet_world)[0]
    gradient = inverse[:, :3].T @ vertex_pressures
    constant = float(vertex_pressures @ inverse[:, 3])
    return gradient, constant


def _plane_from_linear(g_a, c_a, g_b, c_b) -> Optional[Plane]:
    coefficient = g_a - g_b
    magnitude = np.linalg.norm(coefficient)
    scale = np.linalg.norm(g_a) + np.linalg.norm(g_b)
    if magnitude == 0.0 or magnitude < PLANE_DEGENERACY * scale:
        return None
    return Plane(coefficient, c_a - c_b)


def equal_pressure_plane(tet_a: np.ndarray, pressures_a: np.ndarray,
                         tet_b: np.ndarray, pressures_b: np.ndarray) -> Optional[Plane]:
    """
    Плоскость p₀A(R) = p₀B(R) для двух тетраэдров в мировой системе

    Нормаль направлена в сторону роста p₀A - p₀B, то есть от тела B к телу A.
    Возвращает None для параллельных полей.
    """
    g_a, c_a = linear_pressure(tet_a, pressures_a)
    g_b, c_b = linear_pressure(tet_b, pressures_b)
    return _plane_from_linear(g_a, c_a, g_b, c_b)


def tet_pair_plane(mesh_a: TetMesh, field_a: ExtentField, pose_a: Pose, tet_a: int,
                   mesh_b: TetMesh, field_b: ExtentField, pose_b: Pose, tet_b: int) -> Optional[Plane]:
    """Плоскость равного давления для пары тетраэдров двух тел"""
    world_a = pose_a.transform_points(mesh_a.tet_points(tet_a))
    world_b = pose_b.transform_points(mesh_b.tet_points(tet_b))
    return equal_pressure_plane(
        world_a, field_a.pressure()[mesh_a.tets[tet_a]],
        world_b, field_b.pressure()[mesh_b.tets[tet_b]],
    )


# ---------------------------------------------------------------------------
# Отсечение
# ---------------------------------------------------------------------------


def clip_polygon(points: np.ndarray, distances: np.ndarray) -> np.ndarray:
    """Сазерленд-Ходжман: оставить часть многоугольника с distances >= 0"""
    inside = distances >= 0.0
    if inside.all():
        return points
    if not inside.any():
        return points[:0]
    result = []
    n = len(points)
    for i in range(n):
        j = (i + 1) % n
        if inside[i]:
            result.append(points[i])
        if inside[i] != inside[j]:
            t = distances[i] / (distances[i] - distances[j])
            result.append(points[i] + t * (points[j] - points[i]))
    return np.array(result)


def _merge_close(points: np.ndarray, tol: float) -> np.ndarray:
    if len(points) < 2:
        return points
    keep = np.linalg.norm(points - np.roll(points, 1, axis=0), axis=1) > tol
    if not keep.any():
        return points[:1]
    return points[keep]


def _seed_square(plane: Plane, center: np.ndarray, half_size: float) -> np.ndarray:
    u, v = plane_basis(plane.normal)
    c = plane.project(center)
    return np.array([
        c - half_size * u - half_size * v,
        c + half_size * u - half_size * v,
        c + half_size * u + half_size * v,
        c - half_size * u + half_size * v,
    ])


def clip_tet_tet_plane(tet_a: np.ndarray, tet_b: np.ndarray, plane: Plane,
                       pressures_a: Optional[np.ndarray] = None,
                       pair: Tuple[int, int] = (0, 0)) -> Optional[ContactPolygon]:
    """
    Многоугольник tetA ∩ tetB ∩ плоскость (вершины против часовой стрелки вокруг n̂)

    Большой квадрат на плоскости последовательно отсекается 8 полупространствами
    двух тетраэдров. p₀ в вершинах интерполируется по полю тетраэдра A.
    """
    tet_a = np.asarray(tet_a, dtype=float)
    tet_b = np.asarray(tet_b, dtype=float)
    both = np.vstack([tet_a, tet_b])
    extent = float(np.linalg.norm(both.max(axis=0) - both.min(axis=0)))
    polygon = _seed_square(plane, tet_a.mean(axis=0), 2.0 * extent)

    inverse_a = barycentric_matrices(tet_a)[0]
    inverse_b = barycentric_matrices(tet_b)[0]
    for inverse in (inverse_a, inverse_b):
        for row in inverse:
            polygon = clip_polygon(polygon, polygon @ row[:3] + row[3])
            if len(polygon) < 3:
                return None

    polygon = _merge_close(polygon, MERGE_TOL * max(extent, 1e-300))
    if len(polygon) < 3:
        return None
    area, _ = polygon_area_centroid(polygon, plane.normal)
    if area < POLYGON_AREA_FLOOR:
        return None

    if pressures_a is None:
        pressures = np.zeros(len(polygon))
    else:
        zeta = polygon @ inverse_a[:, :3].T + inverse_a[:, 3]
        pressures = np.maximum(zeta @ np.asarray(pressures_a, dtype=float), 0.0)
    return ContactPolygon(polygon, plane, tuple(int(i) for i in pair), pressures)


def _centroid_pressure(polygon: ContactPolygon, area: float) -> float:
    """p₀ в центроиде площади; точно для линейного поля"""
    pts, p = polygon.vertices, polygon.pressures
    if area <= 0.0:
        return float(p.mean())
    signed = 0.5 * np.cross(pts[1:-1] - pts[0], pts[2:] - pts[0]) @ polygon.plane.normal
    means = (p[0] + p[1:-1] + p[2:]) / 3.0
    return float((signed * means).sum() / area)


def tessellate_centroid_fan(polygon: ContactPolygon) -> Tuple[np.ndarray, np.ndarray]:
    """
    Веер из n треугольников (v_i, v_{i+1}, c) с общей вершиной в центроиде площади

    Треугольники нулевой площади сохраняются.
    Returns:
        triangles (n, 3, 3), pressures (n, 3)
    """
    if polygon.n_vertices < 3:
        raise InputError("Для триангуляции нужно не менее 3 вершин")
    area, centroid = polygon.area_centroid()
    p_center = _centroid_pressure(polygon, area)

    current = polygon.vertices
    following = np.roll(current, -1, axis=0)
    n = polygon.n_vertices
    triangles = np.stack([current, following, np.broadcast_to(centroid, (n, 3))], axis=1)
    pressures = np.column_stack([
        polygon.pressures, np.roll(polygon.pressures, -1), np.full(n, p_center)
    ])
    return triangles, pressures


# ---------------------------------------------------------------------------
# Поверхность контакта
# ---------------------------------------------------------------------------


def compute_contact_surface(mesh_a: TetMesh, field_a: ExtentField, pose_a: Pose,
                            mesh_b: TetMesh, field_b: ExtentField, pose_b: Pose,
                            bvh_a: Optional[Bvh] = None, bvh_b: Optional[Bvh] = None,
                            stats: Optional[BroadPhaseStats] = None) -> ContactSurface:
    """
    Широкая фаза → плоскость равного давления → отсечение → веер → объединение

    Фасеты упорядочены по паре (tetA, tetB).
    """
    bvh_a = bvh_a if bvh_a is not None else build_bvh(mesh_a)
    bvh_b = bvh_b if bvh_b is not None else build_bvh(mesh_b)
    candidates = broad_phase(bvh_a, pose_a, bvh_b, pose_b, stats)
    surface = ContactSurface(pose_a=pose_a, pose_b=pose_b)
    if not candidates:
        return surface

    pairs = np.array(candidates, dtype=int)
    world_a = pose_a.transform_points(mesh_a.tet_points(pairs[:, 0]))
    world_b = pose_b.transform_points(mesh_b.tet_points(pairs[:, 1]))
    p_a = field_a.pressure()[mesh_a.tets[pairs[:, 0]]]
    p_b = field_b.pressure()[mesh_b.tets[pairs[:, 1]]]

    inverse_a = barycentric_matrices(world_a)
    inverse_b = barycentric_matrices(world_b)
    g_a = np.einsum("kai,ka->ki", inverse_a[:, :, :3], p_a)
    c_a = np.einsum("ka,ka->k", inverse_a[:, :, 3], p_a)
    g_b = np.einsum("kai,ka->ki", inverse_b[:, :, :3], p_b)
    c_b = np.einsum("ka,ka->k", inverse_b[:, :, 3], p_b)

    triangles, pressures, normals, owners = [], [], [], []
    skipped = 0
    for k, pair in enumerate(candidates):
        plane = _plane_from_linear(g_a[k], c_a[k], g_b[k], c_b[k])
        if plane is None:
            skipped += 1
            continue
        polygon = clip_tet_tet_plane(world_a[k], world_b[k], plane, p_a[k], pair)
        if polygon is None:
            continue
        tri, pres = tessellate_centroid_fan(polygon)
        surface.polygons.append(polygon)
        triangles.append(tri)
        pressures.append(pres)
        normals.append(np.broadcast_to(plane.normal, (len(tri), 3)))
        owners.append(np.broadcast_to(pair, (len(tri), 2)))

    if skipped:
        log.debug(f"Пропущено пар с параллельными полями: {skipped}")
    if triangles:
        surface.triangles = np.concatenate(triangles)
        surface.pressures = np.concatenate(pressures)
        surface.normals = np.concatenate(normals)
        surface.pairs = np.concatenate(owners).astype(int)
    log.debug(
        f"Поверхность контакта: кандидатов {len(candidates)}, "
        f"многоугольников {len(surface.polygons)}, площадь {surface.area:.6g} м²"
    )
    return surface


def sample_pressure_gap(surface: ContactSurface, mesh_a: TetMesh, field_a: ExtentField,
                        mesh_b: TetMesh, field_b: ExtentField, n_samples: int,
                        rng: np.random.Generator) -> dict:
    """
    Выборочная проверка равенства давлений p₀A = p₀B на поверхности контакта

    Треугольник выбирается с вероятностью, пропорциональной площади, точка в
    нём - равномерно (барицентрические веса из распределения Дирихле). В каждой
    точке давления тел вычисляются в исходных тетраэдрах пары.

    Raises:
        ContactStateError: у поверхности нет поз тел (загружена из файла)
    """
    if n_samples < 0:
        raise InputError(f"Число точек проверки должно быть неотрицательным, получено {n_samples}")
    report = {"samples": 0, "max_gap": 0.0, "relative_gap": 0.0, "sample_centroid": None}
    if surface.is_empty or n_samples == 0:
        return report
    if surface.pose_a is None or surface.pose_b is None or (surface.pairs < 0).any():
        raise ContactStateError("Поверхность без поз и пар тетраэдров нельзя проверить")

    areas = surface.triangle_areas()
    picks = rng.choice(surface.n_triangles, size=n_samples, p=areas / areas.sum())
    weights = rng.dirichlet(np.ones(3), size=n_samples)
    points = np.einsum("kv,kvi->ki", weights, surface.triangles[picks])
    local_a = surface.pose_a.inverse_transform_points(points)
    local_b = surface.pose_b.inverse_transform_points(points)

    gaps = np.empty(n_samples)
    for k, (tet_a, tet_b) in enumerate(surface.pairs[picks]):
        p_a = field_a.modulus * eval_extent(mesh_a, field_a, int(tet_a), local_a[k])
        p_b = field_b.modulus * eval_extent(mesh_b, field_b, int(tet_b), local_b[k])
        gaps[k] = abs(p_a - p_b)

    max_gap = float(gaps.max())
    report.update({
        "samples": n_samples,
        "max_gap": max_gap,
        "relative_gap": max_gap / max(field_a.modulus, field_b.modulus),
        "sample_centroid": points.mean(axis=0).tolist(),
    })
    log.debug(f"Проверка равенства давлений: {n_samples} точек, max |p₀A - p₀B| = {max_gap:.3g} Па")
    return report


# ---------------------------------------------------------------------------
# Экспорт
# ---------------------------------------------------------------------------


def export_surface(surface: ContactSurface, path: Union[str, Path]) -> Tuple[Path, Path]:
    """Запись треугольников в OBJ и p₀ вершин в файл <имя>.p0.txt"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sidecar = path.with_suffix(".p0.txt")

    lines = [f"# contact surface: {surface.n_triangles} triangles, area {surface.area!r}"]
    for point in surface.triangles.reshape(-1, 3).tolist():
        lines.append("v {!r} {!r} {!r}".format(*point))
    for t in range(surface.n_triangles):
        lines.append(f"f {3 * t + 1} {3 * t + 2} {3 * t + 3}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    sidecar.write_text(
        "\n".join(repr(p) for p in surface.pressures.reshape(-1).tolist()) + "\n", encoding="utf-8"
    )
    log.info(f"Поверхность контакта экспортирована: {path} ({surface.n_triangles} треугольников)")
    return path, sidecar


def load_surface(path: Union[str, Path]) -> ContactSurface:
    """Чтение поверхности, записанной export_surface (нормали восстанавливаются по треугольникам)"""
    path = Path(path)
    sidecar = path.with_suffix(".p0.txt")
    if not path.exists() or not sidecar.exists():
        raise InputError(f"Не найден файл поверхности или p₀: {path}")

    vertices, faces = [], []
    for line in path.read_text(encoding="utf-8").splitlines():
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "v":
            vertices.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    pressures = np.array([float(x) for x in sidecar.read_text(encoding="utf-8").split()])

    vertices = np.array(vertices, dtype=float).reshape(-1, 3)
    faces = np.array(faces, dtype=int).reshape(-1, 3)
    if len(pressures) != len(vertices):
        raise InputError(f"Число значений p₀ ({len(pressures)}) не равно числу вершин ({len(vertices)})")

    triangles = vertices[faces]
    cross = np.cross(triangles[:, 1] - triangles[:, 0], triangles[:, 2] - triangles[:, 0])
    norms = np.linalg.norm(cross, axis=1, keepdims=True)
    normals = np.divide(cross, norms, out=np.zeros_like(cross), where=norms > 0.0)
    return ContactSurface(
        triangles=triangles,
        pressures=pressures[faces],
        normals=normals,
        pairs=np.full((len(faces), 2), -1, dtype=int),
    )
