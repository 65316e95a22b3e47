# -*- coding: utf-8 -*-
"""
Тетраэдральная сетка: представление, валидация, ввод/вывод формата ptm,
барицентрическая геометрия и примитивы вычисления полей.

TetMesh неизменяема после построения, все запросы только читают данные.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, List, Optional, Tuple, Union

import numpy as np

from modules.errors import (
    DegenerateTetError,
    InputError,
    MeshParseError,
    MeshValidationError,
    PointOutsideTetError,
)
from modules.helpers import is_rotation, rotation_from_rotvec
from modules.logger import log

if TYPE_CHECKING:
    from modules.field_gen import ExtentField


# Константы
DEGENERATE_VOLUME = 1e-18  # м³, порог вырожденного тетраэдра
BARYCENTRIC_TOL = 1e-9  # допуск на барицентрические координаты
PTM_HEADER = "ptm 1"

# Грани тетраэдра с положительным объёмом, ориентированные наружу.
# i-я грань противолежит вершине i.
LOCAL_FACES = np.array([[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]], dtype=int)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class Pose:
    """Положение тела: поворот и перенос системы тела в мировой системе"""

    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        translation = np.asarray(self.translation, dtype=float).reshape(3)
        if not is_rotation(rotation):
            raise InputError("Матрица поворота не ортонормальна или det != +1")
        object.__setattr__(self, "rotation", _frozen(rotation))
        object.__setattr__(self, "translation", _frozen(translation))

    @classmethod
    def identity(cls) -> "Pose":
        return cls()

    @classmethod
    def from_rotvec(cls, translation=(0.0, 0.0, 0.0), rotvec=(0.0, 0.0, 0.0)) -> "Pose":
        return cls(rotation_from_rotvec(rotvec), np.asarray(translation, dtype=float))

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Точки из системы тела в мировую"""
        return np.asarray(points, dtype=float) @ self.rotation.T + self.translation

    def transform_directions(self, directions: np.ndarray) -> np.ndarray:
        return np.asarray(directions, dtype=float) @ self.rotation.T

    def inverse_transform_points(self, points: np.ndarray) -> np.ndarray:
        """Точки из мировой системы в систему тела"""
        return (np.asarray(points, dtype=float) - self.translation) @ self.rotation

    def relative_to(self, other: "Pose") -> "Pose":
        """Положение этого тела в системе тела other"""
        rotation = other.rotation.T @ self.rotation
        translation = other.rotation.T @ (self.translation - other.translation)
        return Pose(rotation, translation)

    def translated(self, offset) -> "Pose":
        return Pose(self.rotation, self.translation + np.asarray(offset, dtype=float))

    def allclose(self, other: "Pose", atol: float = 1e-12) -> bool:
        return bool(
            np.allclose(self.rotation, other.rotation, atol=atol, rtol=0.0)
            and np.allclose(self.translation, other.translation, atol=atol, rtol=0.0)
        )


@dataclass(frozen=True)
class BodyState:
    """
    Кинематическое состояние твёрдого тела

    angular_velocity - угловая скорость (рад/с) в мировой системе,
    linear_velocity - скорость начала системы тела (м/с) в мировой системе.
    """

    pose: Pose = field(default_factory=Pose)
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(
            self, "angular_velocity", _frozen(np.asarray(self.angular_velocity, dtype=float).reshape(3))
        )
        object.__setattr__(
            self, "linear_velocity", _frozen(np.asarray(self.linear_velocity, dtype=float).reshape(3))
        )

    @property
    def origin(self) -> np.ndarray:
        return self.pose.translation

    def is_finite(self) -> bool:
        return bool(
            np.all(np.isfinite(self.pose.rotation))
            and np.all(np.isfinite(self.pose.translation))
            and np.all(np.isfinite(self.angular_velocity))
            and np.all(np.isfinite(self.linear_velocity))
        )


def world_point_velocity(state: BodyState, point) -> np.ndarray:
    """Скорость материальной точки тела, совпадающей с мировой точкой point"""
    point = np.asarray(point, dtype=float)
    return state.linear_velocity + np.cross(state.angular_velocity, point - state.origin)


@dataclass(frozen=True)
class BarycentricCoords:
    """Барицентрические координаты ζ точки относительно тетраэдра"""

    zeta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "zeta", _frozen(np.asarray(self.zeta, dtype=float).reshape(4)))

    def is_inside(self, tol: float = BARYCENTRIC_TOL) -> bool:
        return bool(np.all(self.zeta >= -tol))

    def __iter__(self):
        return iter(self.zeta)


def tet_signed_volumes(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Ориентированные объёмы тетраэдров"""
    p = vertices[tets]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    e3 = p[:, 3] - p[:, 0]
    return np.einsum("ij,ij->i", np.cross(e1, e2), e3) / 6.0


def orient_tets(vertices: np.ndarray, tets: np.ndarray) -> Tuple[np.ndarray, int]:
    """Перестановка двух индексов у тетраэдров с отрицательным объёмом"""
    tets = np.array(tets, dtype=int, copy=True)
    negative = tet_signed_volumes(vertices, tets) < 0.0
    tets[negative] = tets[negative][:, [0, 1, 3, 2]]
    return tets, int(np.count_nonzero(negative))


def barycentric_matrices(tet_points: np.ndarray) -> np.ndarray:
    """
    Обратные матрицы вершинного преобразования, shape (K, 4, 4)

    Строка i матрицы даёт ζ_i = M[i, :3]·R + M[i, 3].
    """
    tet_points = np.asarray(tet_points, dtype=float).reshape(-1, 4, 3)
    forward = np.ones((len(tet_points), 4, 4))
    forward[:, :3, :] = tet_points.transpose(0, 2, 1)
    return np.linalg.inv(forward)


class TetMesh:
    """
    Тетраэдральная сетка одного тела

    Атрибуты:
        vertices: (N, 3) координаты вершин в системе тела, м
        tets: (M, 4) индексы вершин, все тетраэдры с положительным объёмом
        boundary_faces: (F, 3) граничные треугольники, ориентированы наружу
    """

    def __init__(self, vertices, tets, validate: bool = True):
        vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        tets = np.asarray(tets, dtype=int).reshape(-1, 4)

        if validate:
            tets = _validate_and_orient(vertices, tets)

        self.vertices = _frozen(vertices)
        self.tets = _frozen(tets)
        self.boundary_faces = _frozen(_boundary_faces(tets))

        if validate:
            _check_closed_surface(self.boundary_faces)

        self._tet_points = None

    def __repr__(self) -> str:
        return f"TetMesh(vertices={self.n_vertices}, tets={self.n_tets}, boundary_faces={len(self.boundary_faces)})"

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    def tet_points(self, indices=None) -> np.ndarray:
        """Координаты вершин тетраэдров, shape (M, 4, 3)"""
        if self._tet_points is None:
            self._tet_points = _frozen(self.vertices[self.tets])
        if indices is None:
            return self._tet_points
        return self._tet_points[indices]

    def signed_volumes(self) -> np.ndarray:
        return tet_signed_volumes(self.vertices, self.tets)

    def volume(self) -> float:
        return float(np.sum(self.signed_volumes()))

    def boundary_vertices(self) -> np.ndarray:
        return np.unique(self.boundary_faces)

    def boundary_vector_area(self) -> np.ndarray:
        """Сумма векторных площадей граничных граней (ноль для замкнутой поверхности)"""
        p = self.vertices[self.boundary_faces]
        return 0.5 * np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]).sum(axis=0)

    def boundary_area(self) -> float:
        p = self.vertices[self.boundary_faces]
        return float(0.5 * np.linalg.norm(np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]), axis=1).sum())

    def boundary_volume(self) -> float:
        """Объём по теореме о дивергенции через граничные грани"""
        p = self.vertices[self.boundary_faces]
        return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)


def _validate_and_orient(vertices: np.ndarray, tets: np.ndarray) -> np.ndarray:
    n = len(vertices)
    if len(tets) == 0:
        raise MeshValidationError("Сетка не содержит тетраэдров")
    if not np.all(np.isfinite(vertices)):
        raise MeshValidationError("Координаты вершин должны быть конечными")
    bad = np.flatnonzero((tets < 0).any(axis=1) | (tets >= n).any(axis=1))
    if bad.size:
        raise MeshValidationError(
            f"Тетраэдр {int(bad[0])} ссылается на вершину вне диапазона [0, {n})"
        )
    if np.any(np.sort(tets, axis=1)[:, 1:] == np.sort(tets, axis=1)[:, :-1]):
        raise MeshValidationError("Тетраэдр с повторяющимися вершинами")
    _, counts = np.unique(np.sort(tets, axis=1), axis=0, return_counts=True)
    if np.any(counts > 1):
        raise MeshValidationError("Сетка содержит дублирующиеся тетраэдры")

    tets, flipped = orient_tets(vertices, tets)
    if flipped:
        log.debug(f"Переориентировано тетраэдров: {flipped}")

    volumes = tet_signed_volumes(vertices, tets)
    degenerate = np.flatnonzero(np.abs(volumes) < DEGENERATE_VOLUME)
    if degenerate.size:
        raise DegenerateTetError(
            f"Вырожденный тетраэдр {int(degenerate[0])}: |V| < {DEGENERATE_VOLUME} м³"
        )
    return tets


def _boundary_faces(tets: np.ndarray) -> np.ndarray:
    faces = tets[:, LOCAL_FACES].reshape(-1, 3)
    keys = np.sort(faces, axis=1)
    _, first, counts = np.unique(keys, axis=0, return_index=True, return_counts=True)
    if np.any(counts > 2):
        raise MeshValidationError("Неманифолдная сетка: грань принадлежит более чем двум тетраэдрам")
    single = np.sort(first[counts == 1])
    return faces[single]


def _check_closed_surface(boundary_faces: np.ndarray):
    """Каждое граничное ребро используется ровно двумя гранями в противоположных направлениях"""
    if len(boundary_faces) == 0:
        raise MeshValidationError("Пустая граничная поверхность")
    directed = np.concatenate(
        [boundary_faces[:, [0, 1]], boundary_faces[:, [1, 2]], boundary_faces[:, [2, 0]]]
    )
    n = int(boundary_faces.max()) + 1
    codes = directed[:, 0].astype(np.int64) * n + directed[:, 1]
    reverse = directed[:, 1].astype(np.int64) * n + directed[:, 0]
    unique_codes, counts = np.unique(codes, return_counts=True)
    if np.any(counts != 1):
        raise MeshValidationError("Граница не ориентируема: ребро повторяется в одном направлении")
    if not np.all(np.isin(reverse, unique_codes)):
        raise MeshValidationError("Граница не замкнута: ребро без парной грани")


# ---------------------------------------------------------------------------
# Формат ptm
# ---------------------------------------------------------------------------


def _content_lines(text: str) -> List[Tuple[int, str]]:
    lines = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append((number, line))
    return lines


def _section_count(lines, pos: int, keyword: str) -> int:
    if pos >= len(lines):
        raise MeshParseError(f"Ожидалась секция '{keyword}', достигнут конец файла")
    number, line = lines[pos]
    parts = line.split()
    if len(parts) != 2 or parts[0] != keyword:
        raise MeshParseError(f"Строка {number}: ожидалось '{keyword} N', получено '{line}'")
    try:
        count = int(parts[1])
    except ValueError:
        raise MeshParseError(f"Строка {number}: некорректное количество '{parts[1]}'")
    if count < 0:
        raise MeshParseError(f"Строка {number}: отрицательное количество")
    return count


def _read_rows(lines, pos: int, count: int, width: int, cast):
    rows = []
    for k in range(count):
        if pos + k >= len(lines):
            raise MeshParseError(f"Ожидалось {count} строк данных, файл закончился")
        number, line = lines[pos + k]
        parts = line.split()
        if len(parts) != width:
            raise MeshParseError(f"Строка {number}: ожидалось {width} значений, получено {len(parts)}")
        try:
            rows.append([cast(p) for p in parts])
        except ValueError:
            raise MeshParseError(f"Строка {number}: некорректное значение в '{line}'")
    return rows


def parse_ptm(text: str) -> Tuple[np.ndarray, np.ndarray]:
    """Разбор текста ptm в массивы вершин и тетраэдров (без валидации)"""
    lines = _content_lines(text)
    if not lines or " ".join(lines[0][1].split()) != PTM_HEADER:
        raise MeshParseError(f"Первая строка должна быть '{PTM_HEADER}'")

    n_vertices = _section_count(lines, 1, "vertices")
    vertices = _read_rows(lines, 2, n_vertices, 3, float)
    pos = 2 + n_vertices
    n_tets = _section_count(lines, pos, "tets")
    tets = _read_rows(lines, pos + 1, n_tets, 4, int)
    if pos + 1 + n_tets != len(lines):
        number, _ = lines[pos + 1 + n_tets]
        raise MeshParseError(f"Строка {number}: лишние данные после секции tets")

    return (
        np.array(vertices, dtype=float).reshape(-1, 3),
        np.array(tets, dtype=int).reshape(-1, 4),
    )


def load_mesh(path: Union[str, Path]) -> TetMesh:
    """Загрузить и провалидировать сетку из файла ptm"""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Файл сетки не найден: {path}")
    vertices, tets = parse_ptm(path.read_text(encoding="utf-8"))
    mesh = TetMesh(vertices, tets)
    log.info(f"Загружена сетка {path.name}: {mesh.n_vertices} вершин, {mesh.n_tets} тетраэдров")
    return mesh


def save_mesh(mesh: TetMesh, path: Union[str, Path]) -> Path:
    """Записать сетку в формате ptm"""
    path = Path(path)
    lines = [PTM_HEADER, f"vertices {mesh.n_vertices}"]
    lines.extend(f"{x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist())
    lines.append(f"tets {mesh.n_tets}")
    lines.extend(" ".join(str(i) for i in tet) for tet in mesh.tets.tolist())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# Барицентрическая геометрия
# ---------------------------------------------------------------------------


def _tet_forward(mesh: TetMesh, tet_index: int) -> np.ndarray:
    if not 0 <= tet_index < mesh.n_tets:
        raise InputError(f"Индекс тетраэдра {tet_index} вне диапазона [0, {mesh.n_tets})")
    forward = np.ones((4, 4))
    forward[:3, :] = mesh.tet_points(tet_index).T
    return forward


def barycentric(mesh: TetMesh, tet_index: int, point) -> BarycentricCoords:
    """Барицентрические координаты точки: решение X ζ = [R; 1]"""
    forward = _tet_forward(mesh, tet_index)
    volume = np.linalg.det(forward[:3, 1:] - forward[:3, :1]) / 6.0
    if abs(volume) < DEGENERATE_VOLUME:
        raise DegenerateTetError(f"Тетраэдр {tet_index} вырожден")
    rhs = np.append(np.asarray(point, dtype=float).reshape(3), 1.0)
    return BarycentricCoords(np.linalg.solve(forward, rhs))


def from_barycentric(mesh: TetMesh, tet_index: int, coords) -> np.ndarray:
    """Прямое преобразование: точка по барицентрическим координатам"""
    zeta = coords.zeta if isinstance(coords, BarycentricCoords) else np.asarray(coords, dtype=float)
    return zeta @ mesh.tet_points(tet_index)


def eval_extent(mesh: TetMesh, field: "ExtentField", tet_index: int, point) -> float:
    """Значение ε в точке тетраэдра как барицентрическое среднее вершинных значений"""
    coords = barycentric(mesh, tet_index, point)
    if not coords.is_inside(BARYCENTRIC_TOL):
        raise PointOutsideTetError(
            f"Точка {np.asarray(point).tolist()} вне тетраэдра {tet_index} (ζ = {coords.zeta.tolist()})"
        )
    return float(coords.zeta @ field.extent[mesh.tets[tet_index]])


def locate_point(mesh: TetMesh, point, tol: float = BARYCENTRIC_TOL) -> Optional[int]:
    """Первый тетраэдр, содержащий точку (перебор), или None"""
    matrices = barycentric_matrices(mesh.tet_points())
    homogeneous = np.append(np.asarray(point, dtype=float), 1.0)
    zeta = matrices @ homogeneous
    inside = np.flatnonzero((zeta >= -tol).all(axis=1))
    return int(inside[0]) if inside.size else None
