# -*- coding: utf-8 -*-
"""
Вспомогательные функции: разбор векторов, повороты, геометрия
"""

from typing import Any, Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from modules.errors import InputError


ROTATION_TOL = 1e-9


def parse_vector(value: Any, length: int, name: str = "vector") -> np.ndarray:
    """
    Разбор вектора из строки "1,2,3" / "1 2 3" или последовательности чисел

    Raises:
        InputError: неверное количество компонент или нечисловые значения
    """
    if isinstance(value, str):
        parts = value.replace(",", " ").split()
    elif isinstance(value, (list, tuple, np.ndarray)):
        parts = list(value)
    else:
        raise InputError(f"{name}: ожидается {length} чисел, получено {value!r}")

    if len(parts) != length:
        raise InputError(f"{name}: ожидается {length} чисел, получено {len(parts)}")
    try:
        vec = np.array([float(p) for p in parts], dtype=float)
    except (TypeError, ValueError) as e:
        raise InputError(f"{name}: нечисловое значение ({e})") from e
    if not np.all(np.isfinite(vec)):
        raise InputError(f"{name}: значения должны быть конечными")
    return vec


def unit(v: np.ndarray) -> np.ndarray:
    """Нормированный вектор (нулевой вектор остаётся нулевым)"""
    n = np.linalg.norm(v)
    if n == 0.0:
        return np.zeros_like(v)
    return v / n


def rotation_from_rotvec(rotvec: Sequence[float]) -> np.ndarray:
    """Матрица поворота из вектора поворота (экспоненциальное отображение)"""
    return Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix()


def rotvec_from_rotation(rotation: np.ndarray) -> np.ndarray:
    return Rotation.from_matrix(rotation).as_rotvec()


def quaternion_from_rotation(rotation: np.ndarray) -> np.ndarray:
    """Кватернион в порядке (w, x, y, z)"""
    x, y, z, w = Rotation.from_matrix(rotation).as_quat()
    return np.array([w, x, y, z])


def is_rotation(rotation: np.ndarray, tol: float = ROTATION_TOL) -> bool:
    """Проверка ортонормальности и det = +1"""
    rotation = np.asarray(rotation, dtype=float)
    if rotation.shape != (3, 3):
        return False
    if not np.allclose(rotation.T @ rotation, np.eye(3), atol=tol, rtol=0.0):
        return False
    return abs(np.linalg.det(rotation) - 1.0) <= tol


def triangle_areas(triangles: np.ndarray) -> np.ndarray:
    """Площади треугольников, triangles shape (T, 3, 3)"""
    e1 = triangles[:, 1] - triangles[:, 0]
    e2 = triangles[:, 2] - triangles[:, 0]
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


def polygon_area_centroid(points: np.ndarray, normal: np.ndarray):
    """
    Площадь и центр масс плоского выпуклого многоугольника

    Вершины упорядочены против часовой стрелки вокруг normal.
    Для многоугольника нулевой площади возвращается среднее вершин.
    """
    anchor = points[0]
    a = points[1:-1] - anchor
    b = points[2:] - anchor
    signed = 0.5 * np.cross(a, b) @ normal
    area = float(np.sum(signed))
    if area <= 0.0:
        return 0.0, points.mean(axis=0)
    centers = (anchor + points[1:-1] + points[2:]) / 3.0
    centroid = (signed[:, None] * centers).sum(axis=0) / area
    return area, centroid


def plane_basis(normal: np.ndarray):
    """Ортонормированный базис (u, v) плоскости с u x v = normal"""
    n = unit(np.asarray(normal, dtype=float))
    helper = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = unit(np.cross(helper, n))
    v = np.cross(n, u)
    return u, v
