# -*- coding: utf-8 -*-
"""
Построители тетраэдральных сеток для примитивов и сценариев
"""

from typing import Sequence, Tuple

import numpy as np

from modules.errors import FieldError
from modules.mesh import TetMesh, orient_tets, tet_signed_volumes


# Шесть тетраэдров Куна на ячейку: все содержат диагональ v000-v111,
# разбиение согласовано между соседними ячейками.
_KUHN_PATHS = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]

# Вершины икосаэдра и его 20 граней
_GOLDEN = (1.0 + 5.0 ** 0.5) / 2.0
_ICOSAHEDRON_VERTICES = np.array(
    [
        [-1, _GOLDEN, 0], [1, _GOLDEN, 0], [-1, -_GOLDEN, 0], [1, -_GOLDEN, 0],
        [0, -1, _GOLDEN], [0, 1, _GOLDEN], [0, -1, -_GOLDEN], [0, 1, -_GOLDEN],
        [_GOLDEN, 0, -1], [_GOLDEN, 0, 1], [-_GOLDEN, 0, -1], [-_GOLDEN, 0, 1],
    ],
    dtype=float,
)
_ICOSAHEDRON_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11], [11, 10, 2],
        [5, 11, 4], [1, 5, 9], [7, 1, 8], [10, 7, 6], [3, 9, 4], [3, 4, 2],
        [3, 2, 6], [3, 6, 8], [3, 8, 9], [9, 8, 1], [4, 9, 5], [2, 4, 11],
        [6, 2, 10], [8, 6, 7],
    ],
    dtype=int,
)


def grid_vertex_index(i, j, k, divisions: Sequence[int]):
    nx, ny, _ = divisions
    return (k * (ny + 1) + j) * (nx + 1) + i


def box_grid_mesh(lower, upper, divisions: Sequence[int] = (1, 1, 1)) -> TetMesh:
    """
    Регулярная сетка параллелепипеда [lower, upper], 6 тетраэдров на ячейку

    Вершины нумеруются по x, затем y, затем z.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    nx, ny, nz = (int(d) for d in divisions)
    if min(nx, ny, nz) < 1:
        raise FieldError("Число разбиений должно быть положительным")
    if np.any(upper <= lower):
        raise FieldError("Верхняя граница должна превышать нижнюю по всем осям")

    xs = np.linspace(lower[0], upper[0], nx + 1)
    ys = np.linspace(lower[1], upper[1], ny + 1)
    zs = np.linspace(lower[2], upper[2], nz + 1)
    zz, yy, xx = np.meshgrid(zs, ys, xs, indexing="ij")
    vertices = np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    ii, jj, kk = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij")
    ii, jj, kk = ii.ravel(), jj.ravel(), kk.ravel()
    origin = np.array([ii, jj, kk])

    tets = []
    for path in _KUHN_PATHS:
        corners = [origin.copy()]
        current = origin.copy()
        for axis in path:
            current = current.copy()
            current[axis] += 1
            corners.append(current)
        tets.append(
            np.column_stack([grid_vertex_index(c[0], c[1], c[2], (nx, ny, nz)) for c in corners])
        )
    tets = np.concatenate(tets)
    # порядок: по ячейкам, внутри ячейки по пути Куна
    order = np.argsort(np.tile(np.arange(len(ii)), len(_KUHN_PATHS)), kind="stable")
    tets, _ = orient_tets(vertices, tets[order])
    return TetMesh(vertices, tets)


def twelve_tet_box(half_extents) -> TetMesh:
    """Параллелепипед из 12 тетраэдров с общей вершиной в центре (индекс 8)"""
    hx, hy, hz = (float(h) for h in half_extents)
    signs = np.array(
        [[sx, sy, sz] for sz in (-1, 1) for sy in (-1, 1) for sx in (-1, 1)], dtype=float
    )
    vertices = np.vstack([signs * np.array([hx, hy, hz]), np.zeros((1, 3))])
    center = 8

    def corner(sx, sy, sz):
        return int(((sz > 0) * 2 + (sy > 0)) * 2 + (sx > 0))

    faces = []
    for axis in range(3):
        a, b = [ax for ax in range(3) if ax != axis]
        for side in (-1, 1):
            quad = []
            for sa, sb in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
                s = [0, 0, 0]
                s[axis], s[a], s[b] = side, sa, sb
                quad.append(corner(*s))
            faces.append((quad[0], quad[1], quad[2]))
            faces.append((quad[0], quad[2], quad[3]))

    tets = np.array([[f[0], f[1], f[2], center] for f in faces], dtype=int)
    tets, _ = orient_tets(vertices, tets)
    return TetMesh(vertices, tets)


def icosphere_surface(level: int) -> Tuple[np.ndarray, np.ndarray]:
    """Триангуляция единичной сферы подразбиением икосаэдра: 20·4^level граней"""
    if level < 0:
        raise FieldError("Уровень подразбиения должен быть неотрицательным")
    vertices = [v / np.linalg.norm(v) for v in _ICOSAHEDRON_VERTICES]
    faces = _ICOSAHEDRON_FACES.tolist()

    for _ in range(level):
        midpoints = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoints:
                m = vertices[a] + vertices[b]
                vertices.append(m / np.linalg.norm(m))
                midpoints[key] = len(vertices) - 1
            return midpoints[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
        faces = refined

    return np.array(vertices), np.array(faces, dtype=int)


def star_sphere_mesh(radius: float, level: int = 0, volume_matched: bool = False) -> TetMesh:
    """
    Звёздная сетка шара: все тетраэдры делят центральную вершину (последний индекс)

    При volume_matched вершины поверхности отодвигаются от центра так,
    чтобы объём многогранника совпал с объёмом шара.
    """
    if radius <= 0.0:
        raise FieldError("Радиус сферы должен быть положительным")
    unit_vertices, faces = icosphere_surface(level)
    vertices = np.vstack([unit_vertices, np.zeros((1, 3))])
    center = len(unit_vertices)
    tets = np.column_stack([faces, np.full(len(faces), center)])
    tets, _ = orient_tets(vertices, tets)

    scale = radius
    if volume_matched:
        unit_volume = float(np.sum(tet_signed_volumes(vertices, tets)))
        scale = radius * (4.0 / 3.0 * np.pi / unit_volume) ** (1.0 / 3.0)
    return TetMesh(vertices * scale, tets)


def spherical_shell_mesh(r_inner: float, r_outer: float, level: int, layers: int) -> TetMesh:
    """
    Сетка сферического слоя: призмы над триангуляцией икосферы, по 3 тетраэдра

    Диагонали боковых граней призм выбираются по глобальным индексам вершин,
    поэтому разбиение согласовано между соседними призмами.
    """
    if not 0.0 < r_inner < r_outer:
        raise FieldError("Требуется 0 < r_inner < r_outer")
    if layers < 1:
        raise FieldError("Число слоёв должно быть положительным")
    unit_vertices, faces = icosphere_surface(level)
    n_surface = len(unit_vertices)
    radii = np.linspace(r_inner, r_outer, layers + 1)
    vertices = np.concatenate([unit_vertices * r for r in radii])

    faces = np.sort(faces, axis=1)
    tets = []
    for layer in range(layers):
        bottom = faces + layer * n_surface
        top = bottom + n_surface
        v0, v1, v2 = bottom[:, 0], bottom[:, 1], bottom[:, 2]
        w0, w1, w2 = top[:, 0], top[:, 1], top[:, 2]
        tets.append(np.column_stack([v0, v1, v2, w2]))
        tets.append(np.column_stack([v0, v1, w1, w2]))
        tets.append(np.column_stack([v0, w0, w1, w2]))
    tets, _ = orient_tets(vertices, np.concatenate(tets))
    return TetMesh(vertices, tets)


def shell_vertex_radii(mesh: TetMesh) -> np.ndarray:
    return np.linalg.norm(mesh.vertices, axis=1)
