# -*- coding: utf-8 -*-
"""
Потенциальная энергия контакта

Вытесненный объём тела A - часть пересечения тетраэдров, где p₀A ≤ p₀B.
Линейное поле интегрируется точно по выпуклым многогранникам,
разбитым на тетраэдры от центроида.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from modules.broadphase import Bvh, broad_phase, build_bvh
from modules.contact_surface import PLANE_DEGENERACY, clip_polygon, linear_pressure
from modules.field_gen import ExtentField
from modules.helpers import plane_basis
from modules.mesh import LOCAL_FACES, Pose, TetMesh, barycentric_matrices


CAP_TOL = 1e-12  # относительный допуск точки на секущей плоскости

Faces = List[np.ndarray]


@dataclass
class DisplacedPiece:
    """Выпуклый многогранник, вытесненный в одной паре тетраэдров"""

    pair: Tuple[int, int]
    faces: Faces
    pressures: np.ndarray
    volume: float
    energy: float

    @property
    def vertices(self) -> np.ndarray:
        return _unique_points(np.concatenate(self.faces))


@dataclass
class DisplacedVolume:
    """Вытесненный объём одного тела и его энергия деформации"""

    pieces: List[DisplacedPiece] = field(default_factory=list)

    @property
    def volume(self) -> float:
        return float(sum(piece.volume for piece in self.pieces))

    @property
    def energy(self) -> float:
        return float(sum(piece.energy for piece in self.pieces))


def _unique_points(points: np.ndarray, tol: float = 0.0) -> np.ndarray:
    if tol <= 0.0:
        return np.unique(points, axis=0)
    unique = []
    for point in points:
        if not any(np.linalg.norm(point - other) <= tol for other in unique):
            unique.append(point)
    return np.array(unique)


def tet_faces(tet: np.ndarray) -> Faces:
    """Грани положительно ориентированного тетраэдра, обход против часовой стрелки снаружи"""
    return [tet[face] for face in LOCAL_FACES]


def clip_polyhedron(faces: Faces, normal: np.ndarray, offset: float) -> Faces:
    """
    Отсечение выпуклого многогранника полупространством n·R + d ≤ 0

    Недостающая грань по секущей плоскости собирается из точек на плоскости
    и упорядочивается по углу вокруг их центра.
    """
    if not faces:
        return []
    norm = np.linalg.norm(normal)
    normal, offset = normal / norm, offset / norm
    scale = max(float(np.abs(np.concatenate(faces)).max()), 1e-300)
    tol = CAP_TOL * scale

    clipped, on_plane = [], []
    for face in faces:
        distance = face @ normal + offset
        kept = clip_polygon(face, -distance)
        if len(kept) == 0:
            continue
        on_plane.extend(kept[np.abs(kept @ normal + offset) <= tol])
        if len(kept) >= 3:
            clipped.append(kept)

    if on_plane:
        cap = _unique_points(np.array(on_plane), tol)
        if len(cap) >= 3:
            u, v = plane_basis(normal)
            center = cap.mean(axis=0)
            angles = np.arctan2((cap - center) @ v, (cap - center) @ u)
            clipped.append(cap[np.argsort(angles)])
    return clipped


def integrate_linear(faces: Faces, gradient: np.ndarray, constant: float) -> Tuple[float, float]:
    """
    Объём многогранника и интеграл линейной функции g·R + c по нему

    Каждая грань веером образует тетраэдры с центроидом вершин; интеграл по
    тетраэдру равен объёму, умноженному на среднее значений в 4 вершинах.
    """
    if not faces:
        return 0.0, 0.0
    center = np.concatenate(faces).mean(axis=0)
    p_center = gradient @ center + constant
    volume = 0.0
    integral = 0.0
    for face in faces:
        a = face[0]
        b, c = face[1:-1], face[2:]
        tet_volumes = np.abs(np.einsum("ij,ij->i", np.cross(b - a, c - a), center - a)) / 6.0
        values = (gradient @ a + b @ gradient + c @ gradient + 3.0 * constant + p_center) / 4.0
        volume += float(tet_volumes.sum())
        integral += float(tet_volumes @ values)
    return volume, integral


def _tet_halfspaces(inverse: np.ndarray):
    """ζ_i ≥ 0 в виде n·R + d ≤ 0"""
    return [(-row[:3], -row[3]) for row in inverse]


def displaced_volume(mesh_a: TetMesh, field_a: ExtentField, pose_a: Pose,
                     mesh_b: TetMesh, field_b: ExtentField, pose_b: Pose,
                     bvh_a: Optional[Bvh] = None, bvh_b: Optional[Bvh] = None
                     ) -> Tuple[DisplacedVolume, DisplacedVolume]:
    """
    Вытесненные объёмы тел A и B

    Для каждой пары тетраэдров A отсекается полупространствами B, затем
    плоскостью равного давления: сторона p₀A ≤ p₀B принадлежит A, другая - B.
    При параллельных полях весь объём пары достаётся телу с меньшим p₀.
    """
    bvh_a = bvh_a if bvh_a is not None else build_bvh(mesh_a)
    bvh_b = bvh_b if bvh_b is not None else build_bvh(mesh_b)
    volume_a, volume_b = DisplacedVolume(), DisplacedVolume()
    pressure_a, pressure_b = field_a.pressure(), field_b.pressure()

    for ta, tb in broad_phase(bvh_a, pose_a, bvh_b, pose_b):
        world_a = pose_a.transform_points(mesh_a.tet_points(ta))
        world_b = pose_b.transform_points(mesh_b.tet_points(tb))
        p_a = pressure_a[mesh_a.tets[ta]]
        p_b = pressure_b[mesh_b.tets[tb]]

        overlap = tet_faces(world_a)
        for normal, offset in _tet_halfspaces(barycentric_matrices(world_b)[0]):
            overlap = clip_polyhedron(overlap, normal, offset)
            if not overlap:
                break
        if not overlap:
            continue

        g_a, c_a = linear_pressure(world_a, p_a)
        g_b, c_b = linear_pressure(world_b, p_b)
        difference = g_a - g_b
        magnitude = np.linalg.norm(difference)
        if magnitude == 0.0 or magnitude < PLANE_DEGENERACY * (np.linalg.norm(g_a) + np.linalg.norm(g_b)):
            piece_a, piece_b = (overlap, []) if c_a - c_b <= 0.0 else ([], overlap)
        else:
            piece_a = clip_polyhedron(overlap, difference, c_a - c_b)
            piece_b = clip_polyhedron(overlap, -difference, c_b - c_a)

        for faces, gradient, constant, target in (
            (piece_a, g_a, c_a, volume_a),
            (piece_b, g_b, c_b, volume_b),
        ):
            if not faces:
                continue
            vol, energy = integrate_linear(faces, gradient, constant)
            if vol <= 0.0:
                continue
            points = _unique_points(np.concatenate(faces))
            target.pieces.append(
                DisplacedPiece((int(ta), int(tb)), faces, points @ gradient + constant, vol, energy)
            )
    return volume_a, volume_b


def potential_energy(mesh_a: TetMesh, field_a: ExtentField, pose_a: Pose,
                     mesh_b: TetMesh, field_b: ExtentField, pose_b: Pose,
                     bvh_a: Optional[Bvh] = None, bvh_b: Optional[Bvh] = None) -> float:
    """U = U_A + U_B, Дж"""
    volume_a, volume_b = displaced_volume(mesh_a, field_a, pose_a, mesh_b, field_b, pose_b, bvh_a, bvh_b)
    return volume_a.energy + volume_b.energy
