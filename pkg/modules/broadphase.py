# -*- coding: utf-8 -*-
"""
Иерархия ограничивающих параллелепипедов (AABB) над тетраэдрами сетки
и поиск пар-кандидатов между двумя телами
"""

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from modules.mesh import Pose, TetMesh


BOX_TOL = 1e-12  # относительный запас при сравнении коробок


@dataclass
class BroadPhaseStats:
    """Счётчики обхода для проверки сложности"""

    node_visits: int = 0
    leaf_tests: int = 0
    candidates: int = 0

    def reset(self):
        self.node_visits = 0
        self.leaf_tests = 0
        self.candidates = 0


class Bvh:
    """
    Двоичное дерево AABB в системе тела

    Узлы хранятся массивами в прямом порядке обхода, корень имеет индекс 0.
    Для листьев left = right = -1, tet - индекс тетраэдра; для внутренних узлов tet = -1.
    """

    def __init__(self, lo: np.ndarray, hi: np.ndarray, left: np.ndarray,
                 right: np.ndarray, tet: np.ndarray):
        self.lo = lo
        self.hi = hi
        self.left = left
        self.right = right
        self.tet = tet

    def __repr__(self) -> str:
        return f"Bvh(nodes={self.n_nodes}, leaves={self.n_leaves}, depth={self.depth()})"

    @property
    def n_nodes(self) -> int:
        return len(self.tet)

    @property
    def n_leaves(self) -> int:
        return int(np.count_nonzero(self.tet >= 0))

    def is_leaf(self, node: int) -> bool:
        return self.tet[node] >= 0

    def depth(self) -> int:
        """Глубина дерева (лист-корень имеет глубину 0)"""
        deepest = 0
        stack = [(0, 0)]
        while stack:
            node, level = stack.pop()
            deepest = max(deepest, level)
            if self.tet[node] < 0:
                stack.append((int(self.left[node]), level + 1))
                stack.append((int(self.right[node]), level + 1))
        return deepest


def build_bvh(mesh: TetMesh) -> Bvh:
    """
    Построение дерева делением по медиане центроидов вдоль длинной оси узла

    При равных центроидах первым идёт тетраэдр с меньшим индексом.
    """
    points = mesh.tet_points()
    tet_lo = points.min(axis=1)
    tet_hi = points.max(axis=1)
    centroids = points.mean(axis=1)

    lo, hi, left, right, tet = [], [], [], [], []

    def build(indices: np.ndarray) -> int:
        node = len(tet)
        node_lo = tet_lo[indices].min(axis=0)
        node_hi = tet_hi[indices].max(axis=0)
        lo.append(node_lo)
        hi.append(node_hi)
        left.append(-1)
        right.append(-1)
        if len(indices) == 1:
            tet.append(int(indices[0]))
            return node
        tet.append(-1)

        axis = int(np.argmax(node_hi - node_lo))
        order = indices[np.lexsort((indices, centroids[indices, axis]))]
        half = len(order) // 2
        left[node] = build(order[:half])
        right[node] = build(order[half:])
        return node

    build(np.arange(mesh.n_tets))
    return Bvh(np.array(lo), np.array(hi), np.array(left), np.array(right), np.array(tet))


def transform_boxes(lo: np.ndarray, hi: np.ndarray, pose: Pose) -> Tuple[np.ndarray, np.ndarray]:
    """Консервативная AABB-обёртка повёрнутых коробок"""
    center = 0.5 * (lo + hi) @ pose.rotation.T + pose.translation
    half = 0.5 * (hi - lo) @ np.abs(pose.rotation).T
    return center - half, center + half


def broad_phase(bvh_a: Bvh, pose_a: Pose, bvh_b: Bvh, pose_b: Pose,
                stats: Optional[BroadPhaseStats] = None) -> List[Tuple[int, int]]:
    """
    Пары (тетраэдр A, тетраэдр B) с пересекающимися коробками, отсортированные

    Коробки B переводятся в систему A; результат - надмножество пар
    пересекающихся тетраэдров.
    """
    relative = pose_b.relative_to(pose_a)
    lo_b, hi_b = transform_boxes(bvh_b.lo, bvh_b.hi, relative)
    scale = max(np.abs(bvh_a.lo).max(), np.abs(bvh_a.hi).max(), np.abs(lo_b).max(), np.abs(hi_b).max())
    pad = BOX_TOL * (1.0 + scale)

    a_lo, a_hi = (bvh_a.lo - pad).tolist(), (bvh_a.hi + pad).tolist()
    b_lo, b_hi = lo_b.tolist(), hi_b.tolist()
    a_left, a_right, a_tet = bvh_a.left.tolist(), bvh_a.right.tolist(), bvh_a.tet.tolist()
    b_left, b_right, b_tet = bvh_b.left.tolist(), bvh_b.right.tolist(), bvh_b.tet.tolist()
    a_size = (bvh_a.hi - bvh_a.lo).sum(axis=1).tolist()
    b_size = (hi_b - lo_b).sum(axis=1).tolist()

    visits = 0
    leaf_tests = 0
    pairs = []
    stack = [(0, 0)]
    while stack:
        na, nb = stack.pop()
        visits += 1
        la, ha, lb, hb = a_lo[na], a_hi[na], b_lo[nb], b_hi[nb]
        if (la[0] > hb[0] or lb[0] > ha[0] or la[1] > hb[1] or lb[1] > ha[1]
                or la[2] > hb[2] or lb[2] > ha[2]):
            continue
        leaf_a, leaf_b = a_tet[na] >= 0, b_tet[nb] >= 0
        if leaf_a and leaf_b:
            leaf_tests += 1
            pairs.append((a_tet[na], b_tet[nb]))
        elif leaf_b or (not leaf_a and a_size[na] >= b_size[nb]):
            stack.append((a_right[na], nb))
            stack.append((a_left[na], nb))
        else:
            stack.append((na, b_right[nb]))
            stack.append((na, b_left[nb]))

    pairs.sort()
    if stats is not None:
        stats.node_visits += visits
        stats.leaf_tests += leaf_tests
        stats.candidates += len(pairs)
    return pairs


def brute_force_pairs(mesh_a: TetMesh, pose_a: Pose, mesh_b: TetMesh, pose_b: Pose) -> List[Tuple[int, int]]:
    """Все пары с пересекающимися мировыми AABB тетраэдров, O(n_A·n_B)"""
    pa = pose_a.transform_points(mesh_a.tet_points())
    pb = pose_b.transform_points(mesh_b.tet_points())
    lo_a, hi_a = pa.min(axis=1), pa.max(axis=1)
    lo_b, hi_b = pb.min(axis=1), pb.max(axis=1)
    overlap = np.all(
        (lo_a[:, None, :] <= hi_b[None, :, :]) & (lo_b[None, :, :] <= hi_a[:, None, :]), axis=2
    )
    return [tuple(pair) for pair in np.argwhere(overlap).tolist()]
