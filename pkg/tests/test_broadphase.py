# -*- coding: utf-8 -*-
import math

import numpy as np
import pytest

from modules.broadphase import BroadPhaseStats, broad_phase, brute_force_pairs, build_bvh
from modules.mesh import Pose
from modules.mesh_builders import box_grid_mesh, star_sphere_mesh, twelve_tet_box


def test_bvh_structure():
    mesh = box_grid_mesh([0, 0, 0], [1, 1, 1], (3, 3, 3))
    bvh = build_bvh(mesh)
    assert bvh.n_leaves == mesh.n_tets
    assert bvh.n_nodes == 2 * mesh.n_tets - 1
    assert sorted(bvh.tet[bvh.tet >= 0].tolist()) == list(range(mesh.n_tets))
    assert bvh.depth() <= math.ceil(math.log2(mesh.n_tets))
    # корень охватывает всю сетку
    np.testing.assert_allclose(bvh.lo[0], [0, 0, 0])
    np.testing.assert_allclose(bvh.hi[0], [1, 1, 1])


def test_single_tet_bvh(unit_tet):
    bvh = build_bvh(unit_tet)
    assert bvh.n_nodes == 1
    assert bvh.is_leaf(0)
    assert bvh.depth() == 0


def test_broad_phase_is_superset_of_brute_force(rng):
    mesh_a = star_sphere_mesh(0.5, level=2)
    mesh_b = box_grid_mesh([-0.3, -0.3, -0.3], [0.3, 0.3, 0.3], (3, 3, 3))
    bvh_a, bvh_b = build_bvh(mesh_a), build_bvh(mesh_b)

    for _ in range(5):
        pose_a = Pose.from_rotvec(rng.normal(scale=0.2, size=3), rng.normal(size=3))
        pose_b = Pose.from_rotvec(pose_a.translation + rng.normal(scale=0.3, size=3), rng.normal(size=3))
        pairs = broad_phase(bvh_a, pose_a, bvh_b, pose_b)
        assert pairs == sorted(pairs)
        assert len(set(pairs)) == len(pairs)

        expected = brute_force_pairs(mesh_a, Pose.identity(), mesh_b, pose_b.relative_to(pose_a))
        assert set(expected) <= set(pairs)
        assert pairs


def test_axis_aligned_matches_brute_force():
    mesh_a = box_grid_mesh([0, 0, 0], [1, 1, 1], (2, 2, 2))
    mesh_b = box_grid_mesh([0, 0, 0], [1, 1, 1], (2, 2, 2))
    pose_b = Pose.from_rotvec([0.6, 0.1, 0.2])
    pairs = broad_phase(build_bvh(mesh_a), Pose.identity(), build_bvh(mesh_b), pose_b)
    assert pairs == brute_force_pairs(mesh_a, Pose.identity(), mesh_b, pose_b)


def test_separated_bodies_have_no_candidates(cube):
    mesh, _ = cube
    bvh = build_bvh(mesh)
    stats = BroadPhaseStats()
    pairs = broad_phase(bvh, Pose.identity(), bvh, Pose.from_rotvec([1.5, 0.0, 0.0]), stats)
    assert pairs == []
    assert stats.node_visits == 1
    assert stats.candidates == 0
    stats.reset()
    assert stats.node_visits == 0


def test_visits_scale_with_output_times_log_size():
    ratios = []
    for n in (9, 18, 36):
        mesh_a = box_grid_mesh([0, 0, 0], [1, 1, 2 / n], (n, n, 2))
        mesh_b = twelve_tet_box([1 / n] * 3)
        center = (n // 2 + 0.3) / n
        pose_b = Pose.from_rotvec([center, center, 2 / n + 0.5 / n])

        stats = BroadPhaseStats()
        pairs = broad_phase(build_bvh(mesh_a), Pose.identity(), build_bvh(mesh_b), pose_b, stats)
        assert pairs
        ratios.append(stats.node_visits / (len(pairs) * math.log(mesh_a.n_tets)))

    mean = float(np.mean(ratios))
    for ratio in ratios:
        assert ratio == pytest.approx(mean, rel=0.3)
