# -*- coding: utf-8 -*-
import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(ROOT))

from modules.field_gen import analytic_box_field, analytic_slab_field, analytic_sphere_field  # noqa: E402
from modules.mesh import Pose, TetMesh  # noqa: E402

DATA_DIR = ROOT / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_tet() -> TetMesh:
    return TetMesh([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], [[0, 1, 2, 3]])


@pytest.fixture
def cube():
    """Куб 1 м из 12 тетраэдров, E = 1e6 Па"""
    return analytic_box_field([0.5, 0.5, 0.5], 1e6)


def slab_pair(thickness_a=0.05, thickness_b=0.1, modulus_a=1e5, modulus_b=3e5,
              lateral=(0.4, 0.3), depth=0.01, divisions=(2, 2, 1)):
    """
    Два слоя лицом к лицу с перекрытием depth

    A - верхняя грань в z=0, B перевёрнут и занимает z ∈ [-depth, H_B - depth].
    """
    mesh_a, field_a = analytic_slab_field(thickness_a, lateral, modulus_a, divisions)
    mesh_b, field_b = analytic_slab_field(thickness_b, lateral, modulus_b, divisions)
    pose_a = Pose.identity()
    pose_b = Pose.from_rotvec([0.0, 0.0, -depth], [np.pi, 0.0, 0.0])
    return (mesh_a, field_a, pose_a), (mesh_b, field_b, pose_b)


def sphere_on_slab(depth=0.1, level=3, volume_matched=True, radius=0.5, stiffness=1e5, ratio=1e3):
    """
    Почти жёсткий шар, погружённый в слой k = stiffness на глубину depth

    Шар - тело A с жёсткостью ratio·k, слой (толщина 1 м, верхняя грань z=0) - тело B.
    """
    slab_mesh, slab_field = analytic_slab_field(1.0, (2.0, 2.0), stiffness * 1.0, (4, 4, 2))
    ball_mesh, ball_field = analytic_sphere_field(radius, level, ratio * stiffness * radius, volume_matched)
    ball_pose = Pose.from_rotvec([0.0, 0.0, radius - depth])
    return (ball_mesh, ball_field, ball_pose), (slab_mesh, slab_field, Pose.identity())


@pytest.fixture
def make_slab_pair():
    return slab_pair


@pytest.fixture
def make_sphere_on_slab():
    return sphere_on_slab
