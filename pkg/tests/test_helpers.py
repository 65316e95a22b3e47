# -*- coding: utf-8 -*-
import numpy as np
import pytest
from numpy.testing import assert_allclose

import modules.helpers as helpers
from modules.errors import InputError
from modules.helpers import (
    is_rotation,
    parse_vector,
    plane_basis,
    polygon_area_centroid,
    quaternion_from_rotation,
    rotation_from_rotvec,
    rotvec_from_rotation,
)


@pytest.mark.parametrize("value", ["1,2,3", "1 2 3", [1, 2, 3], (1.0, 2.0, 3.0), np.array([1, 2, 3])])
def test_parse_vector_forms(value):
    assert_allclose(parse_vector(value, 3), [1.0, 2.0, 3.0])


@pytest.mark.parametrize("value", ["1,2", "1,x,3", "1,nan,3", None, 5.0])
def test_parse_vector_fails_loudly(value):
    # некорректный ввод не подменяется значением по умолчанию
    with pytest.raises(InputError):
        parse_vector(value, 3, "position")


def test_no_silent_converters():
    assert not any(name.startswith("safe_") for name in dir(helpers))


def test_rotation_helpers():
    rotvec = np.array([0.3, -0.2, 0.5])
    rotation = rotation_from_rotvec(rotvec)
    assert is_rotation(rotation)
    assert not is_rotation(2.0 * rotation)
    assert_allclose(rotvec_from_rotation(rotation), rotvec, atol=1e-12)
    assert_allclose(quaternion_from_rotation(np.eye(3)), [1.0, 0.0, 0.0, 0.0])


def test_polygon_area_centroid():
    square = np.array([[0, 0, 0], [2, 0, 0], [2, 1, 0], [0, 1, 0]], dtype=float)
    area, centroid = polygon_area_centroid(square, np.array([0.0, 0.0, 1.0]))
    assert area == pytest.approx(2.0)
    assert_allclose(centroid, [1.0, 0.5, 0.0])


def test_plane_basis_is_right_handed():
    normal = np.array([0.2, -0.4, 0.9])
    u, v = plane_basis(normal)
    assert_allclose(np.cross(u, v), normal / np.linalg.norm(normal), atol=1e-12)
    assert u @ normal == pytest.approx(0.0, abs=1e-12)
