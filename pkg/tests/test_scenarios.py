# -*- coding: utf-8 -*-
import numpy as np
import pytest
from numpy.testing import assert_allclose

from modules.errors import FieldError
from modules.scenarios import (
    bouncing_ball_scene,
    resting_box_scene,
    sinusoid_force_profile,
    sinusoid_press_scenario,
    spinning_box_scene,
    write_scene_bundle,
)
from modules.sim import load_scene, simulate


def _impact_energy(scene):
    ball = scene.bodies[0]
    return 0.5 * ball.mass * float(ball.state.linear_velocity @ ball.state.linear_velocity)


def _apex(trajectory, gravity=9.81):
    """Высота подъёма после отскока с учётом ещё не израсходованной скорости вверх"""
    heights = np.array([s.origin[2] for s in trajectory.body_series("ball")])
    speeds = np.array([s.linear_velocity[2] for s in trajectory.body_series("ball")])
    lowest = int(np.argmin(heights))
    after = slice(lowest, None)
    return float((heights[after] + np.maximum(speeds[after], 0.0) ** 2 / (2.0 * gravity)).max())


def test_bounce_conserves_energy_without_damping():
    scene = bouncing_ball_scene(chi=0.0, dt=1e-5, duration=0.01)
    coarse = simulate(scene, energy_every=10).energy_drift()
    assert coarse < 0.01 * _impact_energy(scene)

    fine = simulate(bouncing_ball_scene(chi=0.0, dt=5e-6, duration=0.01), energy_every=20).energy_drift()
    assert fine < 0.75 * coarse


def test_bounce_apex_decreases_with_damping():
    start = bouncing_ball_scene()
    ball = start.bodies[0]
    initial = ball.state.origin[2] + _impact_energy(start) / (ball.mass * 9.81)

    apexes = []
    for chi in (0.01, 0.1, 1.0):
        trajectory = simulate(bouncing_ball_scene(chi=chi, duration=0.012), energy_every=0)
        heights = [s.origin[2] for s in trajectory.body_series("ball")]
        assert min(heights) < ball.state.origin[2]
        apexes.append(_apex(trajectory))
    assert apexes[0] < initial
    assert apexes[1] < apexes[0]
    assert apexes[2] < apexes[1]


def test_resting_box_supports_weight():
    scene = resting_box_scene()
    trajectory = simulate(scene, energy_every=0)
    forces = trajectory.pair_forces("box-slab")
    weight = scene.bodies[0].mass * 9.81
    tail = forces[-len(forces) // 10:]
    assert tail[:, 2].mean() == pytest.approx(weight, rel=0.01)
    assert_allclose(tail[:, :2].mean(axis=0), 0.0, atol=1e-3 * weight)


def test_spinning_box_slows_down():
    scene = spinning_box_scene()
    trajectory = simulate(scene, energy_every=0)
    spins = np.array([s.angular_velocity[2] for s in trajectory.body_series("box")])
    torques = np.array([w[0].torque[2] for w in trajectory.wrenches])
    assert np.all(torques * spins < 0.0)
    assert np.all(np.diff(np.abs(spins)) < 0.0)
    assert spins[-1] > 0.0


def test_flat_press_gives_unit_force():
    result = sinusoid_press_scenario(0.0, 0.4)
    assert result.normalized_force == pytest.approx(1.0, rel=0.01)
    assert result.facets > 0


def test_sinusoid_force_decreases_with_amplitude():
    profile = sinusoid_force_profile((0.0, 0.166, 0.333), (0.4,))
    forces = profile["normalized_force"].tolist()
    assert forces[0] > forces[1] > forces[2]
    assert list(profile.columns) == ["amplitude", "depth", "force", "normalized_force", "contact_area", "facets"]


def test_sinusoid_rejects_negative_amplitude():
    with pytest.raises(FieldError):
        sinusoid_press_scenario(-0.1, 0.4)


def test_scene_bundle_round_trip(tmp_path):
    scene = bouncing_ball_scene(chi=0.05, duration=1e-3)
    path = write_scene_bundle(scene, tmp_path / "bundle", "ball")
    assert path.name == "ball.json"

    loaded = load_scene(path)
    assert [b.name for b in loaded.bodies] == ["ball", "slab"]
    assert loaded.dt == scene.dt and loaded.duration == scene.duration
    assert loaded.pairs[0].params == scene.pairs[0].params
    for original, restored in zip(scene.bodies, loaded.bodies):
        assert restored.kinematic == original.kinematic
        assert restored.mass == original.mass
        assert_allclose(restored.inertia, original.inertia)
        assert_allclose(restored.state.origin, original.state.origin)
        assert_allclose(restored.state.linear_velocity, original.state.linear_velocity)
        assert_allclose(restored.mesh.vertices, original.mesh.vertices, rtol=0, atol=0)
        assert_allclose(restored.extent_field.extent, original.extent_field.extent, rtol=0, atol=0)
