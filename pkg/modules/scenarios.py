# -*- coding: utf-8 -*-
"""
Сценарии настольного масштаба: отскок шара, покоящийся и вращающийся
брусок на слое, обмен импульсом двух брусков, вдавливание синусоиды
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np
import pandas as pd

from modules.contact_surface import compute_contact_surface
from modules.field_gen import (
    ExtentField,
    analytic_box_field,
    analytic_slab_field,
    analytic_sphere_field,
    compute_gradient_approx,
    save_field,
)
from modules.errors import FieldError
from modules.helpers import rotvec_from_rotation
from modules.logger import log, timing
from modules.mesh import BodyState, Pose, TetMesh, save_mesh
from modules.mesh_builders import box_grid_mesh
from modules.sim import ContactPair, RigidBody, Scene
from modules.traction import ContactParams, series_stiffness


GRAVITY = np.array([0.0, 0.0, -9.81])
STIFF_RATIO = 1000.0  # отношение модулей "жёсткого" тела и податливого партнёра
SINUSOID_WAVELENGTH = 2.0 * np.pi / 3.0


def _slab_body(thickness: float, stiffness: float, lateral: Sequence[float],
               divisions: Sequence[int] = (1, 1, 1)) -> RigidBody:
    """Кинематический слой с верхней гранью z=0 и жёсткостью k = E/H"""
    mesh, field_ = analytic_slab_field(thickness, lateral, stiffness * thickness, divisions)
    return RigidBody("slab", mesh, field_, kinematic=True)


def box_inertia(mass: float, size: Sequence[float]) -> np.ndarray:
    a, b, c = size
    return mass / 12.0 * np.diag([b * b + c * c, a * a + c * c, a * a + b * b])


def sphere_inertia(mass: float, radius: float) -> np.ndarray:
    return 0.4 * mass * radius * radius * np.eye(3)


def bouncing_ball_scene(chi: float = 0.0, dt: float = 1e-5, duration: float = 0.01,
                        radius: float = 0.05, mass: float = 0.1, level: int = 1,
                        slab_stiffness: float = 2e8, slab_thickness: float = 0.05,
                        gap: float = 5e-4, speed: float = 0.44) -> Scene:
    """
    Шар над слоем: нижняя точка на высоте gap, скорость speed вниз

    Модуль шара в STIFF_RATIO раз больше модуля слоя.
    """
    slab = _slab_body(slab_thickness, slab_stiffness, (0.06, 0.06), (2, 2, 1))
    mesh, field_ = analytic_sphere_field(radius, level, STIFF_RATIO * slab.extent_field.modulus)
    state = BodyState(Pose.from_rotvec([0.0, 0.0, radius + gap]), linear_velocity=[0.0, 0.0, -speed])
    ball = RigidBody("ball", mesh, field_, mass, sphere_inertia(mass, radius), state)
    return Scene([ball, slab], [ContactPair("ball", "slab", ContactParams(chi=chi))],
                 GRAVITY, dt, duration)


def resting_penetration(mass: float, size: Sequence[float], slab_stiffness: float,
                        box_modulus: float, gravity: float = 9.81) -> float:
    """Глубина равновесия бруска на слое: m g = S·d·k_series"""
    k_box = box_modulus / (0.5 * size[2])
    area = size[0] * size[1]
    return mass * gravity / (area * series_stiffness(k_box, slab_stiffness))


def _box_on_slab(mass: float, size: Sequence[float], slab_stiffness: float,
                 penetration: float, angular_velocity=(0.0, 0.0, 0.0)):
    slab = _slab_body(0.05, slab_stiffness, (0.2, 0.2))
    half = 0.5 * np.asarray(size, dtype=float)
    mesh, field_ = analytic_box_field(half, STIFF_RATIO * slab.extent_field.modulus)
    state = BodyState(Pose.from_rotvec([0.0, 0.0, half[2] - penetration]), angular_velocity)
    box = RigidBody("box", mesh, field_, mass, box_inertia(mass, size), state)
    return box, slab


def resting_box_scene(mass: float = 1.0, size: Sequence[float] = (0.1, 0.1, 0.1),
                      slab_stiffness: float = 2e6, chi: float = 20.0, dt: float = 2e-4,
                      duration: float = 0.15, start_fraction: float = 0.8) -> Scene:
    """Брусок, опущенный на слой чуть выше равновесия; демпфирование гасит колебания"""
    equilibrium = resting_penetration(mass, size, slab_stiffness, STIFF_RATIO * slab_stiffness * 0.05)
    box, slab = _box_on_slab(mass, size, slab_stiffness, start_fraction * equilibrium)
    return Scene([box, slab], [ContactPair("box", "slab", ContactParams(chi=chi))], GRAVITY, dt, duration)


def spinning_box_scene(spin: float = 5.0, mu: float = 0.5, mass: float = 1.0,
                       size: Sequence[float] = (0.1, 0.1, 0.1), slab_stiffness: float = 2e6,
                       dt: float = 1e-4, duration: float = 0.01) -> Scene:
    """Брусок в равновесии, вращающийся вокруг нормали к поверхности"""
    equilibrium = resting_penetration(mass, size, slab_stiffness, STIFF_RATIO * slab_stiffness * 0.05)
    box, slab = _box_on_slab(mass, size, slab_stiffness, equilibrium, (0.0, 0.0, spin))
    return Scene([box, slab], [ContactPair("box", "slab", ContactParams(mu=mu))], GRAVITY, dt, duration)


def momentum_scene(speed: float = 0.5, modulus: float = 1e6, dt: float = 1e-5,
                   duration: float = 1e-3, overlap: float = 2e-4) -> Scene:
    """Два свободных бруска без гравитации, сближающиеся вдоль x"""
    half = np.array([0.05, 0.05, 0.05])
    mass = 1.0
    inertia = box_inertia(mass, 2 * half)
    bodies = []
    for name, sign in (("left", -1.0), ("right", 1.0)):
        mesh, field_ = analytic_box_field(half, modulus)
        state = BodyState(
            Pose.from_rotvec([sign * (half[0] - 0.5 * overlap), 0.0, 0.002 * sign], [0.0, 0.0, 0.1 * sign]),
            linear_velocity=[-sign * speed, 0.0, 0.0],
        )
        bodies.append(RigidBody(name, mesh, field_, mass, inertia, state))
    return Scene(bodies, [ContactPair("left", "right")], np.zeros(3), dt, duration)


def write_scene_bundle(scene: Scene, directory: Union[str, Path], name: str = "scene") -> Path:
    """Запись сеток, полей и JSON сцены в каталог; возвращает путь к JSON"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    bodies = []
    for body in scene.bodies:
        save_mesh(body.mesh, directory / f"{body.name}.ptm")
        save_field(body.extent_field, directory / f"{body.name}.pfd")
        state = body.state
        bodies.append({
            "name": body.name,
            "mesh": f"{body.name}.ptm",
            "field": f"{body.name}.pfd",
            "mass": body.mass,
            "inertia": body.inertia.tolist(),
            "position": state.pose.translation.tolist(),
            "rotation": rotvec_from_rotation(state.pose.rotation).tolist(),
            "angular_velocity": state.angular_velocity.tolist(),
            "linear_velocity": state.linear_velocity.tolist(),
            "kinematic": body.kinematic,
        })
    document = {
        "gravity": scene.gravity.tolist(),
        "dt": scene.dt,
        "duration": scene.duration,
        "quadrature": scene.quadrature,
        "bodies": bodies,
        "pairs": [
            {"a": p.body_a, "b": p.body_b, "chi": p.params.chi, "mu": p.params.mu, "v_s": p.params.v_s}
            for p in scene.pairs
        ],
    }
    path = directory / f"{name}.json"
    path.write_text(json.dumps(document, indent=2, ensure_ascii=False), encoding="utf-8")
    log.info(f"Сцена записана: {path}")
    return path


# ---------------------------------------------------------------------------
# Вдавливание синусоиды в слой
# ---------------------------------------------------------------------------


@dataclass
class SinusoidResult:
    amplitude: float
    depth: float
    wavelength: float
    force: float
    normalized_force: float
    contact_area: float
    facets: int


def sinusoid_profile(x: np.ndarray, amplitude: float, wavelength: float, depth: float) -> np.ndarray:
    """Нижняя поверхность жёсткого тела: s(x) = -d + η(1 - cos 2πx/λ)"""
    return -depth + amplitude * (1.0 - np.cos(2.0 * np.pi * x / wavelength))


def sinusoid_block(amplitude: float, wavelength: float, depth: float, resolution: int,
                   periods: int, width: float, modulus: float, top: float = 0.5):
    """
    Полоса жёсткого тела над слоем с синусоидальной нижней гранью

    Поле растёт линейно от 0 на нижней грани до 1 на верхней (тело
    закреплено на жёстком приводе сверху).
    """
    half_span = 0.5 * periods * wavelength
    grid = box_grid_mesh([-half_span, 0.0, 0.0], [half_span, width, 1.0], (periods * resolution, 1, 1))
    x, y, t = grid.vertices.T
    bottom = sinusoid_profile(x, amplitude, wavelength, depth)
    vertices = np.column_stack([x, y, bottom + t * (top - bottom)])
    mesh = TetMesh(vertices, grid.tets)
    extent = t.copy()
    return mesh, ExtentField(extent, compute_gradient_approx(mesh, extent), modulus)


@timing
def sinusoid_press_scenario(amplitude: float, depth: float = 0.4, wavelength: float = SINUSOID_WAVELENGTH,
                            resolution: int = 8, periods: int = 5,
                            modulus_ratio: float = STIFF_RATIO) -> SinusoidResult:
    """
    Квазистатическая нормальная сила при вдавливании синусоиды на глубину d

    Слой единичной толщины с ε = -z (k = 1 Па/м). Сила суммируется по фасетам
    центрального периода и нормируется на k·0.4·λ·w, так что для η=0 и d=0.4
    она равна 1.
    """
    if amplitude < 0.0:
        raise FieldError("Амплитуда должна быть неотрицательной")
    if not np.isfinite(wavelength) or wavelength <= 0.0:
        raise FieldError(f"Длина волны должна быть положительной, получено {wavelength}")
    if resolution % 2:
        resolution += 1
    width = wavelength / resolution
    half_span = 0.5 * periods * wavelength

    layer = box_grid_mesh([-half_span, 0.0, -1.0], [half_span, width, 0.0], (periods * resolution, 1, 1))
    layer_field = ExtentField(-layer.vertices[:, 2], np.tile([0.0, 0.0, -1.0], (layer.n_vertices, 1)), 1.0)
    block, block_field = sinusoid_block(amplitude, wavelength, depth, resolution, periods, width, modulus_ratio)

    pose = Pose.identity()
    surface = compute_contact_surface(block, block_field, pose, layer, layer_field, pose)

    centers = surface.triangles.mean(axis=1)
    window = np.abs(centers[:, 0]) < 0.5 * wavelength
    areas = surface.triangle_areas()[window]
    pressures = surface.pressures[window].mean(axis=1)
    force = float((areas * pressures * surface.normals[window, 2]).sum())
    normalized = force / (1.0 * 0.4 * wavelength * width)
    log.info(f"Синусоида η={amplitude:g}, d={depth:g}: нормированная сила {normalized:.4f}")
    return SinusoidResult(amplitude, depth, wavelength, force, normalized, float(areas.sum()), int(window.sum()))


def sinusoid_force_profile(amplitudes: Iterable[float] = (0.0, 0.166, 0.333),
                           depths: Iterable[float] = (0.1, 0.2, 0.3, 0.4),
                           resolution: int = 8,
                           wavelength: float = SINUSOID_WAVELENGTH) -> pd.DataFrame:
    """Таблица нормированных сил по амплитудам и глубинам при длине волны λ"""
    rows = []
    for amplitude in amplitudes:
        for depth in depths:
            result = sinusoid_press_scenario(amplitude, depth, wavelength, resolution)
            rows.append({
                "amplitude": result.amplitude,
                "depth": result.depth,
                "force": result.force,
                "normalized_force": result.normalized_force,
                "contact_area": result.contact_area,
                "facets": result.facets,
            })
    return pd.DataFrame(rows)
