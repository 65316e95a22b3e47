# -*- coding: utf-8 -*-
"""
Минимальная динамика твёрдых тел с силами контакта по полю давления

Полунеявный метод Эйлера с фиксированным шагом: сначала скорости по
силам текущего состояния, затем положения (поворот через экспоненту ω·dt).
Начало системы тела совпадает с его центром масс.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from scipy.spatial.transform import Rotation

from modules.broadphase import Bvh, build_bvh
from modules.contact_surface import compute_contact_surface
from modules.energy import potential_energy
from modules.errors import FieldError, InputError, SimulationDivergenceError
from modules.field_gen import ExtentField, load_field
from modules.helpers import parse_vector, quaternion_from_rotation, rotation_from_rotvec
from modules.logger import Timer, log, timing
from modules.mesh import BodyState, Pose, TetMesh, load_mesh
from modules.traction import ContactParams, Wrench, integrate_wrench


DEFAULT_GRAVITY = (0.0, 0.0, -9.81)


def solid_inertia(mesh: TetMesh, mass: float) -> np.ndarray:
    """Тензор инерции однородного тела относительно его центра масс"""
    points = mesh.tet_points()
    volumes = mesh.signed_volumes()
    total = volumes.sum()
    center = (volumes[:, None] * points.mean(axis=1)).sum(axis=0) / total

    # ∫ x xᵀ dV по тетраэдру: V/20 · (Σ x_i x_iᵀ + (Σ x_i)(Σ x_i)ᵀ)
    local = points - center
    sums = local.sum(axis=1)
    second = np.einsum("kai,kaj->kij", local, local) + np.einsum("ki,kj->kij", sums, sums)
    covariance = (volumes[:, None, None] / 20.0 * second).sum(axis=0)
    density = mass / total
    return density * (np.trace(covariance) * np.eye(3) - covariance)


def mesh_center_of_mass(mesh: TetMesh) -> np.ndarray:
    volumes = mesh.signed_volumes()
    return (volumes[:, None] * mesh.tet_points().mean(axis=1)).sum(axis=0) / volumes.sum()


@dataclass
class RigidBody:
    """
    Твёрдое тело сцены

    inertia задаётся относительно центра масс в системе тела.
    Кинематическое тело движется с постоянным винтом скоростей начального состояния.
    """

    name: str
    mesh: TetMesh
    extent_field: ExtentField
    mass: float = 1.0
    inertia: np.ndarray = field(default_factory=lambda: np.eye(3))
    state: BodyState = field(default_factory=BodyState)
    kinematic: bool = False
    _bvh: Optional[Bvh] = field(default=None, repr=False)

    def __post_init__(self):
        self.inertia = np.asarray(self.inertia, dtype=float).reshape(3, 3)
        if self.extent_field.n_vertices != self.mesh.n_vertices:
            raise FieldError(
                f"Тело {self.name}: поле на {self.extent_field.n_vertices} вершинах, в сетке {self.mesh.n_vertices}"
            )
        if self.kinematic:
            return
        if not np.isfinite(self.mass) or self.mass <= 0.0:
            raise FieldError(f"Тело {self.name}: масса должна быть положительной")
        if not np.allclose(self.inertia, self.inertia.T, rtol=1e-9, atol=1e-15):
            raise FieldError(f"Тело {self.name}: тензор инерции несимметричен")
        if np.linalg.eigvalsh(self.inertia).min() <= 0.0:
            raise FieldError(f"Тело {self.name}: тензор инерции не положительно определён")

    @property
    def bvh(self) -> Bvh:
        if self._bvh is None:
            with Timer(f"BVH тела {self.name}"):
                self._bvh = build_bvh(self.mesh)
        return self._bvh

    def state_at(self, time: float) -> BodyState:
        """Предписанное состояние кинематического тела в момент time"""
        initial = self.state
        rotation = rotation_from_rotvec(initial.angular_velocity * time) @ initial.pose.rotation
        translation = initial.pose.translation + initial.linear_velocity * time
        return BodyState(Pose(rotation, translation), initial.angular_velocity, initial.linear_velocity)


@dataclass
class ContactPair:
    body_a: str
    body_b: str
    params: ContactParams = field(default_factory=ContactParams)

    @property
    def label(self) -> str:
        return f"{self.body_a}-{self.body_b}"


@dataclass
class Scene:
    """Тела, гравитация, контактные пары и параметры интегрирования"""

    bodies: List[RigidBody]
    pairs: List[ContactPair] = field(default_factory=list)
    gravity: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GRAVITY))
    dt: float = 1e-5
    duration: float = 0.0
    quadrature: int = 1

    def __post_init__(self):
        self.gravity = np.asarray(self.gravity, dtype=float).reshape(3)
        self.validate()

    def validate(self):
        if not np.isfinite(self.dt) or self.dt <= 0.0:
            raise FieldError(f"Шаг интегрирования должен быть положительным, получено {self.dt}")
        if not np.isfinite(self.duration) or self.duration < 0.0:
            raise FieldError(f"Длительность должна быть неотрицательной, получено {self.duration}")
        if self.quadrature not in (1, 3):
            raise FieldError(f"Порядок квадратуры должен быть 1 или 3, получено {self.quadrature}")
        names = [body.name for body in self.bodies]
        if len(set(names)) != len(names):
            raise FieldError("Имена тел сцены должны быть уникальными")
        for pair in self.pairs:
            for name in (pair.body_a, pair.body_b):
                if name not in names:
                    raise FieldError(f"Пара {pair.label} ссылается на неизвестное тело {name}")
            if pair.body_a == pair.body_b:
                raise FieldError(f"Пара {pair.label}: тело не может контактировать само с собой")

    def index(self, name: str) -> int:
        return [body.name for body in self.bodies].index(name)

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def initial_states(self) -> List[BodyState]:
        return [body.state for body in self.bodies]


# ---------------------------------------------------------------------------
# Шаг интегрирования
# ---------------------------------------------------------------------------


def contact_wrenches(scene: Scene, states: List[BodyState]) -> List[Tuple[Wrench, Wrench]]:
    """Винты контакта каждой пары: на A относительно начала A, на B относительно начала B"""
    result = []
    for pair in scene.pairs:
        ia, ib = scene.index(pair.body_a), scene.index(pair.body_b)
        body_a, body_b = scene.bodies[ia], scene.bodies[ib]
        state_a, state_b = states[ia], states[ib]
        surface = compute_contact_surface(
            body_a.mesh, body_a.extent_field, state_a.pose,
            body_b.mesh, body_b.extent_field, state_b.pose,
            body_a.bvh, body_b.bvh,
        )
        on_a, on_b = integrate_wrench(
            surface, state_a, state_b, body_a.mesh, body_a.extent_field, pair.params,
            about=state_a.origin, quadrature=scene.quadrature,
        )
        result.append((on_a, on_b.shift(state_b.origin)))
    return result


def _advance(body: RigidBody, state: BodyState, force: np.ndarray, torque: np.ndarray,
             dt: float, step_index: int) -> BodyState:
    rotation = state.pose.rotation
    inertia_world = rotation @ body.inertia @ rotation.T
    omega = state.angular_velocity
    velocity = state.linear_velocity + dt * force / body.mass
    omega = omega + dt * np.linalg.solve(inertia_world, torque - np.cross(omega, inertia_world @ omega))
    translation = state.pose.translation + dt * velocity

    if not (np.all(np.isfinite(velocity)) and np.all(np.isfinite(omega)) and np.all(np.isfinite(translation))):
        raise SimulationDivergenceError(f"Нечисловое состояние тела {body.name}", step_index)

    # повторная ортонормализация через кватернион
    rotation = Rotation.from_matrix(Rotation.from_rotvec(omega * dt).as_matrix() @ rotation).as_matrix()
    return BodyState(Pose(rotation, translation), omega, velocity)


def step(scene: Scene, states: List[BodyState], time: float = 0.0, step_index: int = 0,
         wrenches: Optional[List[Tuple[Wrench, Wrench]]] = None) -> List[BodyState]:
    """
    Один шаг полунеявного Эйлера

    Raises:
        SimulationDivergenceError: нечисловое состояние, с номером шага
    """
    if wrenches is None:
        wrenches = contact_wrenches(scene, states)

    forces = [body.mass * scene.gravity if not body.kinematic else np.zeros(3) for body in scene.bodies]
    torques = [np.zeros(3) for _ in scene.bodies]
    for pair, (on_a, on_b) in zip(scene.pairs, wrenches):
        ia, ib = scene.index(pair.body_a), scene.index(pair.body_b)
        forces[ia] = forces[ia] + on_a.force
        torques[ia] = torques[ia] + on_a.torque
        forces[ib] = forces[ib] + on_b.force
        torques[ib] = torques[ib] + on_b.torque

    new_states = []
    for body, state, force, torque in zip(scene.bodies, states, forces, torques):
        if body.kinematic:
            new_states.append(body.state_at(time + scene.dt))
        else:
            new_states.append(_advance(body, state, force, torque, scene.dt, step_index))
    return new_states


def kinetic_energy(body: RigidBody, state: BodyState) -> float:
    if body.kinematic:
        return 0.0
    rotation = state.pose.rotation
    inertia_world = rotation @ body.inertia @ rotation.T
    omega = state.angular_velocity
    return float(0.5 * body.mass * state.linear_velocity @ state.linear_velocity
                 + 0.5 * omega @ inertia_world @ omega)


def contact_potential(scene: Scene, states: List[BodyState]) -> float:
    total = 0.0
    for pair in scene.pairs:
        ia, ib = scene.index(pair.body_a), scene.index(pair.body_b)
        body_a, body_b = scene.bodies[ia], scene.bodies[ib]
        total += potential_energy(
            body_a.mesh, body_a.extent_field, states[ia].pose,
            body_b.mesh, body_b.extent_field, states[ib].pose,
            body_a.bvh, body_b.bvh,
        )
    return total


def total_energy(scene: Scene, states: List[BodyState], contact: Optional[float] = None) -> float:
    """Кинетическая + гравитационная (-m g·p) + потенциальная энергия контакта"""
    if contact is None:
        contact = contact_potential(scene, states)
    energy = contact
    for body, state in zip(scene.bodies, states):
        if body.kinematic:
            continue
        energy += kinetic_energy(body, state) - body.mass * float(scene.gravity @ state.origin)
    return energy


# ---------------------------------------------------------------------------
# Траектория
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Временной ряд состояний, винтов контакта и энергий"""

    body_names: List[str]
    pair_labels: List[str]
    times: List[float] = field(default_factory=list)
    states: List[List[BodyState]] = field(default_factory=list)
    wrenches: List[List[Wrench]] = field(default_factory=list)
    potential: List[float] = field(default_factory=list)
    energy: List[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    def append(self, time: float, states: List[BodyState], wrenches: List[Wrench],
               potential: float, energy: float):
        self.times.append(time)
        self.states.append(states)
        self.wrenches.append(wrenches)
        self.potential.append(potential)
        self.energy.append(energy)

    def body_series(self, name: str) -> List[BodyState]:
        index = self.body_names.index(name)
        return [states[index] for states in self.states]

    def pair_forces(self, label: str) -> np.ndarray:
        index = self.pair_labels.index(label)
        return np.array([wrenches[index].force for wrenches in self.wrenches])

    def energy_drift(self) -> float:
        """Максимальное отклонение полной энергии от начальной (NaN пропускаются)"""
        energy = np.array(self.energy, dtype=float)
        energy = energy[np.isfinite(energy)]
        if energy.size == 0:
            return 0.0
        return float(np.abs(energy - energy[0]).max())

    def to_dataframe(self) -> pd.DataFrame:
        records = []
        for time, states, wrenches, potential, energy in zip(
            self.times, self.states, self.wrenches, self.potential, self.energy
        ):
            row = {"time": time}
            for name, state in zip(self.body_names, states):
                px, py, pz = state.pose.translation
                qw, qx, qy, qz = quaternion_from_rotation(state.pose.rotation)
                wx, wy, wz = state.angular_velocity
                vx, vy, vz = state.linear_velocity
                row.update({
                    f"{name}_px": px, f"{name}_py": py, f"{name}_pz": pz,
                    f"{name}_qw": qw, f"{name}_qx": qx, f"{name}_qy": qy, f"{name}_qz": qz,
                    f"{name}_wx": wx, f"{name}_wy": wy, f"{name}_wz": wz,
                    f"{name}_vx": vx, f"{name}_vy": vy, f"{name}_vz": vz,
                })
            for label, wrench in zip(self.pair_labels, wrenches):
                fx, fy, fz = wrench.force
                tx, ty, tz = wrench.torque
                row.update({
                    f"{label}_fx": fx, f"{label}_fy": fy, f"{label}_fz": fz,
                    f"{label}_tx": tx, f"{label}_ty": ty, f"{label}_tz": tz,
                })
            row["U"] = potential
            row["energy"] = energy
            records.append(row)
        return pd.DataFrame.from_records(records)

    def to_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_dataframe().to_csv(path, index=False, float_format="%.17g")
        log.info(f"Траектория сохранена: {path} ({len(self)} строк)")
        return path

    def to_excel(self, path: Union[str, Path]) -> Path:
        from modules.excel_handler import ExcelReport

        return ExcelReport(path).write_trajectory(self)


@timing
def simulate(scene: Scene, log_every: int = 1000, energy_every: int = 1,
             record_every: int = 1) -> Trajectory:
    """
    Интегрирование сцены на scene.duration

    Энергия контакта считается на каждом energy_every-м записанном шаге,
    в остальных строках U и полная энергия равны NaN.
    """
    states = scene.initial_states()
    trajectory = Trajectory([b.name for b in scene.bodies], [p.label for p in scene.pairs])
    n_steps = scene.n_steps
    log.info(f"Симуляция: {len(scene.bodies)} тел, {len(scene.pairs)} пар, {n_steps} шагов по {scene.dt:g} с")

    for index in range(n_steps + 1):
        time = index * scene.dt
        wrenches = contact_wrenches(scene, states)

        if index % record_every == 0 or index == n_steps:
            recorded = len(trajectory)
            if energy_every > 0 and recorded % energy_every == 0:
                potential = contact_potential(scene, states)
                energy = total_energy(scene, states, potential)
            else:
                potential = energy = float("nan")
            trajectory.append(time, states, [on_a for on_a, _ in wrenches], potential, energy)

        if log_every > 0 and index % log_every == 0:
            forces = ", ".join(f"{p.label}: {np.round(w[0].force, 6).tolist()}" for p, w in zip(scene.pairs, wrenches))
            log.debug(f"t={time:.6f} с, силы контакта [{forces}]")

        if index == n_steps:
            break
        states = step(scene, states, time, index + 1, wrenches)

    return trajectory


# ---------------------------------------------------------------------------
# Файл сцены
# ---------------------------------------------------------------------------


def _body_from_dict(data: Dict, base: Path) -> RigidBody:
    try:
        name = str(data["name"])
        mesh_path = base / data["mesh"]
        field_path = base / data["field"]
    except KeyError as e:
        raise InputError(f"В описании тела отсутствует поле {e}") from e

    mesh = load_mesh(mesh_path)
    field_ = load_field(field_path, mesh)
    kinematic = bool(data.get("kinematic", False))
    mass = float(data.get("mass", 1.0))

    inertia = data.get("inertia")
    if inertia is None:
        inertia = solid_inertia(mesh, mass)
    else:
        inertia = np.asarray(inertia, dtype=float)
        inertia = np.diag(inertia) if inertia.shape == (3,) else inertia.reshape(3, 3)

    offset = mesh_center_of_mass(mesh)
    size = float(np.linalg.norm(np.subtract(*mesh.bounding_box())))
    if not kinematic and np.linalg.norm(offset) > 1e-9 * max(size, 1.0):
        log.warning(f"Тело {name}: центр масс сетки {offset.tolist()} не совпадает с началом системы тела")

    pose = Pose.from_rotvec(
        parse_vector(data.get("position", [0, 0, 0]), 3, f"{name}.position"),
        parse_vector(data.get("rotation", [0, 0, 0]), 3, f"{name}.rotation"),
    )
    state = BodyState(
        pose,
        parse_vector(data.get("angular_velocity", [0, 0, 0]), 3, f"{name}.angular_velocity"),
        parse_vector(data.get("linear_velocity", [0, 0, 0]), 3, f"{name}.linear_velocity"),
    )
    return RigidBody(name, mesh, field_, mass, inertia, state, kinematic)


def scene_from_dict(data: Dict, base: Union[str, Path] = ".") -> Scene:
    base = Path(base)
    if not isinstance(data, dict) or "bodies" not in data:
        raise InputError("Сцена должна содержать список 'bodies'")
    bodies = [_body_from_dict(body, base) for body in data["bodies"]]
    pairs = []
    for item in data.get("pairs", []):
        try:
            pairs.append(ContactPair(str(item["a"]), str(item["b"]), ContactParams.from_dict(item)))
        except KeyError as e:
            raise InputError(f"В описании пары отсутствует поле {e}") from e
    return Scene(
        bodies=bodies,
        pairs=pairs,
        gravity=parse_vector(data.get("gravity", list(DEFAULT_GRAVITY)), 3, "gravity"),
        dt=float(data.get("dt", 1e-5)),
        duration=float(data.get("duration", 0.0)),
        quadrature=int(data.get("quadrature", 1)),
    )


def load_scene(path: Union[str, Path]) -> Scene:
    """Чтение сцены из JSON; пути к сеткам и полям относительно файла сцены"""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Файл сцены не найден: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise InputError(f"Некорректный JSON сцены {path}: {e}") from e
    with Timer(f"Загрузка сцены {path.name}"):
        scene = scene_from_dict(data, path.parent)
    log.info(f"Сцена загружена: {path.name}, тел {len(scene.bodies)}, пар {len(scene.pairs)}")
    return scene
