# -*- coding: utf-8 -*-
"""
Тяги на поверхности контакта и результирующий винт сил

Упругое давление p₀, демпфирование по типу Ханта-Кроссли,
регуляризованное кулоново трение; интегрирование по треугольникам.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np
from scipy.integrate import quad

from modules.contact_surface import ContactSurface
from modules.errors import ContactStateError, FieldError
from modules.field_gen import ExtentField
from modules.mesh import BodyState, TetMesh, barycentric_matrices, world_point_velocity


DEFAULT_SLIP_VELOCITY = 1e-4  # м/с

# Правила квадратуры на треугольнике: барицентрические точки и веса (доли площади)
QUADRATURE_RULES = {
    1: (np.array([[1.0, 1.0, 1.0]]) / 3.0, np.array([1.0])),
    3: (
        np.array([[2 / 3, 1 / 6, 1 / 6], [1 / 6, 2 / 3, 1 / 6], [1 / 6, 1 / 6, 2 / 3]]),
        np.full(3, 1.0 / 3.0),
    ),
}


@dataclass(frozen=True)
class ContactParams:
    """Параметры контакта пары тел: χ (с), μ, v_s (м/с)"""

    chi: float = 0.0
    mu: float = 0.0
    v_s: float = DEFAULT_SLIP_VELOCITY

    def __post_init__(self):
        for name in ("chi", "mu", "v_s"):
            value = getattr(self, name)
            if not np.isfinite(value):
                raise FieldError(f"Параметр {name} должен быть конечным")
        if self.chi < 0.0:
            raise FieldError(f"χ должно быть неотрицательным, получено {self.chi}")
        if self.mu < 0.0:
            raise FieldError(f"μ должно быть неотрицательным, получено {self.mu}")
        if self.v_s <= 0.0:
            raise FieldError(f"v_s должна быть положительной, получено {self.v_s}")

    @classmethod
    def from_dict(cls, data: Dict) -> "ContactParams":
        return cls(
            chi=float(data.get("chi", 0.0)),
            mu=float(data.get("mu", 0.0)),
            v_s=float(data.get("v_s", DEFAULT_SLIP_VELOCITY)),
        )


@dataclass(frozen=True)
class Wrench:
    """Сила и момент относительно точки about в мировой системе"""

    force: np.ndarray = field(default_factory=lambda: np.zeros(3))
    torque: np.ndarray = field(default_factory=lambda: np.zeros(3))
    about: np.ndarray = field(default_factory=lambda: np.zeros(3))
    frame: str = "world"

    def __post_init__(self):
        for name in ("force", "torque", "about"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).reshape(3))

    def shift(self, point) -> "Wrench":
        """Тот же винт относительно другой точки: τ_q = τ_p - (q - p) × F"""
        point = np.asarray(point, dtype=float)
        torque = self.torque - np.cross(point - self.about, self.force)
        return Wrench(self.force, torque, point, self.frame)

    def power(self, state: BodyState) -> float:
        """Мощность винта на движении тела"""
        velocity = world_point_velocity(state, self.about)
        return float(self.force @ velocity + self.torque @ state.angular_velocity)

    def __neg__(self) -> "Wrench":
        return Wrench(-self.force, -self.torque, self.about, self.frame)

    def __add__(self, other: "Wrench") -> "Wrench":
        other = other.shift(self.about)
        return Wrench(self.force + other.force, self.torque + other.torque, self.about, self.frame)

    def to_dict(self) -> Dict:
        return {
            "force": self.force.tolist(),
            "torque": self.torque.tolist(),
            "about": self.about.tolist(),
            "frame": self.frame,
        }


@dataclass(frozen=True)
class TractionSample:
    """Тяга в одной точке квадратуры"""

    point: np.ndarray
    normal: np.ndarray
    p0: float
    grad_n: float
    relative_velocity: np.ndarray
    pressure: float
    traction: np.ndarray
    weight: float

    @property
    def normal_traction(self) -> np.ndarray:
        return self.pressure * self.normal

    @property
    def friction_traction(self) -> np.ndarray:
        return self.traction - self.normal_traction


# ---------------------------------------------------------------------------
# Законы тяги
# ---------------------------------------------------------------------------


def split_velocity(velocity, normal) -> Tuple[np.ndarray, np.ndarray]:
    """Нормальная (Ṙ·n̂)n̂ и касательная составляющие скорости"""
    velocity = np.asarray(velocity, dtype=float)
    normal = np.asarray(normal, dtype=float)
    normal_part = np.sum(velocity * normal, axis=-1, keepdims=True) * normal
    return normal_part, velocity - normal_part


def damped_pressure(p0, grad_n, v_n, chi: float):
    """p = max(0, p₀·(1 + χ·|∇̃ε·n̂|·(-v_n))); сближение (v_n < 0) увеличивает давление"""
    p = np.asarray(p0, dtype=float) * (1.0 + chi * np.abs(grad_n) * (-np.asarray(v_n, dtype=float)))
    return np.maximum(p, 0.0)


def friction_traction(p, tangential_velocity, mu: float, v_s: float) -> np.ndarray:
    """T_F = -μ·p·v̂_t·min(1, |v_t|/v_s); ноль при v_t = 0"""
    v_t = np.asarray(tangential_velocity, dtype=float)
    speed = np.linalg.norm(v_t, axis=-1, keepdims=True)
    direction = np.divide(v_t, speed, out=np.zeros_like(v_t), where=speed > 0.0)
    scale = np.minimum(1.0, speed / v_s)
    return -mu * np.asarray(p, dtype=float)[..., None] * direction * scale


# ---------------------------------------------------------------------------
# Интегрирование
# ---------------------------------------------------------------------------


def _check_states(surface: ContactSurface, state_a: BodyState, state_b: BodyState):
    if surface.pose_a is not None and not surface.pose_a.allclose(state_a.pose):
        raise ContactStateError("Положение тела A не совпадает с использованным для поверхности")
    if surface.pose_b is not None and not surface.pose_b.allclose(state_b.pose):
        raise ContactStateError("Положение тела B не совпадает с использованным для поверхности")
    if surface.n_triangles and (surface.pairs < 0).any():
        raise ContactStateError("Поверхность без исходных пар тетраэдров не может быть проинтегрирована")


def _evaluate(surface: ContactSurface, state_a: BodyState, state_b: BodyState,
              mesh_a: TetMesh, field_a: ExtentField, params: ContactParams, quadrature: int):
    if quadrature not in QUADRATURE_RULES:
        raise FieldError(f"Поддерживаются квадратуры {sorted(QUADRATURE_RULES)}, получено {quadrature}")
    weights_bary, fractions = QUADRATURE_RULES[quadrature]
    n_q = len(fractions)

    points = np.einsum("qj,tjk->tqk", weights_bary, surface.triangles).reshape(-1, 3)
    p0 = np.einsum("qj,tj->tq", weights_bary, surface.pressures).reshape(-1)
    weights = (surface.triangle_areas()[:, None] * fractions[None, :]).reshape(-1)
    normals = np.repeat(surface.normals, n_q, axis=0)
    tets_a = np.repeat(surface.pairs[:, 0], n_q)

    # ∇̃ε_A интерполируется в тетраэдре A и переводится в мировую систему
    local = state_a.pose.inverse_transform_points(points)
    inverse = barycentric_matrices(mesh_a.tet_points(tets_a))
    zeta = np.einsum("kij,kj->ki", inverse[:, :, :3], local) + inverse[:, :, 3]
    grad_local = np.einsum("ka,kai->ki", zeta, field_a.gradient[mesh_a.tets[tets_a]])
    grad_world = state_a.pose.transform_directions(grad_local)
    grad_n = np.einsum("ki,ki->k", grad_world, normals)

    velocity_a = state_a.linear_velocity + np.cross(state_a.angular_velocity, points - state_a.origin)
    velocity_b = state_b.linear_velocity + np.cross(state_b.angular_velocity, points - state_b.origin)
    relative = velocity_a - velocity_b
    _, tangential = split_velocity(relative, normals)
    v_n = np.einsum("ki,ki->k", relative, normals)

    pressure = damped_pressure(p0, grad_n, v_n, params.chi)
    traction = pressure[:, None] * normals + friction_traction(pressure, tangential, params.mu, params.v_s)
    return points, weights, normals, p0, grad_n, relative, pressure, traction


def traction_samples(surface: ContactSurface, state_a: BodyState, state_b: BodyState,
                     mesh_a: TetMesh, field_a: ExtentField, params: ContactParams,
                     quadrature: int = 1) -> List[TractionSample]:
    """Тяги на теле A во всех точках квадратуры, в порядке фасетов"""
    _check_states(surface, state_a, state_b)
    if surface.is_empty:
        return []
    points, weights, normals, p0, grad_n, relative, pressure, traction = _evaluate(
        surface, state_a, state_b, mesh_a, field_a, params, quadrature
    )
    return [
        TractionSample(points[k], normals[k], float(p0[k]), float(grad_n[k]), relative[k],
                       float(pressure[k]), traction[k], float(weights[k]))
        for k in range(len(points))
    ]


def integrate_wrench(surface: ContactSurface, state_a: BodyState, state_b: BodyState,
                     mesh_a: TetMesh, field_a: ExtentField, params: ContactParams,
                     about=None, quadrature: int = 1) -> Tuple[Wrench, Wrench]:
    """
    Винт сил контакта на теле A и на теле B относительно точки about

    По умолчанию about - начало системы тела A. Винт на B равен винту на A
    с обратным знаком относительно той же точки.

    Raises:
        ContactStateError: состояния не соответствуют поверхности
    """
    _check_states(surface, state_a, state_b)
    about = state_a.origin.copy() if about is None else np.asarray(about, dtype=float)
    if surface.is_empty:
        zero = Wrench(about=about)
        return zero, zero

    points, weights, *_, traction = _evaluate(
        surface, state_a, state_b, mesh_a, field_a, params, quadrature
    )
    weighted = weights[:, None] * traction
    force = weighted.sum(axis=0)
    torque = np.cross(points - about, weighted).sum(axis=0)
    on_a = Wrench(force, torque, about)
    return on_a, -on_a


# ---------------------------------------------------------------------------
# Гидростатические эталоны
# ---------------------------------------------------------------------------


def spherical_cap_volume(radius: float, depth: float) -> float:
    """Объём сферического сегмента высоты depth: π d²(3r - d)/3"""
    return float(np.pi * depth ** 2 * (3.0 * radius - depth) / 3.0)


def series_stiffness(k_a: float, k_b: float) -> float:
    """Эквивалентная жёсткость последовательных пружин"""
    return k_a * k_b / (k_a + k_b)


def cap_energy_reference(radius: float, depth: float, stiffness: float) -> float:
    """k·∫₀^d A(z)·(d - z) dz, A(z) - площадь сечения сегмента на высоте z от низа шара"""
    value, _ = quad(lambda z: np.pi * (2.0 * radius * z - z * z) * (depth - z), 0.0, depth)
    return stiffness * value
