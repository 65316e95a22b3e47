# -*- coding: utf-8 -*-
"""
Генерация поля проникновения ε и аппроксимации градиента ∇̃ε

Аналитические поля для примитивов (параллелепипед, слой, шар), решение
уравнения Лапласа линейными конечными элементами и формат файлов pfd.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import LinearOperator, cg

from modules.errors import FieldError, InputError, SolverError
from modules.logger import Timer, log, timing
from modules.mesh import TetMesh, barycentric_matrices
from modules.mesh_builders import box_grid_mesh, star_sphere_mesh, twelve_tet_box


# Константы
PFD_HEADER = "pfd 1"
CG_RTOL = 1e-10
MAXIMUM_PRINCIPLE_TOL = 1e-6


@dataclass(frozen=True)
class ExtentField:
    """
    Поле проникновения одного тела

    extent: (N,) значения ε в вершинах
    gradient: (N, 3) ∇̃ε в вершинах, система тела, 1/м
    modulus: модуль упругости E, Па
    """

    extent: np.ndarray
    gradient: Optional[np.ndarray] = None
    modulus: float = 1.0

    def __post_init__(self):
        extent = np.array(self.extent, dtype=float).reshape(-1)
        if self.gradient is None:
            gradient = np.zeros((len(extent), 3))
        else:
            gradient = np.array(self.gradient, dtype=float).reshape(-1, 3)

        if not np.isfinite(self.modulus) or self.modulus <= 0.0:
            raise FieldError(f"Модуль упругости должен быть положительным, получено {self.modulus}")
        if len(gradient) != len(extent):
            raise FieldError(
                f"Размеры ε ({len(extent)}) и ∇̃ε ({len(gradient)}) не совпадают"
            )
        if not (np.all(np.isfinite(extent)) and np.all(np.isfinite(gradient))):
            raise FieldError("Поле содержит нечисловые значения")
        if extent.size and (extent.min() < 0.0 or extent.max() > 1.0):
            raise FieldError(
                f"ε должно лежать в [0, 1], получено [{extent.min():.6g}, {extent.max():.6g}]"
            )

        extent.flags.writeable = False
        gradient.flags.writeable = False
        object.__setattr__(self, "extent", extent)
        object.__setattr__(self, "gradient", gradient)
        object.__setattr__(self, "modulus", float(self.modulus))

    @property
    def n_vertices(self) -> int:
        return len(self.extent)

    def pressure(self) -> np.ndarray:
        """p₀ = E·ε в вершинах, Па"""
        return self.modulus * self.extent

    def with_gradient(self, gradient: np.ndarray) -> "ExtentField":
        return ExtentField(self.extent, gradient, self.modulus)

    def with_modulus(self, modulus: float) -> "ExtentField":
        return ExtentField(self.extent, self.gradient, modulus)

    def check(self, mesh: TetMesh, boundary_zero: bool = True) -> List[str]:
        """Проверка согласованности поля с сеткой; возвращает список замечаний"""
        if self.n_vertices != mesh.n_vertices:
            raise FieldError(
                f"Поле задано на {self.n_vertices} вершинах, в сетке {mesh.n_vertices}"
            )
        warnings = []
        if boundary_zero:
            boundary = mesh.boundary_vertices()
            nonzero = boundary[self.extent[boundary] != 0.0]
            if nonzero.size:
                warnings.append(
                    f"ε ≠ 0 на {nonzero.size} граничных вершинах (первая: {int(nonzero[0])})"
                )
        return warnings


@dataclass
class DirichletSpec:
    """Граничные условия Дирихле: вершины с ε=0 и вершины с ε=1"""

    zero_set: np.ndarray
    one_set: np.ndarray

    def __post_init__(self):
        self.zero_set = np.unique(np.asarray(self.zero_set, dtype=int).reshape(-1))
        self.one_set = np.unique(np.asarray(self.one_set, dtype=int).reshape(-1))

    def validate(self, mesh: TetMesh) -> List[str]:
        """
        Проверка условий на сетке

        Raises:
            FieldError: пустое множество, пересечение или индекс вне диапазона
        Returns:
            предупреждения (граничные вершины без условия ε=0)
        """
        if self.zero_set.size == 0 or self.one_set.size == 0:
            raise FieldError("Множества вершин ε=0 и ε=1 должны быть непустыми")
        for name, indices in (("zero", self.zero_set), ("one", self.one_set)):
            if indices.min() < 0 or indices.max() >= mesh.n_vertices:
                raise FieldError(f"Индекс вершины в {name} вне диапазона [0, {mesh.n_vertices})")
        overlap = np.intersect1d(self.zero_set, self.one_set)
        if overlap.size:
            raise FieldError(f"Вершины {overlap[:5].tolist()} заданы одновременно с ε=0 и ε=1")

        uncovered = np.setdiff1d(mesh.boundary_vertices(), self.zero_set)
        if uncovered.size:
            return [f"{uncovered.size} граничных вершин не входят в множество ε=0"]
        return []

    @classmethod
    def from_dict(cls, data: Dict, mesh: TetMesh) -> "DirichletSpec":
        """
        Разбор описания условий

        Каждое из полей "zero"/"one" задаётся списком индексов, строкой
        "boundary" (все граничные вершины) или селектором плоскости
        {"axis": "z", "value": 0.0, "tol": 1e-9}.
        """
        if "zero" not in data or "one" not in data:
            raise InputError("Описание граничных условий должно содержать поля 'zero' и 'one'")
        return cls(_select_vertices(data["zero"], mesh), _select_vertices(data["one"], mesh))

    @classmethod
    def from_json(cls, path: Union[str, Path], mesh: TetMesh) -> "DirichletSpec":
        path = Path(path)
        if not path.exists():
            raise InputError(f"Файл граничных условий не найден: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InputError(f"Некорректный JSON в {path}: {e}") from e
        return cls.from_dict(data, mesh)


def _select_vertices(selector, mesh: TetMesh) -> np.ndarray:
    if isinstance(selector, str):
        if selector == "boundary":
            return mesh.boundary_vertices()
        raise InputError(f"Неизвестный селектор вершин: {selector!r}")
    if isinstance(selector, dict):
        axes = {"x": 0, "y": 1, "z": 2}
        if selector.get("axis") not in axes or "value" not in selector:
            raise InputError(f"Селектор плоскости требует 'axis' и 'value': {selector}")
        tol = float(selector.get("tol", 1e-9))
        coords = mesh.vertices[:, axes[selector["axis"]]]
        return np.flatnonzero(np.abs(coords - float(selector["value"])) <= tol)
    try:
        return np.asarray(selector, dtype=int)
    except (TypeError, ValueError) as e:
        raise InputError(f"Некорректный список вершин: {e}") from e


# ---------------------------------------------------------------------------
# Аналитические поля
# ---------------------------------------------------------------------------


def _require_positive(values, name: str):
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
        raise FieldError(f"{name} должно быть положительным, получено {values.tolist()}")


def _zero_boundary(mesh: TetMesh, extent: np.ndarray) -> np.ndarray:
    extent = np.clip(extent, 0.0, 1.0)
    extent[mesh.boundary_vertices()] = 0.0
    return extent


def box_extent_field(mesh: TetMesh, modulus: float, half_extents=None, center=None) -> ExtentField:
    """
    Поле ε = 1 - max|x_i|/h_i на сетке параллелепипеда

    Градиент на границе - единичный вектор к центру, в центре - ноль,
    в остальных вершинах - градиент пирамиды, содержащей вершину.
    """
    lower, upper = mesh.bounding_box()
    if center is None:
        center = 0.5 * (lower + upper)
    if half_extents is None:
        half_extents = 0.5 * (upper - lower)
    center = np.asarray(center, dtype=float)
    half_extents = np.asarray(half_extents, dtype=float)
    _require_positive(half_extents, "Полуразмер параллелепипеда")

    offset = mesh.vertices - center
    scaled = np.abs(offset) / half_extents
    extent = _zero_boundary(mesh, 1.0 - scaled.max(axis=1))

    rows = np.arange(mesh.n_vertices)
    dominant = scaled.argmax(axis=1)
    gradient = np.zeros((mesh.n_vertices, 3))
    gradient[rows, dominant] = -np.sign(offset[rows, dominant]) / half_extents[dominant]

    boundary = mesh.boundary_vertices()
    towards = -offset[boundary]
    norms = np.linalg.norm(towards, axis=1, keepdims=True)
    gradient[boundary] = np.divide(towards, norms, out=np.zeros_like(towards), where=norms > 0.0)
    gradient[np.linalg.norm(offset, axis=1) == 0.0] = 0.0
    return ExtentField(extent, gradient, modulus)


def analytic_box_field(half_extents, modulus: float):
    """Сетка из 12 тетраэдров с общей центральной вершиной и поле ε для неё"""
    _require_positive(half_extents, "Полуразмер параллелепипеда")
    _require_positive(modulus, "Модуль упругости")
    mesh = twelve_tet_box(half_extents)
    return mesh, box_extent_field(mesh, modulus, half_extents, np.zeros(3))


def slab_extent_field(mesh: TetMesh, modulus: float, thickness: Optional[float] = None,
                      top: Optional[float] = None) -> ExtentField:
    """
    Линейное по глубине поле слоя: ε = (top - z)/H, ∇̃ε = (0, 0, -1/H)

    Слой считается приклеенным к жёсткому основанию: ε=0 только на верхней грани.
    """
    lower, upper = mesh.bounding_box()
    top = float(upper[2]) if top is None else float(top)
    thickness = float(upper[2] - lower[2]) if thickness is None else float(thickness)
    _require_positive(thickness, "Толщина слоя")

    extent = np.clip((top - mesh.vertices[:, 2]) / thickness, 0.0, 1.0)
    gradient = np.tile([0.0, 0.0, -1.0 / thickness], (mesh.n_vertices, 1))
    return ExtentField(extent, gradient, modulus)


def analytic_slab_field(thickness: float, lateral: Sequence[float], modulus: float,
                        divisions: Sequence[int] = (1, 1, 1)):
    """Слой толщины H с верхней гранью z=0, боковые размеры lateral=(Lx, Ly)"""
    _require_positive(thickness, "Толщина слоя")
    _require_positive(lateral, "Боковой размер слоя")
    _require_positive(modulus, "Модуль упругости")
    lx, ly = (float(v) for v in lateral)
    mesh = box_grid_mesh([-lx / 2, -ly / 2, -thickness], [lx / 2, ly / 2, 0.0], divisions)
    return mesh, slab_extent_field(mesh, modulus, thickness, 0.0)


def sphere_extent_field(mesh: TetMesh, modulus: float, radius: Optional[float] = None,
                        center=None) -> ExtentField:
    """Поле ε = 1 - |x - c|/r, градиент направлен к центру с модулем 1/r"""
    lower, upper = mesh.bounding_box()
    center = 0.5 * (lower + upper) if center is None else np.asarray(center, dtype=float)
    offset = mesh.vertices - center
    distance = np.linalg.norm(offset, axis=1)
    radius = float(distance.max()) if radius is None else float(radius)
    _require_positive(radius, "Радиус сферы")

    extent = _zero_boundary(mesh, 1.0 - distance / radius)
    direction = np.divide(offset, distance[:, None], out=np.zeros_like(offset),
                          where=distance[:, None] > 0.0)
    return ExtentField(extent, -direction / radius, modulus)


def analytic_sphere_field(radius: float, level: int, modulus: float, volume_matched: bool = False):
    """
    Звёздная сетка шара (20·4^level тетраэдров) и поле ε

    При volume_matched вершины поверхности лежат чуть дальше радиуса,
    чтобы объём сетки совпал с объёмом шара; ε на них остаётся нулевым.
    """
    _require_positive(radius, "Радиус сферы")
    _require_positive(modulus, "Модуль упругости")
    mesh = star_sphere_mesh(radius, level, volume_matched)
    return mesh, sphere_extent_field(mesh, modulus, radius, np.zeros(3))


# ---------------------------------------------------------------------------
# Уравнение Лапласа
# ---------------------------------------------------------------------------


def _shape_gradients(mesh: TetMesh) -> np.ndarray:
    """Градиенты барицентрических функций формы, shape (M, 4, 3)"""
    return barycentric_matrices(mesh.tet_points())[:, :, :3]


def assemble_stiffness(mesh: TetMesh) -> sparse.csr_matrix:
    """Матрица жёсткости линейных КЭ: K_e = V·G·Gᵀ"""
    grads = _shape_gradients(mesh)
    volumes = mesh.signed_volumes()
    local = volumes[:, None, None] * grads @ grads.transpose(0, 2, 1)
    rows = np.repeat(mesh.tets, 4, axis=1).ravel()
    cols = np.tile(mesh.tets, (1, 4)).ravel()
    n = mesh.n_vertices
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _check_components(stiffness: sparse.csr_matrix, constrained: np.ndarray):
    n_components, labels = connected_components(stiffness != 0, directed=False)
    anchored = np.zeros(n_components, dtype=bool)
    anchored[labels[constrained]] = True
    if not anchored.all():
        free_component = int(np.flatnonzero(~anchored)[0])
        raise SolverError(
            f"Компонента связности {free_component} сетки не содержит вершин с условием Дирихле"
        )


@timing
def solve_laplace(mesh: TetMesh, bc: DirichletSpec, rtol: float = CG_RTOL,
                  checked: bool = False) -> ExtentField:
    """
    Решение ∇²ε = 0 с условиями Дирихле методом сопряжённых градиентов

    Возвращает ExtentField с нулевым градиентом и E=1; градиент и модуль
    задаются отдельно (laplace_field). checked=True - вызывающий уже
    выполнил bc.validate(mesh) и сам распорядился предупреждениями.

    Raises:
        FieldError: некорректные граничные условия
        SolverError: вырожденная система или отсутствие сходимости
    """
    if not checked:
        for warning in bc.validate(mesh):
            log.warning(warning)

    with Timer("Сборка матрицы жёсткости", count=mesh.n_tets, unit="тетр."):
        stiffness = assemble_stiffness(mesh)

    constrained = np.concatenate([bc.zero_set, bc.one_set])
    _check_components(stiffness, constrained)

    values = np.zeros(mesh.n_vertices)
    values[bc.one_set] = 1.0
    free = np.setdiff1d(np.arange(mesh.n_vertices), constrained)
    log.debug(f"Неизвестных: {free.size}, закреплённых вершин: {constrained.size}")

    if free.size:
        k_ff = stiffness[free][:, free]
        rhs = -(stiffness[free][:, constrained] @ values[constrained])
        inv_diag = 1.0 / k_ff.diagonal()
        preconditioner = LinearOperator(k_ff.shape, matvec=lambda x: inv_diag * x)

        with Timer("Сопряжённые градиенты"):
            solution, info = cg(k_ff, rhs, rtol=rtol, atol=0.0,
                                maxiter=10 * free.size, M=preconditioner)
        if info != 0:
            raise SolverError(f"Метод сопряжённых градиентов не сошёлся (info={info})")
        values[free] = solution

    low, high = values.min(), values.max()
    if low < -MAXIMUM_PRINCIPLE_TOL or high > 1.0 + MAXIMUM_PRINCIPLE_TOL:
        log.warning(f"Нарушение принципа максимума: ε в [{low:.3e}, {high:.3e}], значения обрезаны")

    values = np.clip(values, 0.0, 1.0)
    values[bc.zero_set] = 0.0
    values[bc.one_set] = 1.0
    return ExtentField(values)


def compute_gradient_approx(mesh: TetMesh, extent: np.ndarray) -> np.ndarray:
    """Взвешенное по объёму среднее постоянных градиентов инцидентных тетраэдров"""
    extent = np.asarray(extent, dtype=float)
    if extent.shape != (mesh.n_vertices,):
        raise FieldError(f"ε задано на {extent.size} вершинах, в сетке {mesh.n_vertices}")
    grads = _shape_gradients(mesh)
    tet_gradients = np.einsum("kai,ka->ki", grads, extent[mesh.tets])
    volumes = mesh.signed_volumes()

    weighted = np.zeros((mesh.n_vertices, 3))
    weights = np.zeros(mesh.n_vertices)
    for corner in range(4):
        np.add.at(weighted, mesh.tets[:, corner], volumes[:, None] * tet_gradients)
        np.add.at(weights, mesh.tets[:, corner], volumes)
    return np.divide(weighted, weights[:, None], out=np.zeros_like(weighted),
                     where=weights[:, None] > 0.0)


def laplace_field(mesh: TetMesh, bc: DirichletSpec, modulus: float, checked: bool = False) -> ExtentField:
    """Полное поле: решение Лапласа, ∇̃ε и модуль упругости"""
    _require_positive(modulus, "Модуль упругости")
    solved = solve_laplace(mesh, bc, checked=checked)
    return ExtentField(solved.extent, compute_gradient_approx(mesh, solved.extent), modulus)


def field_statistics(mesh: TetMesh, field_: ExtentField) -> Dict:
    """Сводка по полю для отчётов CLI"""
    boundary = mesh.boundary_vertices()
    gradient_norm = np.linalg.norm(field_.gradient, axis=1)
    return {
        "vertices": mesh.n_vertices,
        "tets": mesh.n_tets,
        "modulus": field_.modulus,
        "extent_min": float(field_.extent.min()),
        "extent_max": float(field_.extent.max()),
        "boundary_vertices": int(boundary.size),
        "boundary_extent_max": float(field_.extent[boundary].max()),
        "gradient_norm_max": float(gradient_norm.max()),
    }


# ---------------------------------------------------------------------------
# Формат pfd
# ---------------------------------------------------------------------------


def parse_pfd(text: str) -> ExtentField:
    lines = [
        (number, line.split("#", 1)[0].strip())
        for number, line in enumerate(text.splitlines(), start=1)
    ]
    lines = [(number, line) for number, line in lines if line]
    if not lines or lines[0][1] != PFD_HEADER:
        raise FieldError(f"Ожидается заголовок '{PFD_HEADER}'")

    def keyword(pos: int, name: str) -> str:
        if pos >= len(lines):
            raise FieldError(f"Файл оборвался, ожидается '{name}'")
        number, line = lines[pos]
        parts = line.split()
        if len(parts) != 2 or parts[0] != name:
            raise FieldError(f"Строка {number}: ожидается '{name} <значение>'")
        return parts[1]

    try:
        modulus = float(keyword(1, "modulus"))
        count = int(keyword(2, "vertices"))
    except ValueError as e:
        raise FieldError(f"Некорректное число в заголовке pfd: {e}") from e

    rows = lines[3:]
    if len(rows) != count:
        raise FieldError(f"Ожидается {count} строк значений, найдено {len(rows)}")
    data = np.empty((count, 4))
    for i, (number, line) in enumerate(rows):
        parts = line.split()
        if len(parts) != 4:
            raise FieldError(f"Строка {number}: ожидается 'eps gx gy gz'")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError as e:
            raise FieldError(f"Строка {number}: {e}") from e
    return ExtentField(data[:, 0], data[:, 1:], modulus)


def load_field(path: Union[str, Path], mesh: Optional[TetMesh] = None) -> ExtentField:
    """Чтение поля из файла pfd; при переданной сетке проверяется число вершин"""
    path = Path(path)
    if not path.exists():
        raise InputError(f"Файл поля не найден: {path}")
    field_ = parse_pfd(path.read_text(encoding="utf-8"))
    if mesh is not None:
        for warning in field_.check(mesh, boundary_zero=False):
            log.warning(warning)
    log.info(f"Загружено поле {path.name}: {field_.n_vertices} вершин, E={field_.modulus:.6g} Па")
    return field_


def save_field(field_: ExtentField, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [PFD_HEADER, f"modulus {field_.modulus!r}", f"vertices {field_.n_vertices}"]
    for eps, (gx, gy, gz) in zip(field_.extent, field_.gradient):
        lines.append(" ".join(repr(float(v)) for v in (eps, gx, gy, gz)))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    log.info(f"Поле сохранено: {path}")
    return path
