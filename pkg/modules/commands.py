# -*- coding: utf-8 -*-
"""
Команды CLI: генерация поля, контакт пары тел, энергия, симуляция сцены,
вдавливание синусоиды

Каждая команда возвращает ProcessingResult; исключения библиотеки
переводятся в код завершения здесь и только здесь.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from modules.broadphase import BroadPhaseStats, build_bvh
from modules.contact_surface import compute_contact_surface, export_surface, sample_pressure_gap
from modules.energy import displaced_volume
from modules.errors import InputError, PfcError, SimulationDivergenceError
from modules.field_gen import (
    DirichletSpec,
    ExtentField,
    box_extent_field,
    field_statistics,
    laplace_field,
    load_field,
    save_field,
    slab_extent_field,
    sphere_extent_field,
)
from modules.logger import Timer, log, timing
from modules.mesh import BodyState, Pose, TetMesh, load_mesh
from modules.sim import load_scene, simulate
from modules.traction import ContactParams, integrate_wrench


GENFIELD_METHODS = ("analytic-box", "analytic-sphere", "analytic-slab", "laplace")

EXIT_OK = 0
EXIT_UNEXPECTED = 1


@dataclass
class ProcessingResult:
    """Результат выполнения команды"""

    success: bool = False
    message: str = ""
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    exit_code: int = EXIT_OK
    report: Dict[str, Any] = field(default_factory=dict)
    output_file: str = ""


@dataclass
class BodySpec:
    """Тело для команд contact/energy: файлы сетки и поля, поза и скорость"""

    mesh_path: Path
    field_path: Path
    pose: Pose = field(default_factory=Pose.identity)
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    linear_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.mesh_path = Path(self.mesh_path)
        self.field_path = Path(self.field_path)

    @property
    def state(self) -> BodyState:
        return BodyState(self.pose, self.angular_velocity, self.linear_velocity)

    def load(self) -> Tuple[TetMesh, ExtentField]:
        mesh = load_mesh(self.mesh_path)
        return mesh, load_field(self.field_path, mesh)


def _execute(result: ProcessingResult, action: Callable[[], None]) -> ProcessingResult:
    """Выполнить действие, переведя исключения в ошибки результата"""
    try:
        action()
        result.success = True
    except PfcError as e:
        log.error(f"{type(e).__name__}: {e}")
        result.errors.append(str(e))
        result.exit_code = e.exit_code
    except Exception as e:
        log.exception(f"Ошибка обработки: {e}")
        result.errors.append(str(e))
        result.exit_code = EXIT_UNEXPECTED
    return result


# ---------------------------------------------------------------------------
# genfield
# ---------------------------------------------------------------------------


def build_field(mesh: TetMesh, method: str, modulus: float,
                bc_path: Optional[Union[str, Path]] = None) -> Tuple[ExtentField, List[str]]:
    """Поле выбранным методом и список замечаний к нему"""
    if method not in GENFIELD_METHODS:
        raise InputError(f"Неизвестный метод '{method}', допустимы: {', '.join(GENFIELD_METHODS)}")

    if method == "laplace":
        if bc_path is None:
            raise InputError("Метод laplace требует файл граничных условий (--bc)")
        bc = DirichletSpec.from_json(bc_path, mesh)
        warnings = bc.validate(mesh)
        field_ = laplace_field(mesh, bc, modulus, checked=True)
        return field_, warnings

    if method == "analytic-box":
        field_ = box_extent_field(mesh, modulus)
    elif method == "analytic-sphere":
        field_ = sphere_extent_field(mesh, modulus)
    else:
        # слой приклеен к основанию: нулевое ε только на верхней грани
        field_ = slab_extent_field(mesh, modulus)
        return field_, []
    return field_, field_.check(mesh)


@timing
def cmd_genfield(mesh_path: Union[str, Path], method: str, output: Union[str, Path],
                 modulus: float = 1.0, bc_path: Optional[Union[str, Path]] = None) -> ProcessingResult:
    """
    Генерация поля проникновения и запись его в pfd

    Returns:
        ProcessingResult, report - статистика поля (min/max ε, проверка границы)
    """
    result = ProcessingResult()

    def action():
        mesh = load_mesh(mesh_path)
        field_, warnings = build_field(mesh, method, modulus, bc_path)
        result.warnings.extend(warnings)
        for warning in warnings:
            log.warning(warning)
        path = save_field(field_, output)

        result.report = {
            "command": "genfield",
            "method": method,
            "output": str(path),
            **field_statistics(mesh, field_),
            "boundary_check": "ok" if not warnings else "warnings",
            "warnings": list(warnings),
        }
        result.output_file = str(path)
        result.message = f"Поле записано: {path}"

    return _execute(result, action)


# ---------------------------------------------------------------------------
# contact / energy
# ---------------------------------------------------------------------------


@timing
def cmd_contact(body_a: BodySpec, body_b: BodySpec, params: ContactParams = ContactParams(),
                quadrature: int = 1, export_path: Optional[Union[str, Path]] = None,
                verify_samples: int = 0, rng: Optional[np.random.Generator] = None) -> ProcessingResult:
    """
    Поверхность контакта и винт сил пары тел

    Винт на A - относительно начала системы A, винт на B - относительно
    начала системы B. Пустой контакт даёт нулевой винт и код 0.
    verify_samples > 0 добавляет в отчёт выборочную проверку p₀A = p₀B
    в точках, выбранных генератором rng.
    """
    result = ProcessingResult()

    def action():
        mesh_a, field_a = body_a.load()
        mesh_b, field_b = body_b.load()
        state_a, state_b = body_a.state, body_b.state

        stats = BroadPhaseStats()
        with Timer("Построение BVH", count=mesh_a.n_tets + mesh_b.n_tets, unit="тетр."):
            bvh_a, bvh_b = build_bvh(mesh_a), build_bvh(mesh_b)
        surface = compute_contact_surface(mesh_a, field_a, state_a.pose, mesh_b, field_b, state_b.pose,
                                          bvh_a, bvh_b, stats)
        on_a, on_b = integrate_wrench(surface, state_a, state_b, mesh_a, field_a, params,
                                      quadrature=quadrature)

        result.report = {
            "command": "contact",
            "quadrature": quadrature,
            "params": {"chi": params.chi, "mu": params.mu, "v_s": params.v_s},
            "wrench_a": on_a.to_dict(),
            "wrench_b": on_b.shift(state_b.origin).to_dict(),
            "surface": surface.summary(),
            "broad_phase": {"node_visits": stats.node_visits, "leaf_tests": stats.leaf_tests,
                            "candidates": stats.candidates},
        }
        if verify_samples:
            generator = rng if rng is not None else np.random.default_rng()
            result.report["verification"] = sample_pressure_gap(
                surface, mesh_a, field_a, mesh_b, field_b, verify_samples, generator
            )
        if export_path is not None:
            mesh_file, sidecar = export_surface(surface, export_path)
            result.report["export"] = {"surface": str(mesh_file), "pressures": str(sidecar)}
            result.output_file = str(mesh_file)

        if surface.is_empty:
            result.message = "Тела не контактируют"
        else:
            result.message = f"Контакт: {surface.n_triangles} треугольников, F = {on_a.force.tolist()}"

    return _execute(result, action)


@timing
def cmd_energy(body_a: BodySpec, body_b: BodySpec) -> ProcessingResult:
    """Потенциальная энергия контакта: U_A, U_B, сумма и вытесненные объёмы"""
    result = ProcessingResult()

    def action():
        mesh_a, field_a = body_a.load()
        mesh_b, field_b = body_b.load()
        volume_a, volume_b = displaced_volume(mesh_a, field_a, body_a.pose, mesh_b, field_b, body_b.pose)
        total = volume_a.energy + volume_b.energy
        result.report = {
            "command": "energy",
            "U_A": volume_a.energy,
            "U_B": volume_b.energy,
            "U": total,
            "volume_A": volume_a.volume,
            "volume_B": volume_b.volume,
            "pieces_A": len(volume_a.pieces),
            "pieces_B": len(volume_b.pieces),
        }
        result.message = f"U = {total:.6g} Дж"

    return _execute(result, action)


# ---------------------------------------------------------------------------
# simulate / sinusoid
# ---------------------------------------------------------------------------


@timing
def cmd_simulate(scene_path: Union[str, Path], output: Union[str, Path],
                 xlsx: Optional[Union[str, Path]] = None, quadrature: Optional[int] = None,
                 record_every: int = 1, energy_every: int = 1) -> ProcessingResult:
    """
    Симуляция сцены из JSON с записью траектории в CSV (и при желании в xlsx)

    Расхождение даёт код 4 и номер шага в сообщении.
    """
    result = ProcessingResult()

    def action():
        scene = load_scene(scene_path)
        if quadrature is not None:
            scene.quadrature = quadrature
            scene.validate()
        trajectory = simulate(scene, energy_every=energy_every, record_every=record_every)
        path = trajectory.to_csv(output)
        result.output_file = str(path)

        final_forces = {
            label: trajectory.pair_forces(label)[-1].tolist() for label in trajectory.pair_labels
        }
        result.report = {
            "command": "simulate",
            "output": str(path),
            "rows": len(trajectory),
            "steps": scene.n_steps,
            "final_time": float(trajectory.times[-1]),
            "energy_drift": trajectory.energy_drift(),
            "final_forces": final_forces,
        }
        if xlsx is not None:
            result.report["xlsx"] = str(trajectory.to_excel(xlsx))
        result.message = f"Траектория записана: {path}"

    _execute(result, action)
    if not result.success and result.exit_code == SimulationDivergenceError.exit_code:
        result.message = "Симуляция разошлась"
    return result


@timing
def cmd_sinusoid(amplitudes: Sequence[float], depths: Sequence[float], output: Union[str, Path],
                 resolution: int = 8, xlsx: Optional[Union[str, Path]] = None,
                 wavelength: Optional[float] = None) -> ProcessingResult:
    """Таблица нормированных сил вдавливания синусоиды в CSV (и xlsx)"""
    from modules.excel_handler import ExcelReport
    from modules.scenarios import SINUSOID_WAVELENGTH, sinusoid_force_profile

    result = ProcessingResult()

    def action():
        length = SINUSOID_WAVELENGTH if wavelength is None else wavelength
        profile = sinusoid_force_profile(amplitudes, depths, resolution, length)
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        profile.to_csv(path, index=False, float_format="%.17g")
        result.output_file = str(path)
        result.report = {
            "command": "sinusoid",
            "wavelength": length,
            "output": str(path),
            "rows": profile.to_dict(orient="records"),
        }
        if xlsx is not None:
            result.report["xlsx"] = str(ExcelReport(xlsx).write_sinusoid_profile(profile))
        result.message = f"Профиль сил записан: {path}"

    return _execute(result, action)
