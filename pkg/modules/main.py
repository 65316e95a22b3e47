#!/usr/bin/env python
# -*- coding: utf-8 -*-
"""
PFC-Contact - контакт по полю давления
Главный файл запуска

Использование:
    python modules/main.py genfield --mesh cube.ptm --method analytic-box --output cube.pfd
    python modules/main.py contact --a-mesh a.ptm --a-field a.pfd --b-mesh b.ptm --b-field b.pfd
    python modules/main.py energy --a-mesh ... --b-mesh ...
    python modules/main.py simulate --scene scene.json --output trajectory.csv
    python modules/main.py sinusoid --output sinusoid.csv
    python modules/main.py --help
"""

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

# Добавляем корневую директорию в путь поиска модулей
sys.path.insert(0, str(Path(__file__).parent.parent))

import numpy as np

from modules.commands import (
    GENFIELD_METHODS,
    BodySpec,
    ProcessingResult,
    cmd_contact,
    cmd_energy,
    cmd_genfield,
    cmd_simulate,
    cmd_sinusoid,
)
from modules.errors import InputError, PfcError
from modules.helpers import parse_vector
from modules.logger import log, setup_logger
from modules.mesh import Pose
from modules.traction import DEFAULT_SLIP_VELOCITY, ContactParams

SUBCOMMANDS = ("genfield", "contact", "energy", "simulate", "sinusoid")


@dataclass
class CliConfig:
    """Разобранные и проверенные аргументы командной строки"""

    subcommand: str
    quadrature: Optional[int] = None
    seed: Optional[int] = None
    log_level: str = "INFO"
    log_dir: Optional[str] = None
    output: Optional[Path] = None
    xlsx: Optional[Path] = None
    # genfield
    mesh: Optional[Path] = None
    method: Optional[str] = None
    bc: Optional[Path] = None
    modulus: float = 1.0
    # contact / energy
    body_a: Optional[BodySpec] = None
    body_b: Optional[BodySpec] = None
    params: ContactParams = field(default_factory=ContactParams)
    export_surface: Optional[Path] = None
    verify_samples: int = 0
    # simulate
    scene: Optional[Path] = None
    record_every: int = 1
    energy_every: int = 1
    # sinusoid
    amplitudes: List[float] = field(default_factory=lambda: [0.0, 0.166, 0.333])
    depths: List[float] = field(default_factory=lambda: [0.4])
    resolution: int = 8
    wavelength: Optional[float] = None

    def validate(self):
        """
        Проверка путей и числовых параметров до начала работы

        Raises:
            InputError: отсутствующий файл или параметр вне допустимого диапазона
        """
        if self.subcommand not in SUBCOMMANDS:
            raise InputError(f"Неизвестная команда: {self.subcommand}")
        if self.quadrature not in (None, 1, 3):
            raise InputError(f"--quadrature должен быть 1 или 3, получено {self.quadrature}")
        if self.seed is not None and self.seed < 0:
            raise InputError("--seed должен быть неотрицательным")

        inputs = []
        if self.subcommand == "genfield":
            if self.method == "laplace" and self.bc is None:
                raise InputError("Метод laplace требует файл граничных условий (--bc)")
            if not np.isfinite(self.modulus) or self.modulus <= 0.0:
                raise InputError(f"--modulus должен быть положительным, получено {self.modulus}")
            inputs = [self.mesh, self.bc]
        elif self.subcommand in ("contact", "energy"):
            if self.verify_samples < 0:
                raise InputError(f"--verify-samples должен быть неотрицательным, получено {self.verify_samples}")
            inputs = [self.body_a.mesh_path, self.body_a.field_path,
                      self.body_b.mesh_path, self.body_b.field_path]
        elif self.subcommand == "simulate":
            if self.record_every < 1 or self.energy_every < 0:
                raise InputError("--record-every ≥ 1, --energy-every ≥ 0")
            inputs = [self.scene]
        elif self.subcommand == "sinusoid":
            if self.resolution < 2:
                raise InputError(f"--resolution должен быть не меньше 2, получено {self.resolution}")
            if any(a < 0.0 for a in self.amplitudes) or any(d <= 0.0 for d in self.depths):
                raise InputError("Амплитуды должны быть неотрицательны, глубины положительны")
            if self.wavelength is not None and (not np.isfinite(self.wavelength) or self.wavelength <= 0.0):
                raise InputError(f"--wavelength должен быть положительным, получено {self.wavelength}")

        for path in inputs:
            if path is not None and not Path(path).exists():
                raise InputError(f"Файл не найден: {path}")


def build_parser() -> argparse.ArgumentParser:
    """Парсер аргументов командной строки"""
    parser = argparse.ArgumentParser(
        prog="pfc",
        description="PFC-Contact - контакт по полю давления на тетраэдральных сетках",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Коды завершения: 0 - успех, 2 - ошибка входных данных, 3 - ошибка решателя,
4 - расхождение симуляции.

Примеры использования:
  python modules/main.py genfield --mesh data/cube.ptm --method analytic-box --output cube.pfd
  python modules/main.py genfield --mesh data/slab.ptm --method laplace --bc data/slab_bc.json --output slab.pfd
  python modules/main.py contact --a-mesh data/cube.ptm --a-field data/cube.pfd --a-pose 0,0,0.9,0,0,0 \\
      --b-mesh data/cube.ptm --b-field data/cube.pfd --export-surface surface.obj
  python modules/main.py simulate --scene scene.json --output trajectory.csv --xlsx trajectory.xlsx
        """,
    )

    parser.add_argument("--quadrature", type=int, default=None, choices=[1, 3],
                        help="Порядок квадратуры на треугольниках (по умолчанию: 1, для simulate - из сцены)")
    parser.add_argument("--seed", type=int, default=None,
                        help="Начальное значение генератора случайных чисел")
    parser.add_argument("--verbose", action="store_true", help="Подробный вывод (уровень DEBUG)")
    parser.add_argument(
        "--log-level",
        type=str,
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Уровень логирования (по умолчанию: INFO)",
    )
    parser.add_argument("--log-dir", type=str, default=None, help="Каталог для файла журнала")

    sub = parser.add_subparsers(dest="subcommand", required=True)

    genfield = sub.add_parser("genfield", help="Генерация поля проникновения ε")
    genfield.add_argument("--mesh", type=Path, required=True, help="Сетка (.ptm)")
    genfield.add_argument("--method", required=True, choices=GENFIELD_METHODS, help="Метод построения поля")
    genfield.add_argument("--bc", type=Path, default=None, help="Граничные условия Дирихле (JSON, для laplace)")
    genfield.add_argument("--modulus", type=float, default=1.0, help="Модуль E, Па")
    genfield.add_argument("--output", type=Path, required=True, help="Файл поля (.pfd)")

    for name, help_text in (("contact", "Поверхность контакта и винт сил"),
                            ("energy", "Потенциальная энергия контакта")):
        command = sub.add_parser(name, help=help_text)
        for body in ("a", "b"):
            command.add_argument(f"--{body}-mesh", type=Path, required=True, help=f"Сетка тела {body.upper()}")
            command.add_argument(f"--{body}-field", type=Path, required=True, help=f"Поле тела {body.upper()}")
            command.add_argument(f"--{body}-pose", type=str, default="0,0,0,0,0,0",
                                 help="Поза tx,ty,tz,rx,ry,rz (сдвиг, вектор поворота)")
            if name == "contact":
                command.add_argument(f"--{body}-velocity", type=str, default="0,0,0,0,0,0",
                                     help="Скорость wx,wy,wz,vx,vy,vz (угловая, линейная)")
        if name == "contact":
            command.add_argument("--chi", type=float, default=0.0, help="Коэффициент демпфирования χ, с")
            command.add_argument("--mu", type=float, default=0.0, help="Коэффициент трения μ")
            command.add_argument("--vs", type=float, default=DEFAULT_SLIP_VELOCITY,
                                 help="Скорость регуляризации трения v_s, м/с")
            command.add_argument("--export-surface", type=Path, default=None,
                                 help="Экспорт поверхности контакта (OBJ + .p0.txt)")
            command.add_argument("--verify-samples", type=int, default=0,
                                 help="Случайных точек для проверки p₀A = p₀B (генератор задаётся --seed)")

    simulate_cmd = sub.add_parser("simulate", help="Симуляция сцены")
    simulate_cmd.add_argument("--scene", type=Path, required=True, help="Описание сцены (JSON)")
    simulate_cmd.add_argument("--output", type=Path, required=True, help="Траектория (CSV)")
    simulate_cmd.add_argument("--xlsx", type=Path, default=None, help="Дополнительно выгрузить в Excel")
    simulate_cmd.add_argument("--record-every", type=int, default=1, help="Записывать каждый N-й шаг")
    simulate_cmd.add_argument("--energy-every", type=int, default=1,
                              help="Считать энергию в каждой N-й записи (0 - не считать)")

    sinusoid = sub.add_parser("sinusoid", help="Вдавливание синусоиды в слой")
    sinusoid.add_argument("--amplitudes", type=float, nargs="+", default=[0.0, 0.166, 0.333])
    sinusoid.add_argument("--depths", type=float, nargs="+", default=[0.4])
    sinusoid.add_argument("--wavelength", type=float, default=None,
                          help="Длина волны λ, м (по умолчанию 2π/3)")
    sinusoid.add_argument("--resolution", type=int, default=8, help="Ячеек сетки на период")
    sinusoid.add_argument("--output", type=Path, required=True, help="Таблица сил (CSV)")
    sinusoid.add_argument("--xlsx", type=Path, default=None, help="Дополнительно выгрузить в Excel")

    return parser


def _body_spec(args, body: str) -> BodySpec:
    pose = parse_vector(getattr(args, f"{body}_pose"), 6, f"--{body}-pose")
    velocity = parse_vector(getattr(args, f"{body}_velocity", "0,0,0,0,0,0"), 6, f"--{body}-velocity")
    return BodySpec(
        getattr(args, f"{body}_mesh"),
        getattr(args, f"{body}_field"),
        Pose.from_rotvec(pose[:3], pose[3:]),
        velocity[:3],
        velocity[3:],
    )


def config_from_args(args) -> CliConfig:
    """Сборка CliConfig из пространства имён argparse"""
    config = CliConfig(
        subcommand=args.subcommand,
        quadrature=args.quadrature,
        seed=args.seed,
        log_level="DEBUG" if args.verbose else args.log_level,
        log_dir=args.log_dir,
    )
    if args.subcommand == "genfield":
        config.mesh, config.method, config.bc = args.mesh, args.method, args.bc
        config.modulus, config.output = args.modulus, args.output
    elif args.subcommand in ("contact", "energy"):
        config.body_a = _body_spec(args, "a")
        config.body_b = _body_spec(args, "b")
        if args.subcommand == "contact":
            try:
                config.params = ContactParams(chi=args.chi, mu=args.mu, v_s=args.vs)
            except PfcError as e:
                raise InputError(str(e)) from e
            config.export_surface = args.export_surface
            config.verify_samples = args.verify_samples
    elif args.subcommand == "simulate":
        config.scene, config.output, config.xlsx = args.scene, args.output, args.xlsx
        config.record_every, config.energy_every = args.record_every, args.energy_every
    elif args.subcommand == "sinusoid":
        config.amplitudes, config.depths = list(args.amplitudes), list(args.depths)
        config.resolution, config.output, config.xlsx = args.resolution, args.output, args.xlsx
        config.wavelength = args.wavelength
    config.validate()
    return config


def run_command(config: CliConfig) -> ProcessingResult:
    """Выполнение выбранной команды"""
    if config.subcommand == "genfield":
        return cmd_genfield(config.mesh, config.method, config.output, config.modulus, config.bc)
    if config.subcommand == "contact":
        return cmd_contact(config.body_a, config.body_b, config.params, config.quadrature or 1,
                           config.export_surface, config.verify_samples, np.random.default_rng(config.seed))
    if config.subcommand == "energy":
        return cmd_energy(config.body_a, config.body_b)
    if config.subcommand == "simulate":
        return cmd_simulate(config.scene, config.output, config.xlsx, config.quadrature,
                            config.record_every, config.energy_every)
    return cmd_sinusoid(config.amplitudes, config.depths, config.output, config.resolution, config.xlsx,
                        config.wavelength)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"Тип {type(value).__name__} не сериализуется в JSON")


def print_result(result: ProcessingResult):
    """Отчёт в stdout (JSON), статус в stderr"""
    if result.success:
        print(json.dumps(result.report, ensure_ascii=False, indent=2, default=_json_default))
        print(f"✅ Успех: {result.message}", file=sys.stderr)
    else:
        print(f"❌ Ошибка: {', '.join(result.errors)}", file=sys.stderr)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Главная функция; возвращает код завершения"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    setup_logger(args.log_dir, "DEBUG" if args.verbose else args.log_level)
    log.info("=" * 60)
    log.info(f"PFC-Contact: {args.subcommand}")
    log.info("=" * 60)

    try:
        config = config_from_args(args)
    except PfcError as e:
        print(f"❌ Ошибка: {e}", file=sys.stderr)
        return e.exit_code

    result = run_command(config)
    if config.seed is not None:
        result.report["seed"] = config.seed
    print_result(result)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
