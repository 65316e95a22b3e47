"""
Модуль логирования и тайминга операций

Консоль - stderr (stdout занят JSON-отчётами команд), файл журнала
подключается только при заданном каталоге.
"""

import sys
import time
from datetime import datetime
from functools import wraps
from pathlib import Path
from typing import Optional, Union

from loguru import logger


LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
    "<level>{message}</level>"
)
LOG_PREFIX = "pfc"
LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


def log_file_name(moment: Optional[datetime] = None) -> str:
    return f"{LOG_PREFIX}_{(moment or datetime.now()).strftime('%Y%m%d_%H%M%S')}.log"


def setup_logger(log_dir: Optional[Union[str, Path]] = None, level: str = "INFO") -> Optional[Path]:
    """
    Настройка обработчиков loguru

    Args:
        log_dir: каталог файла журнала; None - только консоль
        level: уровень консольного вывода

    Returns:
        Путь к файлу журнала или None
    """
    level = level.upper()
    if level not in LEVELS:
        raise ValueError(f"Неизвестный уровень логирования: {level}")

    logger.remove()
    logger.add(sys.stderr, format=LOG_FORMAT, level=level, colorize=True)

    if not log_dir:
        return None

    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)
    log_file = log_path / log_file_name()
    # в файл пишется всё, независимо от уровня консоли
    logger.add(
        str(log_file),
        format=LOG_FORMAT,
        level="DEBUG",
        rotation="10 MB",
        retention="7 days",
        encoding="utf-8",
    )
    logger.info(f"Логирование инициализировано. Файл: {log_file}")
    return log_file


def timing(func):
    """Декоратор для замера времени выполнения функции"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        logger.info(f"🚀 Начало: {func.__name__}")

        try:
            result = func(*args, **kwargs)
        except Exception as e:
            elapsed = time.perf_counter() - start_time
            code = getattr(e, "exit_code", None)
            suffix = f" (код {code})" if code is not None else ""
            logger.error(f"❌ Ошибка в {func.__name__} после {elapsed:.2f} сек{suffix}: {e}")
            raise

        elapsed = time.perf_counter() - start_time
        logger.success(f"✅ Завершено: {func.__name__} за {elapsed:.2f} сек")
        return result

    return wrapper


class Timer:
    """
    Контекстный менеджер для замера времени блока кода

    При заданном count в журнал попадает и скорость обработки
    (например, тетраэдров или шагов в секунду).
    """

    def __init__(self, operation_name: str, count: Optional[int] = None, unit: str = "шт"):
        self.operation_name = operation_name
        self.count = count
        self.unit = unit
        self.start_time = None
        self.elapsed = None

    def __enter__(self):
        self.start_time = time.perf_counter()
        logger.debug(f"⏱️ Старт операции: {self.operation_name}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self.start_time
        if exc_type is not None:
            logger.warning(
                f"⏱️ Операция '{self.operation_name}' прервана с ошибкой после {self.elapsed:.3f} сек"
            )
            return False

        message = f"⏱️ Операция '{self.operation_name}' завершена за {self.elapsed:.3f} сек"
        if self.count and self.elapsed > 0.0:
            message += f" ({self.count / self.elapsed:.0f} {self.unit}/сек)"
        logger.debug(message)
        return False


# Общий логгер проекта; обработчики настраивает main() через setup_logger
log = logger
