# -*- coding: utf-8 -*-
"""
Модуль выгрузки результатов в Excel (.xlsx)

Лист "Траектория" - временной ряд состояний и винтов, лист "Сводка" -
итоговые показатели, лист "Синусоида" - таблица нормированных сил.
"""

from pathlib import Path
from typing import TYPE_CHECKING, Dict, Optional, Union

import numpy as np
import pandas as pd
from openpyxl import Workbook, load_workbook
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.utils import get_column_letter
from openpyxl.utils.dataframe import dataframe_to_rows
from openpyxl.worksheet.worksheet import Worksheet

from modules.errors import InputError
from modules.logger import Timer, log, timing

if TYPE_CHECKING:
    from modules.sim import Trajectory


TRAJECTORY_SHEET = "Траектория"
SUMMARY_SHEET = "Сводка"
SINUSOID_SHEET = "Синусоида"


class SheetHelper:
    """Вспомогательные операции над листом"""

    def __init__(self, worksheet: Worksheet):
        self.ws = worksheet

    def set_column_width(self, col: Union[int, str], width: float):
        """Установить ширину колонки"""
        letter = get_column_letter(col) if isinstance(col, int) else col
        self.ws.column_dimensions[letter].width = width

    def set_row_height(self, row: int, height: float):
        self.ws.row_dimensions[row].height = height

    def write_dataframe(self, df: pd.DataFrame, start_row: int = 1) -> int:
        """Записать DataFrame с заголовком; возвращает номер последней строки"""
        row_idx = start_row - 1
        for row_idx, row in enumerate(dataframe_to_rows(df, index=False, header=True), start_row):
            for col_idx, value in enumerate(row, 1):
                if value is not None and not (isinstance(value, float) and pd.isna(value)):
                    self.ws.cell(row=row_idx, column=col_idx, value=value)
        return row_idx

    def freeze_header(self, row: int = 1):
        self.ws.freeze_panes = self.ws.cell(row=row + 1, column=1)

    def auto_filter(self, start_row: int, start_col: int, end_row: int, end_col: int):
        self.ws.auto_filter.ref = (
            f"{get_column_letter(start_col)}{start_row}:{get_column_letter(end_col)}{end_row}"
        )


class TableFormatter:
    """Оформление таблиц результатов"""

    THIN_BORDER = Border(
        left=Side(style="thin"),
        right=Side(style="thin"),
        top=Side(style="thin"),
        bottom=Side(style="thin"),
    )

    MEDIUM_BORDER = Border(
        left=Side(style="medium"),
        right=Side(style="medium"),
        top=Side(style="medium"),
        bottom=Side(style="medium"),
    )

    # Заливка заголовков по группам колонок
    FILL_COLORS = {
        "time": PatternFill(start_color="D9D9D9", end_color="D9D9D9", fill_type="solid"),
        "body": PatternFill(start_color="B4C6E7", end_color="B4C6E7", fill_type="solid"),
        "pair": PatternFill(start_color="F8CBAD", end_color="F8CBAD", fill_type="solid"),
        "energy": PatternFill(start_color="C6E0B4", end_color="C6E0B4", fill_type="solid"),
        "warning": PatternFill(start_color="FFE699", end_color="FFE699", fill_type="solid"),
    }

    NUMBER_FORMAT = "0.000000E+00"

    def __init__(self, worksheet: Worksheet):
        self.ws = worksheet
        self.helper = SheetHelper(worksheet)

    def format_header(self, row: int, groups: Optional[Dict[str, str]] = None, height: float = 30):
        """Жирный заголовок по центру; groups: колонка -> ключ FILL_COLORS"""
        groups = groups or {}
        for cell in self.ws[row]:
            if cell.value is None:
                continue
            cell.font = Font(bold=True, size=10)
            cell.alignment = Alignment(horizontal="center", vertical="center", wrap_text=True)
            cell.border = self.MEDIUM_BORDER
            fill = groups.get(str(cell.value))
            if fill in self.FILL_COLORS:
                cell.fill = self.FILL_COLORS[fill]
        self.helper.set_row_height(row, height)

    def format_body(self, start_row: int, end_row: int, max_col: int, number_format: Optional[str] = None):
        number_format = number_format or self.NUMBER_FORMAT
        for row in self.ws.iter_rows(min_row=start_row, max_row=end_row, max_col=max_col):
            for cell in row:
                cell.border = self.THIN_BORDER
                if isinstance(cell.value, float):
                    cell.number_format = number_format

    def set_widths(self, max_col: int, width: float = 14, first: float = 12):
        self.helper.set_column_width(1, first)
        for col in range(2, max_col + 1):
            self.helper.set_column_width(col, width)

    def highlight_cell(self, row: int, col: int, color: str = "warning"):
        if color in self.FILL_COLORS:
            self.ws.cell(row=row, column=col).fill = self.FILL_COLORS[color]


def _trajectory_groups(trajectory: "Trajectory") -> Dict[str, str]:
    groups = {"time": "time", "U": "energy", "energy": "energy"}
    for name in trajectory.body_names:
        for suffix in ("px", "py", "pz", "qw", "qx", "qy", "qz", "wx", "wy", "wz", "vx", "vy", "vz"):
            groups[f"{name}_{suffix}"] = "body"
    for label in trajectory.pair_labels:
        for suffix in ("fx", "fy", "fz", "tx", "ty", "tz"):
            groups[f"{label}_{suffix}"] = "pair"
    return groups


class ExcelReport:
    """Книга с результатами расчёта"""

    def __init__(self, file_path: Union[str, Path]):
        self.file_path = Path(file_path)
        if self.file_path.suffix.lower() not in (".xlsx", ".xlsm"):
            raise InputError(f"Неподдерживаемый формат отчёта: {self.file_path.suffix}")
        self.workbook: Optional[Workbook] = None

    def open_or_create(self) -> "ExcelReport":
        """Открыть существующую книгу или создать новую"""
        if self.file_path.exists():
            self.workbook = load_workbook(str(self.file_path))
            log.info(f"Отчёт открыт: {self.file_path.name}. Листы: {self.workbook.sheetnames}")
        else:
            self.workbook = Workbook()
            if "Sheet" in self.workbook.sheetnames:
                del self.workbook["Sheet"]
        return self

    def get_or_create_sheet(self, name: str) -> Worksheet:
        """Пустой лист с заданным именем (существующий пересоздаётся)"""
        if self.workbook is None:
            self.open_or_create()
        if name in self.workbook.sheetnames:
            index = self.workbook.sheetnames.index(name)
            del self.workbook[name]
            return self.workbook.create_sheet(title=name, index=index)
        return self.workbook.create_sheet(title=name)

    def save(self) -> Path:
        if self.workbook is None:
            raise InputError("Книга не создана")
        self.file_path.parent.mkdir(parents=True, exist_ok=True)
        with Timer(f"Сохранение {self.file_path.name}"):
            self.workbook.save(str(self.file_path))
        log.info(f"Отчёт сохранён: {self.file_path}")
        return self.file_path

    def _write_table(self, sheet_name: str, df: pd.DataFrame,
                     groups: Optional[Dict[str, str]] = None) -> Worksheet:
        ws = self.get_or_create_sheet(sheet_name)
        helper = SheetHelper(ws)
        formatter = TableFormatter(ws)
        last_row = helper.write_dataframe(df)
        max_col = max(len(df.columns), 1)
        formatter.format_header(1, groups)
        if last_row > 1:
            formatter.format_body(2, last_row, max_col)
            helper.auto_filter(1, 1, last_row, max_col)
        formatter.set_widths(max_col)
        helper.freeze_header()
        return ws

    @timing
    def write_trajectory(self, trajectory: "Trajectory") -> Path:
        """Листы "Траектория" и "Сводка"; возвращает путь к книге"""
        df = trajectory.to_dataframe()
        self._write_table(TRAJECTORY_SHEET, df, _trajectory_groups(trajectory))

        summary = [
            {"Показатель": "Шагов записано", "Значение": len(trajectory)},
            {"Показатель": "Конечное время, с", "Значение": float(trajectory.times[-1]) if len(trajectory) else 0.0},
            {"Показатель": "Дрейф энергии, Дж", "Значение": trajectory.energy_drift()},
        ]
        for label in trajectory.pair_labels:
            forces = trajectory.pair_forces(label)
            peak = float(np.linalg.norm(forces, axis=1).max()) if len(forces) else 0.0
            summary.append({"Показатель": f"Пиковая |F| пары {label}, Н", "Значение": peak})
        ws = self._write_table(SUMMARY_SHEET, pd.DataFrame(summary))
        SheetHelper(ws).set_column_width(1, 36)
        SheetHelper(ws).set_column_width(2, 20)

        log.info(f"Траектория выгружена в Excel: {len(df)} строк, {len(df.columns)} колонок")
        return self.save()

    def write_sinusoid_profile(self, df: pd.DataFrame) -> Path:
        """Лист "Синусоида" с таблицей нормированных сил"""
        groups = {column: "energy" for column in ("force", "normalized_force")}
        groups.update({column: "time" for column in ("amplitude", "depth")})
        ws = self._write_table(SINUSOID_SHEET, df, groups)
        if "facets" in df.columns:
            col = list(df.columns).index("facets") + 1
            for row, facets in enumerate(df["facets"], 2):
                if facets == 0:
                    TableFormatter(ws).highlight_cell(row, col)
        return self.save()


def read_report_sheet(file_path: Union[str, Path], sheet_name: str = TRAJECTORY_SHEET) -> pd.DataFrame:
    """Прочитать лист отчёта в DataFrame"""
    path = Path(file_path)
    with Timer(f"Чтение в DataFrame: {path.name}"):
        return pd.read_excel(str(path), sheet_name=sheet_name, engine="openpyxl")
