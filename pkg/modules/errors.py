# -*- coding: utf-8 -*-
"""
Иерархия исключений PFC-Contact

Каждый класс несёт код завершения CLI:
2 - ошибка входных данных/валидации, 3 - ошибка решателя, 4 - расхождение симуляции.
"""


class PfcError(Exception):
    """Базовое исключение библиотеки"""

    exit_code = 2


class InputError(PfcError):
    """Некорректные входные данные (файлы, аргументы, JSON)"""


class MeshParseError(PfcError):
    """Файл сетки не соответствует формату ptm"""


class MeshValidationError(PfcError):
    """Сетка прочитана, но нарушает инварианты TetMesh"""


class DegenerateTetError(MeshValidationError):
    """Вырожденный тетраэдр (сингулярное барицентрическое преобразование)"""


class FieldError(PfcError):
    """Некорректное поле проникновения, граничные условия или параметры"""


class PointOutsideTetError(PfcError):
    """Точка лежит вне тетраэдра с учётом допуска"""


class ContactStateError(PfcError):
    """Поверхность контакта не согласована с переданными состояниями тел"""


class SolverError(PfcError):
    """Сингулярная система или отсутствие сходимости линейного решателя"""

    exit_code = 3


class SimulationDivergenceError(PfcError):
    """Нечисловое состояние тела в процессе интегрирования"""

    exit_code = 4

    def __init__(self, message: str, step_index: int):
        super().__init__(f"{message} (шаг {step_index})")
        self.step_index = step_index
