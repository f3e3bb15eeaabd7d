# -*- coding: utf-8 -*-
"""
Иерархия исключений с кодами выхода для CLI
"""
from typing import Any, Dict, Optional


class FwiError(Exception):
    """Базовая ошибка инструмента"""

    exit_code = 1

    def to_dict(self) -> Dict[str, Any]:
        """
        Преобразовать ошибку в словарь для JSON-вывода

        Returns:
            Dict[str, Any]: Тип ошибки, сообщение и код выхода
        """
        return {
            'error': type(self).__name__,
            'message': str(self),
            'exit_code': self.exit_code
        }


class ValidationError(FwiError, ValueError):
    """Некорректные входные данные или конфигурация"""

    exit_code = 2


class InfeasibleResolutionError(ValidationError):
    """Сетка превышает бюджет узлов"""


class InvalidShapeParameterError(ValidationError):
    """Параметр формы RBF вне допустимого диапазона"""


class OutOfDomainError(ValidationError):
    """Точка вне физической области"""


class NumericalError(FwiError, RuntimeError):
    """Численный сбой"""

    exit_code = 3


class FactorizationError(NumericalError):
    """Не удалось факторизовать оператор"""


class NonFiniteError(NumericalError):
    """Нечисловые значения (NaN/inf) в поле, невязке или градиенте"""

    def __init__(self, message: str, state: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.state = state or {}

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data['state'] = self.state
        return data
