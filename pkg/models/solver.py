# -*- coding: utf-8 -*-
"""
Параметры дискретизации и решателя Гельмгольца
"""
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from config.settings import (
    DIRECT_SOLVER_NODE_LIMIT,
    NODE_BUDGET,
    PML_A0,
    PML_EXPONENT,
    SHAPE_PER_WAVENUMBER,
    SOLVER_WORKERS,
)
from utils.errors import ValidationError

# Параметр формы: число или функция локального волнового числа k = omega * sqrt(m)
ShapeParameter = Union[float, Callable[[np.ndarray], np.ndarray]]


@dataclass(frozen=True)
class PmlConfig:
    """Профиль поглощающего слоя sigma(d) = sigma0 * (d / delta)^p"""

    thickness: float  # delta, м
    sigma0: float
    omega: float  # рад/с
    exponent: int = 2

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValidationError(f"Толщина PML должна быть положительной, получено {self.thickness}")
        if not self.sigma0 > 0:
            raise ValidationError(f"sigma0 должно быть положительным, получено {self.sigma0}")
        if self.omega < 0:
            raise ValidationError(f"Частота не может быть отрицательной, получено {self.omega}")
        if self.exponent < 1:
            raise ValidationError(f"Показатель профиля должен быть >= 1, получено {self.exponent}")

    @classmethod
    def from_omega(cls, thickness: float, omega: float, a0: float = PML_A0,
                   exponent: int = PML_EXPONENT) -> 'PmlConfig':
        """
        Классическая настройка sigma0 = a0 * omega

        Args:
            thickness (float): Толщина слоя, м
            omega (float): Угловая частота, рад/с
            a0 (float): Безразмерная сила затухания
            exponent (int): Показатель профиля

        Returns:
            PmlConfig: Конфигурация слоя
        """
        # при omega = 0 растяжение отключено, sigma0 не используется
        sigma0 = a0 * omega if omega > 0 else a0
        return cls(thickness=thickness, sigma0=sigma0, omega=omega, exponent=exponent)


@dataclass(frozen=True)
class StencilWeights:
    """Веса 7-точечного шаблона Лапласиана на правильном шестиугольнике"""

    center: float
    neighbor: float  # Общий для 6 соседей
    epsilon: float  # Параметр формы, 1/м
    h: float


@dataclass(frozen=True)
class SolverConfig:
    """Настройки сборки и решения"""

    shape_parameter: float = 0.0  # Постоянный eps, 1/м
    shape_per_wavenumber: Optional[float] = SHAPE_PER_WAVENUMBER  # eps = beta * k, перекрывает постоянный
    pml_a0: float = PML_A0
    pml_exponent: int = PML_EXPONENT
    workers: int = SOLVER_WORKERS
    direct_node_limit: int = DIRECT_SOLVER_NODE_LIMIT
    node_budget: int = NODE_BUDGET
    iterative_tol: float = 1e-10

    def __post_init__(self):
        if self.shape_parameter < 0:
            raise ValidationError(f"Параметр формы не может быть отрицательным: {self.shape_parameter}")
        if self.shape_per_wavenumber is not None and self.shape_per_wavenumber < 0:
            raise ValidationError(f"Коэффициент eps/k не может быть отрицательным: {self.shape_per_wavenumber}")
        if self.workers < 1:
            raise ValidationError(f"Число потоков должно быть >= 1, получено {self.workers}")

    @property
    def shape(self) -> ShapeParameter:
        """Параметр формы для сборки: число или eps(k) = beta * k"""
        if self.shape_per_wavenumber is None:
            return self.shape_parameter
        beta = self.shape_per_wavenumber
        return lambda k: beta * k

    def pml(self, thickness: float, omega: float) -> PmlConfig:
        return PmlConfig.from_omega(thickness, omega, a0=self.pml_a0, exponent=self.pml_exponent)


@dataclass
class SolverStats:
    """Запись статистики решателя (одна JSON-строка)"""

    event: str  # assemble | factorize | solve
    nodes: int
    nnz: int = 0
    kind: str = 'direct'
    seconds: float = 0.0
    solve_seconds_per_rhs: Optional[float] = None
    n_rhs: Optional[int] = None
    factor_memory_bytes: Optional[int] = None
    frequency_hz: Optional[float] = None
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        data = asdict(self)
        extra = data.pop('extra')
        data.update(extra)
        return {key: value for key, value in data.items() if value is not None}
