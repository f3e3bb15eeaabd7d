# -*- coding: utf-8 -*-
"""
Гексагональная сетка решателя и правила её размера
"""
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from utils.errors import ValidationError

ROW_FACTOR = math.sqrt(3.0) / 2.0  # Вертикальный шаг строк в долях h


@dataclass(frozen=True)
class GridSizing:
    """Правило размера сетки: Ng точек на минимальную длину волны"""

    ng: float  # Точек на длину волны (NPW)
    frequency: float  # Частота, Гц
    lambda_min: float  # min(c)/f, м
    lambda_mean: float  # [c]/f, м
    pml_wavelengths: float = 1.0  # Толщина PML в единицах lambda_mean

    def __post_init__(self):
        if not self.ng > 2:
            raise ValidationError(f"Ng должно быть больше 2 (предел Найквиста), получено {self.ng}")
        if not self.frequency > 0:
            raise ValidationError(f"Частота должна быть положительной, получено {self.frequency}")
        if not (self.lambda_min > 0 and self.lambda_mean > 0):
            raise ValidationError("Длины волн должны быть положительны")
        if not self.pml_wavelengths > 0:
            raise ValidationError(f"Толщина PML должна быть положительной, получено {self.pml_wavelengths}")

    @classmethod
    def from_velocity(cls, c: np.ndarray, frequency: float, ng: float,
                      pml_wavelengths: float = 1.0) -> 'GridSizing':
        """
        Построить правило размера по полю скоростей

        Args:
            c (np.ndarray): Скорости, м/с
            frequency (float): Частота, Гц
            ng (float): Точек на длину волны
            pml_wavelengths (float): Толщина PML в [c]/f

        Returns:
            GridSizing: Правило размера
        """
        if not frequency > 0:
            raise ValidationError(f"Частота должна быть положительной, получено {frequency}")
        c = np.asarray(c, dtype=np.float64)
        return cls(
            ng=float(ng),
            frequency=float(frequency),
            lambda_min=float(c.min()) / frequency,
            lambda_mean=float(c.mean()) / frequency,
            pml_wavelengths=float(pml_wavelengths)
        )

    @property
    def spacing(self) -> float:
        """Шаг решётки h = lambda_min / Ng"""
        return self.lambda_min / self.ng

    @property
    def pml_thickness(self) -> float:
        """Толщина PML delta"""
        return self.pml_wavelengths * self.lambda_mean

    def to_dict(self) -> dict:
        return {
            'ng': self.ng,
            'frequency': self.frequency,
            'lambda_min': self.lambda_min,
            'lambda_mean': self.lambda_mean,
            'pml_wavelengths': self.pml_wavelengths
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'GridSizing':
        return cls(
            ng=data['ng'],
            frequency=data['frequency'],
            lambda_min=data['lambda_min'],
            lambda_mean=data['lambda_mean'],
            pml_wavelengths=data.get('pml_wavelengths', 1.0)
        )


@dataclass(frozen=True)
class HexGrid:
    """
    Равномерная треугольная (гексагональная) решётка: строки постоянного z,
    горизонтальный шаг h, вертикальный h*sqrt(3)/2, нечётные строки сдвинуты на h/2.
    Узел (i, j) имеет индекс j * n_cols + i.
    """

    h: float
    n_rows: int
    n_cols: int
    x_min: float  # Левая граница решётки (начало чётных строк)
    z_min: float  # Верхняя строка
    domain: Tuple[float, float, float, float]  # (x0, z0, ширина, глубина z_d)
    pml_thickness: float
    nodes: np.ndarray = field(repr=False)  # (N, 2): x, z
    interior_mask: np.ndarray = field(repr=False)
    pml_mask: np.ndarray = field(repr=False)
    neighbors: np.ndarray = field(repr=False)  # (N, 6), -1 для граничных узлов

    @property
    def row_spacing(self) -> float:
        return self.h * ROW_FACTOR

    @property
    def n_nodes(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def boundary_mask(self) -> np.ndarray:
        """Внешнее кольцо узлов с условием Дирихле"""
        return ~(self.interior_mask | self.pml_mask)

    @property
    def inner_mask(self) -> np.ndarray:
        """Неизвестные оператора: внутренние узлы и узлы PML"""
        return self.interior_mask | self.pml_mask

    @property
    def n_inner(self) -> int:
        """Размер H по внутренним узлам (как в сводной таблице)"""
        return int(np.count_nonzero(self.inner_mask))

    @property
    def cell_area(self) -> float:
        """Площадь ячейки решётки (sqrt(3)/2) h^2"""
        return ROW_FACTOR * self.h ** 2

    def row_offset(self, row) -> np.ndarray:
        """Горизонтальный сдвиг строки"""
        return (np.asarray(row) % 2) * (0.5 * self.h)

    def contains_physical(self, x, z, tol: float = 1e-9) -> np.ndarray:
        """
        Проверить, лежат ли точки в физической области

        Args:
            x: Координаты x
            z: Координаты z
            tol (float): Допуск в долях h

        Returns:
            np.ndarray: Булев массив
        """
        x0, z0, width, depth = self.domain
        eps = tol * self.h
        x = np.asarray(x, dtype=np.float64)
        z = np.asarray(z, dtype=np.float64)
        return (x >= x0 - eps) & (x <= x0 + width + eps) & (z >= z0 - eps) & (z <= z0 + depth + eps)

    def summary(self) -> dict:
        """
        Сводка по сетке

        Returns:
            dict: Шаг, число узлов и толщина PML
        """
        return {
            'h': self.h,
            'nodes': self.n_nodes,
            'inner_nodes': self.n_inner,
            'interior_nodes': int(np.count_nonzero(self.interior_mask)),
            'pml_nodes': int(np.count_nonzero(self.pml_mask)),
            'pml_thickness': self.pml_thickness,
            'rows': self.n_rows,
            'cols': self.n_cols
        }
