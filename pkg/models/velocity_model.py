# -*- coding: utf-8 -*-
"""
Модель скоростей на прямоугольной сетке и поля на ней
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np

from utils.errors import ValidationError


class Quantity(str, Enum):
    """Тип величины, хранимой в поле модели"""

    VELOCITY = 'velocity'
    SLOWNESS_SQUARED = 'slowness-squared'
    GRADIENT = 'gradient'


@dataclass(frozen=True)
class VelocityModel:
    """Модель скоростей c(x, z) в м/с, строки по глубине (nz x nx)"""

    nz: int
    nx: int
    dz: float  # Шаг по глубине, м
    dx: float  # Шаг по горизонтали, м
    c: np.ndarray = field(repr=False)  # Скорости, форма (nz, nx)
    origin: Tuple[float, float] = (0.0, 0.0)  # (x0, z0), м

    def __post_init__(self):
        """Валидация данных после создания объекта"""
        if self.nz < 2 or self.nx < 2:
            raise ValidationError(f"Модель должна иметь nz >= 2 и nx >= 2, получено {self.nz}x{self.nx}")
        if not (self.dz > 0 and self.dx > 0):
            raise ValidationError(f"Шаги сетки должны быть положительны: dz={self.dz}, dx={self.dx}")

        c = np.array(self.c, dtype=np.float64).reshape(self.nz, self.nx)
        if not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise ValidationError("Все скорости модели должны быть конечными и положительными")
        c.setflags(write=False)
        object.__setattr__(self, 'c', c)
        object.__setattr__(self, 'origin', (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def constant(cls, nz: int, nx: int, dz: float, dx: float, velocity: float,
                 origin: Tuple[float, float] = (0.0, 0.0)) -> 'VelocityModel':
        """Однородная модель"""
        return cls(nz=nz, nx=nx, dz=dz, dx=dx, c=np.full((nz, nx), float(velocity)), origin=origin)

    @classmethod
    def two_layer(cls, nz: int, nx: int, dz: float, dx: float, c_top: float, c_bottom: float,
                  interface_depth: float, origin: Tuple[float, float] = (0.0, 0.0)) -> 'VelocityModel':
        """
        Двухслойная модель с горизонтальной границей

        Args:
            nz (int): Число строк
            nx (int): Число столбцов
            dz (float): Шаг по глубине, м
            dx (float): Шаг по горизонтали, м
            c_top (float): Скорость верхнего слоя, м/с
            c_bottom (float): Скорость нижнего слоя, м/с
            interface_depth (float): Глубина границы от поверхности, м
            origin (Tuple[float, float]): Начало координат

        Returns:
            VelocityModel: Модель
        """
        depths = dz * np.arange(nz)
        column = np.where(depths < interface_depth, float(c_top), float(c_bottom))
        return cls(nz=nz, nx=nx, dz=dz, dx=dx, c=np.repeat(column[:, None], nx, axis=1), origin=origin)

    @property
    def width(self) -> float:
        """Ширина физической области, м"""
        return (self.nx - 1) * self.dx

    @property
    def depth(self) -> float:
        """Глубина физической области z_d, м"""
        return (self.nz - 1) * self.dz

    @property
    def x(self) -> np.ndarray:
        """Координаты столбцов, м"""
        return self.origin[0] + self.dx * np.arange(self.nx)

    @property
    def z(self) -> np.ndarray:
        """Координаты строк, м"""
        return self.origin[1] + self.dz * np.arange(self.nz)

    def with_velocity(self, c: np.ndarray) -> 'VelocityModel':
        """
        Создать модель с той же геометрией и новыми скоростями

        Args:
            c (np.ndarray): Новые скорости (nz, nx)

        Returns:
            VelocityModel: Новая модель
        """
        return VelocityModel(nz=self.nz, nx=self.nx, dz=self.dz, dx=self.dx, c=c, origin=self.origin)

    def slowness_squared(self) -> 'ModelField':
        """
        Получить m = c^-2

        Returns:
            ModelField: Поле квадрата медленности
        """
        return ModelField(self, self.c ** -2, Quantity.SLOWNESS_SQUARED)

    def to_header(self) -> dict:
        """
        Заголовок файла модели

        Returns:
            dict: Метаданные без самих значений
        """
        return {
            'nz': self.nz,
            'nx': self.nx,
            'dz': self.dz,
            'dx': self.dx,
            'origin': list(self.origin),
            'dtype': 'f32',
            'order': 'row-major'
        }


@dataclass(frozen=True)
class ModelField:
    """Поле, согласованное 1:1 с сеткой модели скоростей"""

    model: VelocityModel = field(repr=False)
    values: np.ndarray = field(repr=False)
    quantity: Quantity = Quantity.VELOCITY

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.size != self.model.nz * self.model.nx:
            raise ValidationError(
                f"Размер поля {values.shape} не совпадает с моделью {self.model.nz}x{self.model.nx}"
            )
        values = values.reshape(self.model.nz, self.model.nx)
        if self.quantity == Quantity.SLOWNESS_SQUARED and (not np.all(np.isfinite(values)) or np.any(values <= 0)):
            raise ValidationError("Квадрат медленности должен быть конечным и положительным")
        values.setflags(write=False)
        object.__setattr__(self, 'values', values)
        object.__setattr__(self, 'quantity', Quantity(self.quantity))

    @property
    def flat(self) -> np.ndarray:
        """Значения одним вектором (row-major)"""
        return self.values.ravel()

    def to_velocity_model(self) -> VelocityModel:
        """
        Преобразовать поле скорости или медленности обратно в модель скоростей

        Returns:
            VelocityModel: Модель скоростей
        """
        if self.quantity == Quantity.VELOCITY:
            return self.model.with_velocity(self.values)
        if self.quantity == Quantity.SLOWNESS_SQUARED:
            return self.model.with_velocity(self.values ** -0.5)
        raise ValidationError("Поле градиента нельзя преобразовать в модель скоростей")
