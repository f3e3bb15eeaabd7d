# -*- coding: utf-8 -*-
"""
Геометрия наблюдений и частотные наборы данных
"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from models.hex_grid import GridSizing
from models.velocity_model import VelocityModel
from utils.errors import OutOfDomainError, ValidationError


@dataclass(frozen=True)
class LineSpec:
    """Равномерная линия точек: (число, шаг, смещение первой, глубина)"""

    count: int
    spacing: float  # м
    first_offset: float = 0.0  # м от левого края модели
    depth: Optional[float] = None  # м от поверхности; None = одна строка модели

    def __post_init__(self):
        if self.count < 1:
            raise ValidationError(f"Число точек должно быть положительным, получено {self.count}")
        if self.count > 1 and not self.spacing > 0:
            raise ValidationError(f"Шаг линии должен быть положительным, получено {self.spacing}")

    def positions(self, model: VelocityModel) -> np.ndarray:
        """
        Координаты точек линии

        Args:
            model (VelocityModel): Модель (начало координат и шаг dz)

        Returns:
            np.ndarray: Массив (count, 2) координат x, z
        """
        depth = model.dz if self.depth is None else self.depth
        x = model.origin[0] + self.first_offset + self.spacing * np.arange(self.count)
        z = np.full(self.count, model.origin[1] + depth)
        return np.column_stack([x, z])

    def to_dict(self) -> dict:
        return {
            'count': self.count,
            'spacing': self.spacing,
            'first_offset': self.first_offset,
            'depth': self.depth
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'LineSpec':
        return cls(
            count=int(data['count']),
            spacing=float(data['spacing']),
            first_offset=float(data.get('first_offset', 0.0)),
            depth=data.get('depth')
        )


# Раскладки наблюдений из численных экспериментов (источники, приёмники)
ACQUISITION_PRESETS: Dict[str, Dict[str, LineSpec]] = {
    'marmousi': {
        'sources': LineSpec(count=55, spacing=200.0, first_offset=20.0),
        'receivers': LineSpec(count=276, spacing=40.0, first_offset=0.0)
    },
    'bp2004': {
        'sources': LineSpec(count=270, spacing=250.0, first_offset=25.0),
        'receivers': LineSpec(count=1350, spacing=50.0, first_offset=0.0)
    }
}


@dataclass(frozen=True)
class AcquisitionGeometry:
    """Координаты источников и приёмников, м"""

    sources: np.ndarray = field(repr=False)  # (ns, 2)
    receivers: np.ndarray = field(repr=False)  # (nr, 2)

    def __post_init__(self):
        for name in ('sources', 'receivers'):
            points = np.array(getattr(self, name), dtype=np.float64).reshape(-1, 2)
            if points.shape[0] == 0:
                raise ValidationError(f"Список {name} пуст")
            if not np.all(np.isfinite(points)):
                raise ValidationError(f"Координаты {name} должны быть конечными")
            if np.unique(points, axis=0).shape[0] != points.shape[0]:
                raise ValidationError(f"Список {name} содержит повторяющиеся позиции")
            points.setflags(write=False)
            object.__setattr__(self, name, points)

    @property
    def n_sources(self) -> int:
        return self.sources.shape[0]

    @property
    def n_receivers(self) -> int:
        return self.receivers.shape[0]

    @classmethod
    def from_lines(cls, model: VelocityModel, sources: LineSpec, receivers: LineSpec) -> 'AcquisitionGeometry':
        """
        Построить геометрию по двум линиям

        Args:
            model (VelocityModel): Модель скоростей
            sources (LineSpec): Линия источников
            receivers (LineSpec): Линия приёмников

        Returns:
            AcquisitionGeometry: Геометрия наблюдений
        """
        geometry = cls(sources=sources.positions(model), receivers=receivers.positions(model))
        geometry.validate_within(model)
        return geometry

    def validate_within(self, model: VelocityModel, tol: float = 1e-9):
        """
        Проверить, что все точки внутри физической области модели

        Args:
            model (VelocityModel): Модель скоростей
            tol (float): Относительный допуск
        """
        x0, z0 = model.origin
        eps_x = tol * max(model.width, 1.0)
        eps_z = tol * max(model.depth, 1.0)
        for name, points in (('sources', self.sources), ('receivers', self.receivers)):
            inside = ((points[:, 0] >= x0 - eps_x) & (points[:, 0] <= x0 + model.width + eps_x)
                      & (points[:, 1] >= z0 - eps_z) & (points[:, 1] <= z0 + model.depth + eps_z))
            if not np.all(inside):
                bad = points[~inside][0]
                raise OutOfDomainError(f"Точка {name} ({bad[0]:.2f}, {bad[1]:.2f}) вне физической области")

    def to_dict(self) -> dict:
        return {
            'sources': self.sources.tolist(),
            'receivers': self.receivers.tolist()
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'AcquisitionGeometry':
        return cls(sources=np.array(data['sources']), receivers=np.array(data['receivers']))


class Provenance(str, Enum):
    """Происхождение данных"""

    OBSERVED = 'observed'
    PREDICTED = 'predicted'


@dataclass(frozen=True)
class FrequencyDataset:
    """Комплексные данные d_omega размера (источники x приёмники)"""

    omega: float  # рад/с
    data: np.ndarray = field(repr=False)
    geometry: AcquisitionGeometry = field(repr=False)
    provenance: Provenance = Provenance.PREDICTED
    sizing: Optional[GridSizing] = None  # Правило сетки, на которой получены данные

    def __post_init__(self):
        data = np.array(self.data, dtype=np.complex128)
        expected = (self.geometry.n_sources, self.geometry.n_receivers)
        if data.shape != expected:
            raise ValidationError(f"Форма данных {data.shape} не совпадает с геометрией {expected}")
        if not np.all(np.isfinite(data)):
            raise ValidationError("Данные содержат нечисловые значения")
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)
        object.__setattr__(self, 'provenance', Provenance(self.provenance))

    @property
    def frequency_hz(self) -> float:
        return self.omega / (2.0 * math.pi)

    @property
    def frequency_mhz(self) -> int:
        """Частота в мГц для имён файлов"""
        return frequency_label(self.frequency_hz)

    def with_data(self, data: np.ndarray, provenance: Provenance) -> 'FrequencyDataset':
        return FrequencyDataset(omega=self.omega, data=data, geometry=self.geometry,
                                provenance=provenance, sizing=self.sizing)


def frequency_label(frequency_hz: float) -> int:
    """Частота в мГц (целое) для имён файлов и директорий"""
    return int(round(frequency_hz * 1000.0))


def preset_schedule(name: str) -> List[float]:
    """
    Готовые частотные расписания для моделей marmousi и bp2004

    Args:
        name (str): 'marmousi' или 'bp2004'

    Returns:
        List[float]: Частоты, Гц
    """
    if name == 'marmousi':
        return [float(f) for f in range(1, 16)]
    if name == 'bp2004':
        return [round(0.2 * k, 10) for k in range(1, 26)]
    raise ValidationError(f"Неизвестное расписание: {name}")
