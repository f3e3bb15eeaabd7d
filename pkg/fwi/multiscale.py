# -*- coding: utf-8 -*-
"""
Многомасштабная инверсия по одной частоте: результат частоты p - начальная модель для p+1
"""
import logging
import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from fwi.modelgrid import build_hex_grid_from_sizing
from fwi.optimize import minimize_single_frequency
from models.acquisition import AcquisitionGeometry, FrequencyDataset
from models.hex_grid import GridSizing
from models.inversion import (
    BoundsConstraint,
    FrequencySchedule,
    MultiscaleResult,
    OptimizerConfig,
    StageResult,
)
from models.solver import SolverConfig
from models.velocity_model import ModelField, Quantity, VelocityModel
from utils.checkpoint_manager import CheckpointManager
from utils.errors import ValidationError
from utils.model_io import dataset_for

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShallowPrior:
    """Известная верхняя часть модели: слой до глубины depth или готовые строки"""

    depth: Optional[float] = None  # м от поверхности
    velocity: Optional[float] = None  # м/с в слое
    rows: Optional[np.ndarray] = None  # (k, nx) скоростей верхних строк

    def __post_init__(self):
        if self.rows is None and (self.depth is None or self.velocity is None):
            raise ValidationError("Нужны либо строки, либо глубина и скорость слоя")
        if self.velocity is not None and not self.velocity > 0:
            raise ValidationError(f"Скорость слоя должна быть положительной, получено {self.velocity}")
        if self.depth is not None and self.depth < 0:
            raise ValidationError(f"Глубина слоя не может быть отрицательной, получено {self.depth}")

    def apply(self, c: np.ndarray, model: VelocityModel) -> np.ndarray:
        """
        Перезаписать верхние строки модели

        Args:
            c (np.ndarray): Скорости (nz, nx)
            model (VelocityModel): Геометрия модели

        Returns:
            np.ndarray: Новые скорости
        """
        c = np.array(c, dtype=np.float64)
        if self.rows is not None:
            rows = np.atleast_2d(np.asarray(self.rows, dtype=np.float64))
            if rows.shape[1] != model.nx or rows.shape[0] > model.nz:
                raise ValidationError(f"Строки {rows.shape} не помещаются в модель {model.nz}x{model.nx}")
            c[:rows.shape[0]] = rows
            return c
        # Строки с глубиной строго меньше depth
        depths = model.z - model.origin[1]
        c[depths < self.depth - 1e-9 * model.dz] = self.velocity
        return c


def initial_frequency(m0: ModelField, z_d: float) -> float:
    """
    Начальная частота omega_0 = 2 pi / (z_d sqrt(min m0))

    Args:
        m0 (ModelField): Начальный квадрат медленности
        z_d (float): Глубина целевой модели, м

    Returns:
        float: omega_0, рад/с
    """
    if not z_d > 0:
        raise ValidationError(f"Глубина должна быть положительной, получено {z_d}")
    if m0.quantity != Quantity.SLOWNESS_SQUARED:
        raise ValidationError(f"Ожидался квадрат медленности, получено {m0.quantity.value}")
    return 2.0 * math.pi / (z_d * math.sqrt(float(np.min(m0.values))))


def linear_initial_model(c_top: float, c_bottom: float, model: VelocityModel,
                         known_shallow: Optional[ShallowPrior] = None) -> VelocityModel:
    """
    Начальная модель, линейная по глубине

    Args:
        c_top (float): Скорость на поверхности, м/с
        c_bottom (float): Скорость на дне, м/с
        model (VelocityModel): Модель с нужной геометрией
        known_shallow (Optional[ShallowPrior]): Известный верхний слой

    Returns:
        VelocityModel: Начальная модель
    """
    if not (0 < c_top <= c_bottom):
        raise ValidationError(f"Требуется 0 < c_top <= c_bottom, получено {c_top}, {c_bottom}")
    fraction = np.arange(model.nz, dtype=np.float64) / (model.nz - 1)
    column = c_top + (c_bottom - c_top) * fraction
    c = np.repeat(column[:, None], model.nx, axis=1)
    if known_shallow is not None:
        c = known_shallow.apply(c, model)
    return model.with_velocity(c)


def quantize(m: ModelField) -> ModelField:
    """
    Привести модель к точности формата контрольной точки (float32 скорости)

    Args:
        m (ModelField): Квадрат медленности

    Returns:
        ModelField: Квадрат медленности из округлённых скоростей
    """
    c32 = (m.values ** -0.5).astype(np.float32)
    return m.model.with_velocity(c32.astype(np.float64)).slowness_squared()


def run_multiscale(m0: VelocityModel, schedule: FrequencySchedule, datasets: Dict[int, FrequencyDataset],
                   geom: AcquisitionGeometry, optimizer: Optional[OptimizerConfig] = None,
                   solver_config: Optional[SolverConfig] = None, bounds: Optional[BoundsConstraint] = None,
                   checkpoints: Optional[CheckpointManager] = None, resume: bool = False) -> MultiscaleResult:
    """
    Внешний цикл по частотам расписания

    Args:
        m0 (VelocityModel): Начальная модель
        schedule (FrequencySchedule): Частоты и настройки этапов
        datasets (Dict[int, FrequencyDataset]): Наблюдённые данные по частоте в мГц
        geom (AcquisitionGeometry): Геометрия наблюдений
        optimizer (Optional[OptimizerConfig]): Оптимизатор
        solver_config (Optional[SolverConfig]): Настройки решателя
        bounds (Optional[BoundsConstraint]): Границы квадрата медленности
        checkpoints (Optional[CheckpointManager]): Куда писать контрольные точки
        resume (bool): Продолжить с последней завершённой частоты

    Returns:
        MultiscaleResult: Модели и истории всех этапов
    """
    optimizer = optimizer or OptimizerConfig()
    solver_config = solver_config or SolverConfig()
    if resume and checkpoints is None:
        raise ValidationError("Для продолжения нужна директория контрольных точек")

    # Все данные проверяются до первого решения
    stage_data = [dataset_for(datasets, f) for f in schedule.frequencies]
    geom.validate_within(m0)

    current = quantize(m0.slowness_squared())
    omega0 = initial_frequency(current, m0.depth)
    f0 = omega0 / (2.0 * math.pi)
    if schedule.frequencies[0] > f0:
        logger.warning(f"⚠️ Расписание начинается с {schedule.frequencies[0]:g} Гц, "
                       f"выше рекомендуемой начальной частоты {f0:.3g} Гц")

    result = MultiscaleResult()
    resuming = resume
    for frequency, observed in zip(schedule.frequencies, stage_data):
        if resuming and checkpoints.has_stage(frequency):
            stage = checkpoints.load_stage(frequency)
            result.stages.append(stage)
            current = stage.model
            continue
        resuming = False

        sizing = observed.sizing or GridSizing.from_velocity(
            current.to_velocity_model().c, frequency, schedule.ng, schedule.pml_wavelengths
        )
        grid = build_hex_grid_from_sizing(m0, sizing, solver_config.node_budget)
        m_start = ModelField(current.model, bounds.project(current.values) if bounds else current.values,
                             Quantity.SLOWNESS_SQUARED)
        m_final, history = minimize_single_frequency(
            m_start, observed.omega, observed, grid, optimizer, schedule.stopping_for(frequency),
            bounds=bounds, solver_config=solver_config, sizing=sizing
        )
        current = quantize(m_final)
        stage = StageResult(frequency_hz=frequency, model=current, history=history, inner_nodes=grid.n_inner)
        result.stages.append(stage)
        if checkpoints is not None:
            checkpoints.save_stage(stage)
            checkpoints.write_summary(result.summary_rows())

    if checkpoints is not None:
        checkpoints.write_summary(result.summary_rows())
    logger.info(f"✅ Многомасштабная инверсия завершена: {len(result.stages)} этапов")
    return result
