# -*- coding: utf-8 -*-
"""
Функционал невязки и его градиент методом сопряжённых состояний
"""
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from fwi.forward import ForwardState, forward_map
from fwi.helmholtz import solve_batch
from models.acquisition import AcquisitionGeometry, FrequencyDataset
from models.hex_grid import GridSizing, HexGrid
from models.solver import SolverConfig
from models.velocity_model import ModelField, Quantity, VelocityModel
from utils.errors import NonFiniteError, ValidationError

logger = logging.getLogger(__name__)

# Шаги по умолчанию для проверки градиента конечными разностями
DEFAULT_FD_STEPS = (1e-3, 1e-4, 1e-5, 1e-6, 1e-7)


@dataclass(frozen=True)
class MisfitReport:
    """J = 1/2 sum |d - F|^2 и невязка для сопряжённых источников"""

    value: float
    residual: np.ndarray = field(repr=False)  # (n_sources, n_receivers)
    omega: float
    grad_norm: Optional[float] = None


def misfit(observed: FrequencyDataset, predicted: FrequencyDataset) -> MisfitReport:
    """
    Невязка наименьших квадратов

    Args:
        observed (FrequencyDataset): Наблюдённые данные
        predicted (FrequencyDataset): Предсказанные данные

    Returns:
        MisfitReport: Значение и невязка d - F
    """
    if not math.isclose(observed.omega, predicted.omega, rel_tol=1e-12, abs_tol=0.0):
        raise ValidationError(f"Частоты не совпадают: {observed.omega} и {predicted.omega}")
    if observed.data.shape != predicted.data.shape:
        raise ValidationError(f"Размеры данных не совпадают: {observed.data.shape} и {predicted.data.shape}")
    residual = observed.data - predicted.data
    value = 0.5 * float(np.sum(residual.real ** 2 + residual.imag ** 2))
    return MisfitReport(value=value, residual=residual, omega=observed.omega)


def _weight_adjoint(state: ForwardState, adjoint: np.ndarray) -> np.ndarray:
    """Re(lambda^H dH/dw_j u) для веса соседа w_j каждого узла, сумма по источникам"""
    grid = state.grid
    inner = grid.inner_mask
    src = np.flatnonzero(inner)
    total = np.zeros(grid.n_nodes)
    for direction in range(6):
        dst = grid.neighbors[src, direction]
        coupled = inner[dst]
        factor = state.operator.edge_factor[direction]
        for index in range(state.wavefields.shape[1]):
            u = state.wavefields[:, index]
            difference = u[src] - np.where(coupled, u[dst], 0.0)
            term = np.real(factor * np.conj(adjoint[src, index]) * difference)
            np.add.at(total, src, term)
            np.add.at(total, dst, term)
    return total


def gradient_from_residual(state: ForwardState, residual: np.ndarray) -> np.ndarray:
    """
    Градиент в узлах для заданной невязки (линеен по невязке)

    Решает H^H lambda = R^T r для каждого источника и накапливает
    g = -omega^2 Re(s_x s_z u conj(lambda)) по узлам, чей m зависит от модели:
    по физической области при замороженной опорной модели, иначе по всем неизвестным.
    При eps = beta * k от m добавляется вклад весов шаблона.

    Args:
        state (ForwardState): Результат прямого решения
        residual (np.ndarray): Невязка (n_sources, n_receivers)

    Returns:
        np.ndarray: Градиент во всех узлах сетки
    """
    residual = np.asarray(residual, dtype=np.complex128)
    n_sources = state.wavefields.shape[1]
    if residual.shape != (n_sources, state.receiver_weights.shape[0]):
        raise ValidationError(
            f"Невязка {residual.shape} не соответствует прямому решению "
            f"({n_sources}, {state.receiver_weights.shape[0]})"
        )
    adjoint_rhs = np.asarray(state.receiver_weights.T @ residual.T)
    adjoint = solve_batch(state.factorization, adjoint_rhs, adjoint=True, workers=state.workers)

    grid = state.grid
    g_node = np.zeros(grid.n_nodes)
    free = grid.interior_mask if state.collar_frozen else grid.inner_mask
    # Суммирование по источникам в фиксированном порядке
    for index in range(n_sources):
        g_node[free] += np.real(state.operator.stretch[free]
                                * state.wavefields[free, index]
                                * np.conj(adjoint[free, index]))
    g_node *= -state.omega ** 2
    if state.weight_sensitivity is not None:
        g_node += state.weight_sensitivity * _weight_adjoint(state, adjoint)
    if not np.all(np.isfinite(g_node)):
        raise NonFiniteError("Градиент содержит нечисловые значения",
                             state={'frequency_hz': state.omega / (2.0 * math.pi)})
    return g_node


def adjoint_gradient(m: ModelField, omega: float, observed: FrequencyDataset, grid: HexGrid,
                     geom: AcquisitionGeometry, state: ForwardState,
                     predicted: Optional[FrequencyDataset] = None) -> ModelField:
    """
    Градиент J по квадрату медленности на сетке модели

    Args:
        m (ModelField): Текущая модель
        omega (float): Угловая частота
        observed (FrequencyDataset): Наблюдённые данные
        grid (HexGrid): Сетка решателя
        geom (AcquisitionGeometry): Геометрия наблюдений
        state (ForwardState): Волновые поля и факторизация прямого решения
        predicted (Optional[FrequencyDataset]): Предсказанные данные (иначе из state)

    Returns:
        ModelField: Градиент с тегом gradient
    """
    if state is None or state.wavefields is None:
        raise ValidationError("Нет волновых полей прямого решения")
    if state.grid is not grid or not math.isclose(state.omega, omega, rel_tol=1e-12):
        raise ValidationError("Факторизация получена для другой сетки или частоты")
    if state.wavefields.shape[1] != geom.n_sources:
        raise ValidationError("Число волновых полей не совпадает с числом источников")
    if predicted is None:
        data = np.asarray((state.receiver_weights @ state.wavefields).T)
        predicted = observed.with_data(data, observed.provenance)
    report = misfit(observed, predicted)
    g_node = gradient_from_residual(state, report.residual)
    values = state.project(g_node)
    return ModelField(m.model, values.reshape(m.model.nz, m.model.nx), Quantity.GRADIENT)


class FrequencyObjective:
    """Функционал J(m) и его градиент на одной частоте для плоского вектора m"""

    def __init__(self, model: VelocityModel, omega: float, observed: FrequencyDataset, grid: HexGrid,
                 solver_config: Optional[SolverConfig] = None, collar: Optional[ModelField] = None,
                 sizing: Optional[GridSizing] = None):
        """
        Инициализация функционала

        Args:
            model (VelocityModel): Геометрия сетки модели
            omega (float): Угловая частота
            observed (FrequencyDataset): Наблюдённые данные
            grid (HexGrid): Сетка решателя
            solver_config (Optional[SolverConfig]): Настройки решателя
            collar (Optional[ModelField]): Замороженная опорная модель для PML (None - PML следует за m)
            sizing (Optional[GridSizing]): Правило сетки
        """
        if not math.isclose(observed.omega, omega, rel_tol=1e-12):
            raise ValidationError(f"Данные получены на частоте {observed.omega}, а не {omega}")
        self.model = model
        self.omega = omega
        self.observed = observed
        self.grid = grid
        self.solver_config = solver_config or SolverConfig()
        self.collar = collar
        self.sizing = sizing
        self.evaluations = 0
        self.last_state: Optional[ForwardState] = None
        self._last_point: Optional[np.ndarray] = None
        self._last_report: Optional[MisfitReport] = None

    def _field(self, m_flat: np.ndarray) -> ModelField:
        return ModelField(self.model, np.asarray(m_flat).reshape(self.model.nz, self.model.nx),
                          Quantity.SLOWNESS_SQUARED)

    def misfit_report(self, m_flat: np.ndarray) -> Tuple[MisfitReport, ForwardState]:
        """Прямое решение и невязка в точке m (повторный запрос той же точки не решает заново)"""
        m_flat = np.asarray(m_flat, dtype=np.float64).ravel()
        if self._last_point is not None and np.array_equal(self._last_point, m_flat):
            return self._last_report, self.last_state
        predicted, state = forward_map(self._field(m_flat), self.omega, self.observed.geometry, self.grid,
                                       self.solver_config, collar=self.collar, sizing=self.sizing)
        self.evaluations += 1
        report = misfit(self.observed, predicted)
        self._last_point, self._last_report, self.last_state = m_flat.copy(), report, state
        return report, state

    def value(self, m_flat: np.ndarray) -> float:
        """Только J(m)"""
        return self.misfit_report(m_flat)[0].value

    def __call__(self, m_flat: np.ndarray) -> Tuple[float, np.ndarray]:
        """
        Вычислить J и градиент

        Args:
            m_flat (np.ndarray): Квадрат медленности одним вектором

        Returns:
            Tuple[float, np.ndarray]: (J, градиент того же размера)
        """
        report, state = self.misfit_report(m_flat)
        g_node = gradient_from_residual(state, report.residual)
        return report.value, state.project(g_node)


def directional_misfit_check(objective: Callable[[np.ndarray], Tuple[float, np.ndarray]], m: np.ndarray,
                             direction: np.ndarray, steps: Sequence[float] = DEFAULT_FD_STEPS,
                             value: Optional[Callable[[np.ndarray], float]] = None) -> pd.DataFrame:
    """
    Сравнить <grad J, p> с центральными разностями J вдоль p

    Абсолютный шаг равен step * ||m|| / ||p||.

    Args:
        objective (Callable): m -> (J, градиент)
        m (np.ndarray): Точка проверки
        direction (np.ndarray): Направление p той же формы
        steps (Sequence[float]): Относительные шаги
        value (Optional[Callable]): m -> J без градиента (по умолчанию objective)

    Returns:
        pd.DataFrame: step, abs_step, fd_derivative, adjoint_derivative, relative_error
    """
    m = np.asarray(m, dtype=np.float64).ravel()
    direction = np.asarray(direction, dtype=np.float64).ravel()
    if direction.shape != m.shape:
        raise ValidationError(f"Направление {direction.shape} не совпадает с моделью {m.shape}")
    value = value or (lambda x: objective(x)[0])

    started = time.perf_counter()
    _, gradient = objective(m)
    adjoint_derivative = float(np.dot(np.asarray(gradient).ravel(), direction))
    p_norm = float(np.linalg.norm(direction))
    scale = float(np.linalg.norm(m)) / p_norm if p_norm > 0 else 0.0

    rows = []
    for step in steps:
        abs_step = step * scale
        if p_norm == 0:
            fd_derivative = 0.0
        else:
            fd_derivative = (value(m + abs_step * direction) - value(m - abs_step * direction)) / (2.0 * abs_step)
        difference = abs(fd_derivative - adjoint_derivative)
        denominator = max(abs(adjoint_derivative), abs(fd_derivative))
        rows.append({
            'step': step,
            'abs_step': abs_step,
            'fd_derivative': fd_derivative,
            'adjoint_derivative': adjoint_derivative,
            'relative_error': difference / denominator if denominator > 0 else 0.0
        })
    table = pd.DataFrame(rows, columns=['step', 'abs_step', 'fd_derivative', 'adjoint_derivative',
                                        'relative_error'])
    logger.info(f"🔍 Проверка градиента: минимальная относительная ошибка "
                f"{table['relative_error'].min():.2e} ({time.perf_counter() - started:.1f} с)")
    return table
