# -*- coding: utf-8 -*-
"""
Оптимизаторы Барзилаи-Борвейна и L-BFGS для одной частоты
"""
import logging
import math
import time
from typing import Callable, Optional, Tuple

import numpy as np

from config.settings import ARMIJO_C, MAX_BACKTRACKS
from fwi.gradient import FrequencyObjective
from models.acquisition import FrequencyDataset
from models.hex_grid import GridSizing, HexGrid
from models.inversion import (
    BoundsConstraint,
    IterationRecord,
    OptimizerConfig,
    OptimizerHistory,
    StoppingCriteria,
)
from models.solver import SolverConfig
from models.velocity_model import ModelField, Quantity
from utils.errors import NonFiniteError, ValidationError
from utils.logger import ITERATIONS_LOGGER, emit_record

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], Tuple[float, np.ndarray]]


def bb_step(s: np.ndarray, y: np.ndarray, variant: str = 'BB1', fallback: float = 1.0,
            alpha_min: float = 1e-12, alpha_max: float = 1e12) -> float:
    """
    Шаг Барзилаи-Борвейна

    Args:
        s (np.ndarray): m_k - m_{k-1}
        y (np.ndarray): g_k - g_{k-1}
        variant (str): BB1 = s.s / s.y, BB2 = s.y / y.y
        fallback (float): Шаг при s.y <= 0 или нечисловом результате
        alpha_min (float): Нижняя граница шага
        alpha_max (float): Верхняя граница шага

    Returns:
        float: Длина шага
    """
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if s.shape != y.shape:
        raise ValidationError(f"Формы s {s.shape} и y {y.shape} не совпадают")
    if variant not in ('BB1', 'BB2'):
        raise ValidationError(f"Неизвестный вариант BB: {variant}")

    sy = float(np.dot(s.ravel(), y.ravel()))
    if not (math.isfinite(sy) and sy > 0):
        alpha = fallback
    elif variant == 'BB1':
        alpha = float(np.dot(s.ravel(), s.ravel())) / sy
    else:
        alpha = sy / float(np.dot(y.ravel(), y.ravel()))
    if not math.isfinite(alpha):
        alpha = fallback
    return float(min(max(alpha, alpha_min), alpha_max))


def lbfgs_direction(history: OptimizerHistory, g: np.ndarray) -> np.ndarray:
    """
    Направление L-BFGS двухпетлевой рекурсией

    Args:
        history (OptimizerHistory): Пары (s, y), прошедшие проверку кривизны
        g (np.ndarray): Текущий градиент

    Returns:
        np.ndarray: Направление d = -H_k g
    """
    q = np.array(g, dtype=np.float64)
    if not history.pairs:
        return -q

    pairs = list(history.pairs)
    rhos = [1.0 / float(np.dot(s, y)) for s, y in pairs]
    alphas = []
    for (s, y), rho in zip(reversed(pairs), reversed(rhos)):
        a = rho * float(np.dot(s, q))
        alphas.append(a)
        q -= a * y

    s_last, y_last = pairs[-1]
    gamma = float(np.dot(s_last, y_last)) / float(np.dot(y_last, y_last))
    r = gamma * q
    for (s, y), rho, a in zip(pairs, rhos, reversed(alphas)):
        b = rho * float(np.dot(y, r))
        r += (a - b) * s
    return -r


def _check_finite(misfit: float, gradient: np.ndarray, k: int, alpha: Optional[float]):
    if not math.isfinite(misfit) or not np.all(np.isfinite(gradient)):
        raise NonFiniteError(
            f"Нечисловая невязка или градиент на итерации {k}",
            state={'k': k, 'misfit': misfit, 'grad_norm': float(np.linalg.norm(gradient)), 'alpha': alpha}
        )


def _exit_reason(k: int, misfit: float, grad_norm: float, tol_g: float, tol_J: float,
                 maxiter: int) -> Optional[str]:
    if misfit <= tol_J:
        return 'misfit'
    if grad_norm <= tol_g:
        return 'gradient'
    if k >= maxiter:
        return 'maxiter'
    return None


def minimize(objective: Objective, x0: np.ndarray, config: OptimizerConfig, stop: StoppingCriteria,
             bounds: Optional[BoundsConstraint] = None, frequency_hz: Optional[float] = None,
             value: Optional[Callable[[np.ndarray], float]] = None) -> Tuple[np.ndarray, OptimizerHistory]:
    """
    Итерации m_{k+1} = m_k - alpha_k g_k (BB) или m_k + alpha_k d_k (L-BFGS)

    Цикл идёт, пока k < maxiter, ||g|| > tol_g и J > tol_J.
    Каждая итерация проецируется на границы. Если поиск шага L-BFGS не нашёл
    точку с условием Армихо, цикл останавливается в текущей точке (причина linesearch).

    Args:
        objective (Objective): x -> (J, градиент)
        x0 (np.ndarray): Начальная точка
        config (OptimizerConfig): Метод и его параметры
        stop (StoppingCriteria): Условия выхода
        bounds (Optional[BoundsConstraint]): Границы значений
        frequency_hz (Optional[float]): Частота для журнала итераций
        value (Optional[Callable]): x -> J без градиента для поиска шага (по умолчанию objective)

    Returns:
        Tuple[np.ndarray, OptimizerHistory]: Последняя итерация и история
    """
    history = OptimizerHistory(memory=config.memory, frequency_hz=frequency_hz)
    x = np.array(x0, dtype=np.float64).ravel()
    if stop.maxiter == 0:
        history.exit_reason = 'maxiter'
        return x, history

    project = bounds.project if bounds is not None else (lambda v: v)
    value = value or (lambda v: objective(v)[0])
    x = project(x)
    misfit_value, g = objective(x)
    g = np.asarray(g, dtype=np.float64).ravel()
    _check_finite(misfit_value, g, 0, None)
    grad_norm = float(np.linalg.norm(g))
    history.initial_misfit = misfit_value
    history.initial_grad_norm = grad_norm
    history.best_misfit, history.best_iteration = misfit_value, 0
    tol_g, tol_J = stop.thresholds(misfit_value, grad_norm)

    # Шаги и их границы в единицах ||m|| / ||g0||
    scale = float(np.linalg.norm(x)) / grad_norm if grad_norm > 0 else 1.0
    alpha_min = config.alpha_min * scale
    alpha_max = config.alpha_max * scale
    alpha = config.tau * scale
    last_pair: Optional[Tuple[np.ndarray, np.ndarray]] = None

    k = 0
    while True:
        reason = _exit_reason(k, misfit_value, grad_norm, tol_g, tol_J, stop.maxiter)
        if reason is not None:
            break
        started = time.perf_counter()

        if config.method == 'bb':
            if last_pair is not None:
                alpha = bb_step(last_pair[0], last_pair[1], config.variant, fallback=alpha,
                                alpha_min=alpha_min, alpha_max=alpha_max)
            x_new = project(x - alpha * g)
            misfit_new, g_new = objective(x_new)
        else:
            direction = lbfgs_direction(history, g)
            if float(np.dot(g, direction)) >= 0:
                history.clear_pairs()
                direction = -g
            alpha = 1.0 if history.pairs else config.tau * scale
            for _ in range(MAX_BACKTRACKS):
                x_new = project(x + alpha * direction)
                misfit_new = value(x_new)
                if (math.isfinite(misfit_new)
                        and misfit_new <= misfit_value + ARMIJO_C * float(np.dot(g, x_new - x))):
                    break
                alpha *= 0.5
            else:
                logger.warning(f"⚠️ Поиск шага не выполнил условие Армихо на итерации {k + 1}, "
                               f"остаётся текущая точка")
                reason = 'linesearch'
                break
            misfit_new, g_new = objective(x_new)

        g_new = np.asarray(g_new, dtype=np.float64).ravel()
        _check_finite(misfit_new, g_new, k + 1, alpha)
        s = x_new - x
        y = g_new - g
        last_pair = (s, y)
        history.push_pair(s, y)

        x, g, misfit_value = x_new, g_new, misfit_new
        grad_norm = float(np.linalg.norm(g))
        k += 1
        record = IterationRecord(k=k, misfit=misfit_value, grad_norm=grad_norm, alpha=float(alpha),
                                 iter_seconds=time.perf_counter() - started)
        history.record(record)
        emit_record(ITERATIONS_LOGGER, record.to_dict(frequency_hz))
        logger.debug(f"k={k} J={misfit_value:.6e} |g|={grad_norm:.3e} alpha={alpha:.3e}")

    history.final_misfit = misfit_value
    history.final_grad_norm = grad_norm
    history.exit_reason = reason
    logger.info(f"✅ Оптимизация завершена: {k} итераций, J={misfit_value:.4e}, причина: {reason}")
    return x, history


def minimize_single_frequency(m_init: ModelField, omega: float, observed: FrequencyDataset, grid: HexGrid,
                              optimizer_config: OptimizerConfig, stop: StoppingCriteria,
                              bounds: Optional[BoundsConstraint] = None,
                              solver_config: Optional[SolverConfig] = None,
                              collar: Optional[ModelField] = None,
                              sizing: Optional[GridSizing] = None) -> Tuple[ModelField, OptimizerHistory]:
    """
    Инверсия данных одной частоты

    Args:
        m_init (ModelField): Начальный квадрат медленности
        omega (float): Угловая частота
        observed (FrequencyDataset): Наблюдённые данные
        grid (HexGrid): Сетка решателя
        optimizer_config (OptimizerConfig): Оптимизатор
        stop (StoppingCriteria): Условия выхода
        bounds (Optional[BoundsConstraint]): Границы квадрата медленности
        solver_config (Optional[SolverConfig]): Настройки решателя
        collar (Optional[ModelField]): Замороженная опорная модель для PML (None - PML следует за m)
        sizing (Optional[GridSizing]): Правило сетки

    Returns:
        Tuple[ModelField, OptimizerHistory]: Последняя итерация и история
    """
    if m_init.quantity != Quantity.SLOWNESS_SQUARED:
        raise ValidationError(f"Ожидался квадрат медленности, получено {m_init.quantity.value}")
    objective = FrequencyObjective(m_init.model, omega, observed, grid, solver_config,
                                   collar=collar, sizing=sizing)
    frequency_hz = omega / (2.0 * math.pi)
    logger.info(f"🔄 Инверсия на {frequency_hz:g} Гц: метод {optimizer_config.method}, "
                f"{grid.n_inner} внутренних узлов")
    x, history = minimize(objective, m_init.flat, optimizer_config, stop, bounds, frequency_hz,
                          value=objective.value)
    if stop.maxiter == 0:
        return m_init, history
    values = x.reshape(m_init.model.nz, m_init.model.nx)
    return ModelField(m_init.model, values, Quantity.SLOWNESS_SQUARED), history
