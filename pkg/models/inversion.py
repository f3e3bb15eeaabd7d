# -*- coding: utf-8 -*-
"""
Состояние инверсии: критерии остановки, ограничения, история оптимизатора
"""
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, Tuple

import numpy as np

from config.settings import (
    BB_TAU,
    DEFAULT_MAXITER,
    DEFAULT_TOL_G,
    DEFAULT_TOL_J,
    LBFGS_MEMORY,
)
from models.velocity_model import ModelField
from utils.errors import ValidationError


@dataclass(frozen=True)
class StoppingCriteria:
    """Условия выхода: k >= maxiter, ||g|| <= tol_g или J <= tol_J"""

    tol_g: float = DEFAULT_TOL_G
    tol_J: float = DEFAULT_TOL_J
    maxiter: int = DEFAULT_MAXITER
    relative: bool = False  # Допуски в долях ||g0|| и J0

    def __post_init__(self):
        if not (self.tol_g > 0 and self.tol_J > 0):
            raise ValidationError(f"Допуски должны быть положительны: tol_g={self.tol_g}, tol_J={self.tol_J}")
        if self.maxiter < 0:
            raise ValidationError(f"maxiter не может быть отрицательным, получено {self.maxiter}")

    def thresholds(self, misfit0: float, grad_norm0: float) -> Tuple[float, float]:
        """
        Абсолютные пороги (tol_g, tol_J) для этапа

        Args:
            misfit0 (float): Начальное значение J
            grad_norm0 (float): Начальная норма градиента

        Returns:
            Tuple[float, float]: Пороги по градиенту и невязке
        """
        if self.relative:
            return self.tol_g * grad_norm0, self.tol_J * misfit0
        return self.tol_g, self.tol_J

    def to_dict(self) -> dict:
        return {'tol_g': self.tol_g, 'tol_J': self.tol_J, 'maxiter': self.maxiter, 'relative': self.relative}

    @classmethod
    def from_dict(cls, data: dict) -> 'StoppingCriteria':
        return cls(
            tol_g=float(data.get('tol_g', DEFAULT_TOL_G)),
            tol_J=float(data.get('tol_J', DEFAULT_TOL_J)),
            maxiter=int(data.get('maxiter', DEFAULT_MAXITER)),
            relative=bool(data.get('relative', False))
        )


@dataclass(frozen=True)
class BoundsConstraint:
    """Границы квадрата медленности [m_min, m_max]"""

    m_min: float
    m_max: float

    def __post_init__(self):
        if not (0 < self.m_min < self.m_max):
            raise ValidationError(f"Требуется 0 < m_min < m_max, получено [{self.m_min}, {self.m_max}]")

    @classmethod
    def from_velocity(cls, c_min: float, c_max: float) -> 'BoundsConstraint':
        """
        Границы по априорным скоростям

        Args:
            c_min (float): Минимальная скорость, м/с
            c_max (float): Максимальная скорость, м/с

        Returns:
            BoundsConstraint: m_min = c_max^-2, m_max = c_min^-2
        """
        if not (0 < c_min < c_max):
            raise ValidationError(f"Требуется 0 < c_min < c_max, получено [{c_min}, {c_max}]")
        return cls(m_min=c_max ** -2, m_max=c_min ** -2)

    def project(self, m: np.ndarray) -> np.ndarray:
        return np.clip(m, self.m_min, self.m_max)

    def contains(self, m: np.ndarray) -> bool:
        return bool(np.all((m >= self.m_min) & (m <= self.m_max)))


@dataclass(frozen=True)
class OptimizerConfig:
    """Выбор и параметры оптимизатора"""

    method: str = 'bb'  # bb | lbfgs
    variant: str = 'BB1'  # BB1 | BB2
    memory: int = LBFGS_MEMORY
    tau: float = BB_TAU  # alpha0 = tau * ||m|| / ||g0||
    alpha_min: float = 1e-12  # Множители масштаба ||m|| / ||g0||
    alpha_max: float = 1e12

    def __post_init__(self):
        if self.method not in ('bb', 'lbfgs'):
            raise ValidationError(f"Неизвестный оптимизатор: {self.method}")
        if self.variant not in ('BB1', 'BB2'):
            raise ValidationError(f"Неизвестный вариант BB: {self.variant}")
        if self.memory < 1:
            raise ValidationError(f"Память L-BFGS должна быть >= 1, получено {self.memory}")
        if not (0 < self.alpha_min < self.alpha_max):
            raise ValidationError("Требуется 0 < alpha_min < alpha_max")

    def to_dict(self) -> dict:
        return {
            'method': self.method,
            'variant': self.variant,
            'memory': self.memory,
            'tau': self.tau,
            'alpha_min': self.alpha_min,
            'alpha_max': self.alpha_max
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'OptimizerConfig':
        return cls(**{key: data[key] for key in cls().to_dict() if key in data})


@dataclass(frozen=True)
class IterationRecord:
    """Запись одной итерации"""

    k: int
    misfit: float
    grad_norm: float
    alpha: float
    iter_seconds: float

    def to_dict(self, frequency_hz: Optional[float] = None) -> dict:
        return {
            'frequency_hz': frequency_hz,
            'k': self.k,
            'misfit': self.misfit,
            'grad_norm': self.grad_norm,
            'alpha': self.alpha,
            'iter_seconds': self.iter_seconds
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'IterationRecord':
        return cls(
            k=int(data['k']),
            misfit=float(data['misfit']),
            grad_norm=float(data['grad_norm']),
            alpha=float(data['alpha']),
            iter_seconds=float(data['iter_seconds'])
        )


@dataclass
class OptimizerHistory:
    """Пары (s, y) для квазиньютоновских шагов и записи итераций"""

    memory: int = LBFGS_MEMORY
    frequency_hz: Optional[float] = None
    pairs: Deque[Tuple[np.ndarray, np.ndarray]] = field(default_factory=deque, repr=False)
    records: List[IterationRecord] = field(default_factory=list)
    initial_misfit: Optional[float] = None
    initial_grad_norm: Optional[float] = None
    final_misfit: Optional[float] = None
    final_grad_norm: Optional[float] = None
    best_misfit: Optional[float] = None
    best_iteration: Optional[int] = None  # 0 - начальная точка
    exit_reason: Optional[str] = None  # maxiter | gradient | misfit | linesearch

    def __post_init__(self):
        self.pairs = deque(self.pairs, maxlen=self.memory)

    def push_pair(self, s: np.ndarray, y: np.ndarray) -> bool:
        """
        Сохранить пару, если выполнено условие кривизны s.y > 0

        Args:
            s (np.ndarray): Приращение модели
            y (np.ndarray): Приращение градиента

        Returns:
            bool: True если пара сохранена
        """
        sy = float(np.dot(s, y))
        if not np.isfinite(sy) or sy <= 0:
            return False
        self.pairs.append((np.array(s, dtype=np.float64), np.array(y, dtype=np.float64)))
        return True

    def clear_pairs(self):
        self.pairs.clear()

    def record(self, record: IterationRecord):
        self.records.append(record)
        if self.best_misfit is None or record.misfit < self.best_misfit:
            self.best_misfit = record.misfit
            self.best_iteration = record.k

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def mean_iter_seconds(self) -> float:
        if not self.records:
            return 0.0
        return float(np.mean([r.iter_seconds for r in self.records]))

    def to_dict(self) -> dict:
        """Сводка без пар (s, y)"""
        return {
            'frequency_hz': self.frequency_hz,
            'initial_misfit': self.initial_misfit,
            'initial_grad_norm': self.initial_grad_norm,
            'final_misfit': self.final_misfit,
            'final_grad_norm': self.final_grad_norm,
            'best_misfit': self.best_misfit,
            'best_iteration': self.best_iteration,
            'exit_reason': self.exit_reason,
            'iterations': self.iterations
        }


@dataclass(frozen=True)
class FrequencySchedule:
    """Строго возрастающие частоты с настройками этапов"""

    frequencies: Tuple[float, ...]
    ng: float = 8.5
    pml_wavelengths: float = 1.0
    stopping: StoppingCriteria = field(default_factory=StoppingCriteria)
    overrides: Dict[float, StoppingCriteria] = field(default_factory=dict)

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if not freqs:
            raise ValidationError("Расписание частот пусто")
        if any(not f > 0 for f in freqs):
            raise ValidationError("Все частоты должны быть положительны")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ValidationError(f"Частоты должны строго возрастать: {list(freqs)}")
        object.__setattr__(self, 'frequencies', freqs)

    def stopping_for(self, frequency: float) -> StoppingCriteria:
        return self.overrides.get(frequency, self.stopping)


@dataclass
class StageResult:
    """Итог одного этапа многомасштабной инверсии"""

    frequency_hz: float
    model: ModelField = field(repr=False)  # Квадрат медленности в конце этапа
    history: OptimizerHistory = field(repr=False)
    inner_nodes: int
    resumed: bool = False

    def summary_row(self) -> dict:
        """Строка сводной таблицы"""
        return {
            'frequency_hz': self.frequency_hz,
            'mean_iter_seconds': self.history.mean_iter_seconds,
            'iterations': self.history.iterations,
            'inner_nodes': self.inner_nodes,
            'final_grad_norm': self.history.final_grad_norm
        }


@dataclass
class MultiscaleResult:
    """Цепочка этапов: выход этапа p является входом этапа p+1"""

    stages: List[StageResult] = field(default_factory=list)

    @property
    def final_model(self) -> Optional[ModelField]:
        return self.stages[-1].model if self.stages else None

    def summary_rows(self) -> List[dict]:
        return [stage.summary_row() for stage in self.stages]
