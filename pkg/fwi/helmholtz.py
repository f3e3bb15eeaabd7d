# -*- coding: utf-8 -*-
"""
Оператор Гельмгольца с PML на гексагональной сетке (шаблон GRBF-FD 7 точек)
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla

from config.settings import DIRECT_SOLVER_NODE_LIMIT, MAX_SHAPE_RATIO
from fwi.modelgrid import NEIGHBOR_COS2, NEIGHBOR_SIN2, hex_interpolation_matrix
from models.hex_grid import HexGrid
from models.solver import PmlConfig, ShapeParameter, SolverStats, StencilWeights
from utils.errors import (
    FactorizationError,
    InvalidShapeParameterError,
    NonFiniteError,
    NumericalError,
    ValidationError,
)
from utils.logger import SOLVER_STATS_LOGGER, emit_record

logger = logging.getLogger(__name__)

# Порог обусловленности локальной системы RBF
LOCAL_SYSTEM_COND_LIMIT = 1e12
# Порог отношения диагональных элементов U для вырожденности
PIVOT_RATIO_LIMIT = 1e-14


def _gaussian_neighbor_weight(eps_h: np.ndarray, h: float) -> np.ndarray:
    """
    Вес соседа для правильного шестиугольника с гауссовым ядром exp(-eps^2 r^2)
    и дополнением константой. Запись через a = 1 - exp(-t) без вычитания близких чисел.
    """
    t = eps_h ** 2
    a = -np.expm1(-t)
    with np.errstate(divide='ignore', invalid='ignore'):
        w = 4.0 * t * (a + t * (1.0 - a)) / (h ** 2 * a ** 2 * (12.0 - 6.0 * a + a ** 2))
    return np.where(t == 0.0, 2.0 / (3.0 * h ** 2), w)


def _gaussian_neighbor_weight_slope(t: np.ndarray, h: float) -> np.ndarray:
    """Производная веса соседа по t = (eps h)^2, t > 0"""
    a = -np.expm1(-t)
    b = np.exp(-t)  # da/dt
    numerator = 4.0 * t * (a + t * b)
    denominator = h ** 2 * a ** 2 * (12.0 - 6.0 * a + a ** 2)
    d_numerator = 4.0 * (a + t * b) + 4.0 * t * b * (2.0 - t)
    d_denominator = h ** 2 * a * b * (24.0 - 18.0 * a + 4.0 * a ** 2)
    return (d_numerator * denominator - numerator * d_denominator) / denominator ** 2


def rbf_fd_weights(eps: float, h: float, max_ratio: float = MAX_SHAPE_RATIO) -> StencilWeights:
    """
    Веса 7-точечного RBF-FD шаблона Лапласиана в центре правильного шестиугольника

    Args:
        eps (float): Параметр формы, 1/м (0 - классический предел)
        h (float): Шаг решётки, м
        max_ratio (float): Максимально допустимое eps*h

    Returns:
        StencilWeights: Вес центра и общий вес соседей
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValidationError(f"Шаг решётки должен быть положительным, получено {h}")
    if not (eps >= 0 and math.isfinite(eps)):
        raise InvalidShapeParameterError(f"Параметр формы должен быть неотрицательным, получено {eps}")
    if eps * h > max_ratio:
        raise InvalidShapeParameterError(
            f"eps*h = {eps * h:.3g} больше допустимого {max_ratio}: локальная система плохо обусловлена"
        )
    if eps == 0:
        return StencilWeights(center=-4.0 / h ** 2, neighbor=2.0 / (3.0 * h ** 2), epsilon=0.0, h=h)

    neighbor = float(_gaussian_neighbor_weight(np.array(eps * h), h))
    if not math.isfinite(neighbor):
        raise InvalidShapeParameterError(f"Не удалось вычислить веса для eps={eps}, h={h}")
    return StencilWeights(center=-6.0 * neighbor, neighbor=neighbor, epsilon=float(eps), h=h)


def local_rbf_weights(points: np.ndarray, center: np.ndarray, eps: float) -> np.ndarray:
    """
    Веса Лапласиана из общей локальной системы гауссовых RBF с дополнением константой

    Args:
        points (np.ndarray): Узлы шаблона (n, 2)
        center (np.ndarray): Точка вычисления (2,)
        eps (float): Параметр формы (> 0)

    Returns:
        np.ndarray: Веса (n,)
    """
    if not eps > 0:
        raise InvalidShapeParameterError("Для общей системы требуется eps > 0")
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[0]
    diff = points[:, None, :] - points[None, :, :]
    r2 = np.sum(diff ** 2, axis=-1)
    r2_center = np.sum((points - np.asarray(center)) ** 2, axis=-1)

    system = np.zeros((n + 1, n + 1))
    system[:n, :n] = np.exp(-eps ** 2 * r2)
    system[:n, n] = 1.0
    system[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[:n] = (4.0 * eps ** 4 * r2_center - 4.0 * eps ** 2) * np.exp(-eps ** 2 * r2_center)

    if np.linalg.cond(system) > LOCAL_SYSTEM_COND_LIMIT:
        raise InvalidShapeParameterError(f"Локальная система плохо обусловлена при eps={eps}")
    return np.linalg.solve(system, rhs)[:n]


def node_weights(shape_parameter: ShapeParameter, h: float, wavenumber: np.ndarray,
                 max_ratio: float = MAX_SHAPE_RATIO) -> np.ndarray:
    """
    Вес соседа в каждом узле (параметр формы - число или функция k)

    Args:
        shape_parameter (ShapeParameter): eps или функция k -> eps
        h (float): Шаг решётки
        wavenumber (np.ndarray): Локальное волновое число k = omega * sqrt(m)
        max_ratio (float): Максимум eps*h

    Returns:
        np.ndarray: Веса соседей по узлам
    """
    if not callable(shape_parameter):
        weight = rbf_fd_weights(float(shape_parameter), h, max_ratio).neighbor
        return np.full(wavenumber.shape, weight)

    eps = np.broadcast_to(np.asarray(shape_parameter(wavenumber), dtype=np.float64), wavenumber.shape)
    if not np.all(np.isfinite(eps)) or np.any(eps < 0):
        raise InvalidShapeParameterError("Функция параметра формы вернула недопустимые значения")
    if np.any(eps * h > max_ratio):
        raise InvalidShapeParameterError(
            f"eps*h = {float(np.max(eps * h)):.3g} больше допустимого {max_ratio}"
        )
    return _gaussian_neighbor_weight(eps * h, h)


def node_weight_sensitivity(shape_per_wavenumber: float, h: float, omega: float,
                            m_nodes: np.ndarray) -> np.ndarray:
    """
    Производная веса соседа по квадрату медленности узла при eps = beta * omega * sqrt(m)

    Args:
        shape_per_wavenumber (float): beta
        h (float): Шаг решётки
        omega (float): Угловая частота
        m_nodes (np.ndarray): Квадрат медленности, по которому считается eps

    Returns:
        np.ndarray: dw/dm по узлам
    """
    scale = (shape_per_wavenumber * omega * h) ** 2
    if scale == 0:
        return np.zeros_like(np.asarray(m_nodes, dtype=np.float64))
    t = scale * np.asarray(m_nodes, dtype=np.float64)
    return scale * _gaussian_neighbor_weight_slope(t, h)


def pml_stretch(position: np.ndarray, grid: HexGrid, cfg: PmlConfig) -> Tuple[np.ndarray, np.ndarray]:
    """
    Комплексное растяжение координат s = 1 + i sigma(d) / omega

    Args:
        position (np.ndarray): Точки (n, 2) или одна точка (2,)
        grid (HexGrid): Сетка решателя
        cfg (PmlConfig): Профиль слоя

    Returns:
        Tuple[np.ndarray, np.ndarray]: (s_x, s_z)
    """
    points = np.asarray(position, dtype=np.float64)
    single = points.ndim == 1
    points = points.reshape(-1, 2)
    if cfg.omega == 0:
        ones = np.ones(points.shape[0], dtype=np.complex128)
        return (ones[0], ones[0]) if single else (ones, ones.copy())

    x0, z0, width, depth = grid.domain
    delta = cfg.thickness

    def stretch(coord, low, high):
        d = np.maximum(np.maximum(low - coord, coord - high), 0.0)
        d = np.minimum(d, delta)
        sigma = cfg.sigma0 * (d / delta) ** cfg.exponent
        return 1.0 + 1j * sigma / cfg.omega

    s_x = stretch(points[:, 0], x0, x0 + width)
    s_z = stretch(points[:, 1], z0, z0 + depth)
    if single:
        return s_x[0], s_z[0]
    return s_x, s_z


@dataclass(frozen=True)
class HelmholtzOperator:
    """Разреженная матрица H = -L~ - omega^2 m s_x s_z"""

    matrix: sps.csr_matrix = field(repr=False)
    omega: float
    grid: HexGrid = field(repr=False)
    m_nodes: np.ndarray = field(repr=False)
    stretch: np.ndarray = field(repr=False)  # s_x * s_z по узлам
    edge_factor: Optional[np.ndarray] = field(default=None, repr=False)  # (6, n_inner): 0.5 kappa по рёбрам

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz


def assemble(grid: HexGrid, m_nodes: np.ndarray, omega: float, cfg: PmlConfig,
             eps: ShapeParameter = 0.0, reference_nodes: Optional[np.ndarray] = None,
             max_ratio: float = MAX_SHAPE_RATIO) -> HelmholtzOperator:
    """
    Собрать оператор Гельмгольца с PML

    Внутри физической области строка - шаблон RBF-FD; в слое коэффициент ребра
    kappa = (1.5a - 0.5b) cos^2 + (1.5b - 0.5a) sin^2 с a = s_z/s_x, b = s_x/s_z,
    усреднёнными по ребру. Внешнее кольцо узлов - условие Дирихле.

    Args:
        grid (HexGrid): Сетка решателя
        m_nodes (np.ndarray): Квадрат медленности в узлах
        omega (float): Угловая частота, рад/с
        cfg (PmlConfig): Профиль PML
        eps (ShapeParameter): Параметр формы или функция локального k
        reference_nodes (Optional[np.ndarray]): Медленность для вычисления eps(k)
        max_ratio (float): Максимум eps*h

    Returns:
        HelmholtzOperator: Собранный оператор
    """
    started = time.perf_counter()
    m_nodes = np.asarray(m_nodes, dtype=np.float64)
    if m_nodes.shape != (grid.n_nodes,):
        raise ValidationError(f"Ожидалось {grid.n_nodes} значений m, получено {m_nodes.shape}")
    if not np.all(np.isfinite(m_nodes)) or np.any(m_nodes <= 0):
        raise ValidationError("Квадрат медленности должен быть положительным во всех узлах")
    if omega < 0:
        raise ValidationError(f"Частота не может быть отрицательной, получено {omega}")

    reference = m_nodes if reference_nodes is None else np.asarray(reference_nodes, dtype=np.float64)
    weights = node_weights(eps, grid.h, omega * np.sqrt(reference), max_ratio)

    s_x, s_z = pml_stretch(grid.nodes, grid, cfg)
    stretch = s_x * s_z
    inner = grid.inner_mask
    n = grid.n_nodes

    diagonal = np.zeros(n, dtype=np.complex128)
    rows, cols, values = [], [], []
    edge_factor = np.empty((6, int(inner.sum())), dtype=np.complex128)
    src = np.flatnonzero(inner)
    for direction in range(6):
        dst = grid.neighbors[src, direction]
        sx_edge = 0.5 * (s_x[src] + s_x[dst])
        sz_edge = 0.5 * (s_z[src] + s_z[dst])
        a = sz_edge / sx_edge
        b = sx_edge / sz_edge
        kappa = ((1.5 * a - 0.5 * b) * NEIGHBOR_COS2[direction]
                 + (1.5 * b - 0.5 * a) * NEIGHBOR_SIN2[direction])
        edge_factor[direction] = 0.5 * kappa
        coeff = (weights[src] + weights[dst]) * edge_factor[direction]
        diagonal[src] += coeff
        coupled = inner[dst]
        rows.append(src[coupled])
        cols.append(dst[coupled])
        values.append(-coeff[coupled])

    diagonal[inner] -= omega ** 2 * m_nodes[inner] * stretch[inner]
    diagonal[~inner] = 1.0
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    values.append(diagonal)

    matrix = sps.csr_matrix(
        (np.concatenate(values), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n), dtype=np.complex128
    )
    operator = HelmholtzOperator(matrix=matrix, omega=float(omega), grid=grid,
                                 m_nodes=m_nodes, stretch=stretch, edge_factor=edge_factor)
    _log_stats(SolverStats(event='assemble', nodes=grid.n_inner, nnz=matrix.nnz,
                           seconds=time.perf_counter() - started,
                           frequency_hz=omega / (2.0 * math.pi)))
    return operator


def point_source_rhs(grid: HexGrid, x_s) -> np.ndarray:
    """
    Дискретная дельта-функция: барицентрические веса / площадь ячейки

    Args:
        grid (HexGrid): Сетка решателя
        x_s: Положение источника (x, z)

    Returns:
        np.ndarray: Комплексная правая часть длины N
    """
    return source_matrix(grid, np.asarray(x_s, dtype=np.float64).reshape(1, 2))[:, 0]


def source_matrix(grid: HexGrid, sources: np.ndarray) -> np.ndarray:
    """
    Правые части для набора источников, по столбцу на источник

    Args:
        grid (HexGrid): Сетка решателя
        sources (np.ndarray): Источники (ns, 2)

    Returns:
        np.ndarray: Матрица (N, ns)
    """
    weights = hex_interpolation_matrix(grid, sources)
    return (weights.T.toarray() / grid.cell_area).astype(np.complex128)


class Factorization:
    """Факторизация оператора для многократных решений H x = b и H^H x = b"""

    def __init__(self, operator: HelmholtzOperator, direct_node_limit: int = DIRECT_SOLVER_NODE_LIMIT,
                 iterative_tol: float = 1e-10):
        """
        Факторизовать оператор

        Args:
            operator (HelmholtzOperator): Собранный оператор
            direct_node_limit (int): Выше этого числа узлов - ILU + GMRES
            iterative_tol (float): Относительная невязка итерационного решения
        """
        self.operator = operator
        self.n = operator.n
        self.kind = 'direct' if operator.n <= direct_node_limit else 'iterative'
        self.iterative_tol = iterative_tol
        self._adjoint_ilu = None

        started = time.perf_counter()
        matrix = operator.matrix.tocsc()
        try:
            if self.kind == 'direct':
                self._lu = spla.splu(matrix)
                pivots = np.abs(self._lu.U.diagonal())
                if pivots.min() <= PIVOT_RATIO_LIMIT * pivots.max():
                    raise FactorizationError("Оператор численно вырожден")
                self.memory_bytes = int((self._lu.L.nnz + self._lu.U.nnz) * 16)
            else:
                self._lu = spla.spilu(matrix, drop_tol=1e-6, fill_factor=20)
                self.memory_bytes = int((self._lu.L.nnz + self._lu.U.nnz) * 16)
        except RuntimeError as e:
            if isinstance(e, FactorizationError):
                raise
            raise FactorizationError(f"Ошибка факторизации: {e}") from e
        self.factor_seconds = time.perf_counter() - started

        _log_stats(SolverStats(event='factorize', nodes=operator.grid.n_inner, nnz=operator.nnz,
                               kind=self.kind, seconds=self.factor_seconds,
                               factor_memory_bytes=self.memory_bytes,
                               frequency_hz=operator.omega / (2.0 * math.pi)))

    def solve(self, rhs: np.ndarray, adjoint: bool = False) -> np.ndarray:
        """
        Решить H x = b (или H^H x = b)

        Args:
            rhs (np.ndarray): Правая часть длины N
            adjoint (bool): Решать сопряжённо-транспонированную систему

        Returns:
            np.ndarray: Решение
        """
        rhs = np.asarray(rhs, dtype=np.complex128)
        if rhs.shape != (self.n,):
            raise ValidationError(f"Длина правой части {rhs.shape} не равна числу узлов {self.n}")
        if self.kind == 'direct':
            return self._lu.solve(rhs, trans='H' if adjoint else 'N')
        return self._solve_iterative(rhs, adjoint)

    def _solve_iterative(self, rhs: np.ndarray, adjoint: bool) -> np.ndarray:
        """GMRES с ILU-предобусловливателем"""
        matrix = self.operator.matrix
        if adjoint:
            matrix = matrix.conj().T.tocsr()
            if self._adjoint_ilu is None:
                self._adjoint_ilu = spla.spilu(matrix.tocsc(), drop_tol=1e-6, fill_factor=20)
            ilu = self._adjoint_ilu
        else:
            ilu = self._lu
        preconditioner = spla.LinearOperator(matrix.shape, matvec=ilu.solve, dtype=np.complex128)
        solution, info = spla.gmres(matrix, rhs, M=preconditioner, rtol=self.iterative_tol,
                                    restart=200, maxiter=50)
        if info != 0:
            raise NumericalError(f"GMRES не сошёлся (info={info})")
        return solution


def factorize(operator: HelmholtzOperator, direct_node_limit: int = DIRECT_SOLVER_NODE_LIMIT,
              iterative_tol: float = 1e-10) -> Factorization:
    """
    Факторизовать оператор один раз для всех последующих решений

    Args:
        operator (HelmholtzOperator): Собранный оператор
        direct_node_limit (int): Порог перехода на итерационный решатель
        iterative_tol (float): Допуск итерационного решателя

    Returns:
        Factorization: Объект факторизации
    """
    return Factorization(operator, direct_node_limit, iterative_tol)


def solve_batch(fac: Factorization, rhs: np.ndarray, adjoint: bool = False, workers: int = 1,
                out: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Решить систему для набора правых частей (столбцы)

    Каждый столбец решается отдельно, поэтому результат не зависит от размера
    и порядка пакета.

    Args:
        fac (Factorization): Факторизация
        rhs (np.ndarray): Правые части (N,) или (N, k)
        adjoint (bool): Сопряжённая система
        workers (int): Число потоков
        out (Optional[np.ndarray]): Готовый буфер (N, k) для решений

    Returns:
        np.ndarray: Волновые поля той же формы
    """
    rhs = np.asarray(rhs, dtype=np.complex128)
    single = rhs.ndim == 1
    columns = rhs.reshape(fac.n, -1)
    result = np.empty_like(columns) if out is None else out.reshape(fac.n, -1)
    started = time.perf_counter()

    def solve_column(index: int):
        result[:, index] = fac.solve(np.ascontiguousarray(columns[:, index]), adjoint=adjoint)

    if workers > 1 and columns.shape[1] > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(solve_column, range(columns.shape[1])))
    else:
        for index in range(columns.shape[1]):
            solve_column(index)

    if not np.all(np.isfinite(result)):
        raise NonFiniteError("Решение содержит нечисловые значения",
                             state={'n_rhs': columns.shape[1], 'adjoint': adjoint})

    elapsed = time.perf_counter() - started
    _log_stats(SolverStats(event='solve', nodes=fac.operator.grid.n_inner, nnz=fac.operator.nnz,
                           kind=fac.kind, seconds=elapsed, n_rhs=columns.shape[1],
                           solve_seconds_per_rhs=elapsed / max(columns.shape[1], 1),
                           frequency_hz=fac.operator.omega / (2.0 * math.pi),
                           extra={'adjoint': adjoint}))
    return result[:, 0] if single else result


def _log_stats(stats: SolverStats):
    emit_record(SOLVER_STATS_LOGGER, stats.to_dict())
