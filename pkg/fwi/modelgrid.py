# -*- coding: utf-8 -*-
"""
Построение гексагональной сетки и перенос полей между сетками
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sps

from config.settings import NODE_BUDGET
from models.hex_grid import ROW_FACTOR, GridSizing, HexGrid
from models.velocity_model import ModelField, Quantity, VelocityModel
from utils.errors import InfeasibleResolutionError, OutOfDomainError, ValidationError

logger = logging.getLogger(__name__)

# Смещения соседей (di, dj) по направлениям 0, 60, ..., 300 градусов
EVEN_ROW_OFFSETS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1))
ODD_ROW_OFFSETS = ((1, 0), (1, 1), (0, 1), (-1, 0), (0, -1), (1, -1))

# cos^2 и sin^2 направлений, точные значения
NEIGHBOR_COS2 = np.array([1.0, 0.25, 0.25, 1.0, 0.25, 0.25])
NEIGHBOR_SIN2 = np.array([0.0, 0.75, 0.75, 0.0, 0.75, 0.75])


def estimate_lattice_shape(width: float, depth: float, h: float, pml_thickness: float) -> Tuple[int, int]:
    """
    Число строк и столбцов решётки, покрывающей область с PML

    Args:
        width (float): Ширина физической области, м
        depth (float): Глубина физической области, м
        h (float): Шаг решётки, м
        pml_thickness (float): Толщина PML, м

    Returns:
        Tuple[int, int]: (строки, столбцы)
    """
    n_cols = int(math.ceil((width + 2.0 * pml_thickness) / h)) + 1
    n_rows = int(math.ceil((depth + 2.0 * pml_thickness) / (h * ROW_FACTOR))) + 1
    return max(n_rows, 3), max(n_cols, 3)


def build_lattice(origin: Tuple[float, float], width: float, depth: float, h: float,
                  pml_thickness: float, node_budget: int = NODE_BUDGET) -> HexGrid:
    """
    Построить решётку над [x0 - delta, x0 + width + delta] x [z0 - delta, z0 + depth + delta]

    Args:
        origin (Tuple[float, float]): Начало физической области (x0, z0)
        width (float): Ширина, м
        depth (float): Глубина, м
        h (float): Шаг решётки, м
        pml_thickness (float): Толщина PML, м
        node_budget (int): Максимально допустимое число узлов

    Returns:
        HexGrid: Сетка с масками и таблицей соседей
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValidationError(f"Шаг решётки должен быть положительным, получено {h}")
    if not pml_thickness > 0:
        raise ValidationError(f"Толщина PML должна быть положительной, получено {pml_thickness}")
    if width < 0 or depth < 0:
        raise ValidationError("Размеры области не могут быть отрицательными")

    n_rows, n_cols = estimate_lattice_shape(width, depth, h, pml_thickness)
    if n_rows * n_cols > node_budget:
        raise InfeasibleResolutionError(
            f"Сетка {n_rows}x{n_cols} = {n_rows * n_cols} узлов превышает бюджет {node_budget}"
        )

    x0, z0 = float(origin[0]), float(origin[1])
    x_min = x0 - pml_thickness
    z_min = z0 - pml_thickness

    jj, ii = np.meshgrid(np.arange(n_rows), np.arange(n_cols), indexing='ij')
    jj = jj.ravel()
    ii = ii.ravel()
    x = x_min + ii * h + (jj % 2) * (0.5 * h)
    z = z_min + jj * (h * ROW_FACTOR)
    nodes = np.column_stack([x, z])

    boundary = (jj == 0) | (jj == n_rows - 1) | (ii == 0) | (ii == n_cols - 1)

    eps = 1e-9 * h
    inside = (x >= x0 - eps) & (x <= x0 + width + eps) & (z >= z0 - eps) & (z <= z0 + depth + eps)
    interior = inside & ~boundary
    pml = ~boundary & ~interior

    neighbors = np.full((n_rows * n_cols, 6), -1, dtype=np.int64)
    odd = (jj % 2).astype(bool)
    for direction in range(6):
        di = np.where(odd, ODD_ROW_OFFSETS[direction][0], EVEN_ROW_OFFSETS[direction][0])
        dj = np.where(odd, ODD_ROW_OFFSETS[direction][1], EVEN_ROW_OFFSETS[direction][1])
        target = (jj + dj) * n_cols + (ii + di)
        neighbors[~boundary, direction] = target[~boundary]

    for array in (nodes, interior, pml, neighbors):
        array.setflags(write=False)

    grid = HexGrid(
        h=h, n_rows=n_rows, n_cols=n_cols, x_min=x_min, z_min=z_min,
        domain=(x0, z0, float(width), float(depth)), pml_thickness=float(pml_thickness),
        nodes=nodes, interior_mask=interior, pml_mask=pml, neighbors=neighbors
    )
    logger.debug(f"🔷 Решётка {n_rows}x{n_cols}, h={h:.3f} м, delta={pml_thickness:.1f} м")
    return grid


def build_hex_grid_from_sizing(model: VelocityModel, sizing: GridSizing,
                               node_budget: int = NODE_BUDGET) -> HexGrid:
    """
    Построить сетку по заранее вычисленному правилу размера

    Args:
        model (VelocityModel): Модель (геометрия физической области)
        sizing (GridSizing): Правило размера
        node_budget (int): Бюджет узлов

    Returns:
        HexGrid: Сетка решателя
    """
    return build_lattice(model.origin, model.width, model.depth, sizing.spacing,
                         sizing.pml_thickness, node_budget)


def build_hex_grid(model: VelocityModel, f: float, ng: float, pml_in_wavelengths: float = 1.0,
                   node_budget: int = NODE_BUDGET) -> HexGrid:
    """
    Построить сетку с h = lambda_min / Ng и delta = pml_in_wavelengths * [c] / f

    Args:
        model (VelocityModel): Модель скоростей
        f (float): Частота, Гц
        ng (float): Точек на минимальную длину волны
        pml_in_wavelengths (float): Толщина PML в средних длинах волн
        node_budget (int): Бюджет узлов

    Returns:
        HexGrid: Сетка решателя
    """
    sizing = GridSizing.from_velocity(model.c, f, ng, pml_in_wavelengths)
    return build_hex_grid_from_sizing(model, sizing, node_budget)


def bilinear_operator(model: VelocityModel, points: np.ndarray) -> sps.csr_matrix:
    """
    Матрица билинейной интерполяции с ячеек модели в точки.
    Точки вне модели прижимаются к ближайшему краю.

    Args:
        model (VelocityModel): Модель (геометрия сетки)
        points (np.ndarray): Точки (n, 2)

    Returns:
        sps.csr_matrix: Матрица (n, nz*nx)
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    x0, z0 = model.origin
    fx = (np.clip(points[:, 0], x0, x0 + model.width) - x0) / model.dx
    fz = (np.clip(points[:, 1], z0, z0 + model.depth) - z0) / model.dz
    i0 = np.minimum(np.floor(fx).astype(np.int64), model.nx - 2)
    k0 = np.minimum(np.floor(fz).astype(np.int64), model.nz - 2)
    tx = fx - i0
    tz = fz - k0

    base = k0 * model.nx + i0
    cols = np.column_stack([base, base + 1, base + model.nx, base + model.nx + 1])
    weights = np.column_stack([(1 - tx) * (1 - tz), tx * (1 - tz), (1 - tx) * tz, tx * tz])
    rows = np.repeat(np.arange(points.shape[0]), 4)
    return sps.csr_matrix((weights.ravel(), (rows, cols.ravel())),
                          shape=(points.shape[0], model.nz * model.nx))


class ModelTransfer:
    """Операторы переноса между моделью и гексагональной сеткой"""

    def __init__(self, grid: HexGrid, model: VelocityModel):
        """
        Инициализация операторов

        Args:
            grid (HexGrid): Сетка решателя
            model (VelocityModel): Модель (геометрия)
        """
        self.grid = grid
        self.model = model
        self.sampling = bilinear_operator(model, grid.nodes)
        interior = sps.diags(grid.interior_mask.astype(np.float64))
        self.interior_transpose = (interior @ self.sampling).T.tocsr()
        self.transpose = self.sampling.T.tocsr()

    def sample(self, values: np.ndarray) -> np.ndarray:
        """Значения модели в узлах сетки"""
        return self.sampling @ np.asarray(values, dtype=np.float64).ravel()

    def project(self, node_values: np.ndarray, interior_only: bool = True) -> np.ndarray:
        """Транспонированная интерполяция по внутренним узлам (или по всем узлам сетки)"""
        operator = self.interior_transpose if interior_only else self.transpose
        return operator @ np.asarray(node_values, dtype=np.float64)


def sample_to_hex(field: ModelField, grid: HexGrid) -> np.ndarray:
    """
    Билинейная интерполяция поля модели в узлы сетки (в PML - значение края)

    Args:
        field (ModelField): Поле на сетке модели
        grid (HexGrid): Сетка решателя

    Returns:
        np.ndarray: Значения в узлах
    """
    return ModelTransfer(grid, field.model).sample(field.values)


def project_to_model(node_values: np.ndarray, grid: HexGrid, model: VelocityModel) -> ModelField:
    """
    Сопряжённый к sample_to_hex перенос, узлы PML дают ноль

    Args:
        node_values (np.ndarray): Значения во всех узлах сетки
        grid (HexGrid): Сетка решателя
        model (VelocityModel): Модель назначения

    Returns:
        ModelField: Поле с тегом gradient
    """
    node_values = np.asarray(node_values, dtype=np.float64)
    if node_values.shape != (grid.n_nodes,):
        raise ValidationError(f"Ожидалось {grid.n_nodes} значений в узлах, получено {node_values.shape}")
    values = ModelTransfer(grid, model).project(node_values)
    return ModelField(model, values.reshape(model.nz, model.nx), Quantity.GRADIENT)


def hex_interpolation_matrix(grid: HexGrid, points: np.ndarray,
                             require_physical: bool = True) -> sps.csr_matrix:
    """
    Линейная (барицентрическая) интерполяция на треугольнике решётки,
    содержащем точку: не более 3 ненулевых весов на строку.

    Args:
        grid (HexGrid): Сетка решателя
        points (np.ndarray): Точки (n, 2)
        require_physical (bool): Запрещать точки вне физической области

    Returns:
        sps.csr_matrix: Матрица (n, N)
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    x, z = points[:, 0], points[:, 1]
    if require_physical and not np.all(grid.contains_physical(x, z)):
        bad = points[~grid.contains_physical(x, z)][0]
        raise OutOfDomainError(f"Точка ({bad[0]:.2f}, {bad[1]:.2f}) вне физической области")

    t_row = (z - grid.z_min) / grid.row_spacing
    j = np.clip(np.floor(t_row).astype(np.int64), 0, grid.n_rows - 2)
    t = t_row - j
    odd = (j % 2).astype(bool)
    # Сдвиг следующей строки относительно текущей в долях h
    shift = np.where(odd, -0.5, 0.5)
    u = (x - grid.x_min - grid.row_offset(j)) / grid.h - t * shift
    i = np.clip(np.floor(u).astype(np.int64), 0, grid.n_cols - 2)
    fu = u - i

    lower = j * grid.n_cols + i
    upper = (j + 1) * grid.n_cols + i
    n = points.shape[0]
    idx = np.zeros((n, 3), dtype=np.int64)
    w = np.zeros((n, 3))

    # Чётная строка: треугольники (l_i, l_i+1, u_i) и (l_i+1, u_i, u_i+1)
    even_low = ~odd & (fu + t <= 1.0)
    even_high = ~odd & ~even_low
    # Нечётная строка: треугольники (l_i, l_i+1, u_i+1) и (l_i, u_i, u_i+1)
    odd_low = odd & (fu >= t)
    odd_high = odd & ~odd_low

    sel = even_low
    idx[sel] = np.column_stack([lower[sel], lower[sel] + 1, upper[sel]])
    w[sel] = np.column_stack([1 - fu[sel] - t[sel], fu[sel], t[sel]])
    sel = even_high
    idx[sel] = np.column_stack([lower[sel] + 1, upper[sel], upper[sel] + 1])
    w[sel] = np.column_stack([1 - t[sel], 1 - fu[sel], fu[sel] + t[sel] - 1])
    sel = odd_low
    idx[sel] = np.column_stack([lower[sel], lower[sel] + 1, upper[sel] + 1])
    w[sel] = np.column_stack([1 - fu[sel], fu[sel] - t[sel], t[sel]])
    sel = odd_high
    idx[sel] = np.column_stack([lower[sel], upper[sel], upper[sel] + 1])
    w[sel] = np.column_stack([1 - t[sel], t[sel] - fu[sel], fu[sel]])

    rows = np.repeat(np.arange(n), 3)
    matrix = sps.csr_matrix((w.ravel(), (rows, idx.ravel())), shape=(n, grid.n_nodes))
    matrix.eliminate_zeros()
    return matrix


def describe_grid(model: VelocityModel, f: float, ng: float, pml_in_wavelengths: float,
                  node_budget: Optional[int] = None) -> dict:
    """
    Размеры сетки для частоты без её построения

    Args:
        model (VelocityModel): Модель скоростей
        f (float): Частота, Гц
        ng (float): Точек на длину волны
        pml_in_wavelengths (float): Толщина PML
        node_budget (Optional[int]): Бюджет узлов для проверки

    Returns:
        dict: h, delta, строки, столбцы, число узлов и оценка памяти
    """
    sizing = GridSizing.from_velocity(model.c, f, ng, pml_in_wavelengths)
    n_rows, n_cols = estimate_lattice_shape(model.width, model.depth, sizing.spacing, sizing.pml_thickness)
    nodes = n_rows * n_cols
    return {
        'frequency_hz': f,
        'h': sizing.spacing,
        'pml_thickness': sizing.pml_thickness,
        'rows': n_rows,
        'cols': n_cols,
        'nodes': nodes,
        'inner_nodes': (n_rows - 2) * (n_cols - 2),
        'within_budget': node_budget is None or nodes <= node_budget
    }
