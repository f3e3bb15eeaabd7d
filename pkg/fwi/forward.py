# -*- coding: utf-8 -*-
"""
Прямое моделирование F_omega(m) и генерация синтетических данных
"""
import logging
import math
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
import scipy.sparse as sps

from config.settings import DEFAULT_NG, DEFAULT_PML_WAVELENGTHS, WAVEFIELD_SPILL_BYTES
from fwi.helmholtz import (
    Factorization,
    HelmholtzOperator,
    assemble,
    factorize,
    node_weight_sensitivity,
    solve_batch,
    source_matrix,
)
from fwi.modelgrid import ModelTransfer, build_hex_grid_from_sizing, hex_interpolation_matrix
from models.acquisition import AcquisitionGeometry, FrequencyDataset, Provenance
from models.hex_grid import GridSizing, HexGrid
from models.inversion import FrequencySchedule
from models.solver import SolverConfig
from models.velocity_model import ModelField, Quantity, VelocityModel
from utils.errors import NonFiniteError, ValidationError
from utils.model_io import save_dataset, write_manifest

logger = logging.getLogger(__name__)


@dataclass
class ForwardState:
    """Всё, что нужно градиенту после прямого решения"""

    grid: HexGrid = field(repr=False)
    operator: HelmholtzOperator = field(repr=False)
    factorization: Factorization = field(repr=False)
    wavefields: np.ndarray = field(repr=False)  # (N, n_sources)
    receiver_weights: sps.csr_matrix = field(repr=False)  # (n_receivers, N)
    transfer: ModelTransfer = field(repr=False)
    workers: int = 1
    collar_frozen: bool = False  # PML, граница и eps(k) взяты из опорной модели, а не из m
    weight_sensitivity: Optional[np.ndarray] = field(default=None, repr=False)  # dw/dm по узлам

    @property
    def omega(self) -> float:
        return self.operator.omega

    def project(self, g_node: np.ndarray) -> np.ndarray:
        """Градиент по узлам -> градиент на сетке модели (цепное правило через перенос)"""
        return self.transfer.project(g_node, interior_only=self.collar_frozen)


def nodal_slowness(m: ModelField, grid: HexGrid, collar: Optional[ModelField] = None,
                   transfer: Optional[ModelTransfer] = None) -> np.ndarray:
    """
    Квадрат медленности в узлах: внутри области из m, в PML и на границе из collar

    Args:
        m (ModelField): Квадрат медленности на сетке модели
        grid (HexGrid): Сетка решателя
        collar (Optional[ModelField]): Опорная модель для слоя (по умолчанию m)
        transfer (Optional[ModelTransfer]): Готовые операторы переноса

    Returns:
        np.ndarray: Значения во всех узлах
    """
    transfer = transfer or ModelTransfer(grid, m.model)
    values = transfer.sample(m.values)
    if collar is not None:
        outside = ~grid.interior_mask
        values[outside] = transfer.sample(collar.values)[outside]
    return values


def receiver_matrix(grid: HexGrid, receivers: np.ndarray) -> sps.csr_matrix:
    """Матрица выборки поля в приёмниках (та же, что для инъекции источников)"""
    return hex_interpolation_matrix(grid, receivers)


def sample_receivers(field_values: np.ndarray, receivers: np.ndarray, grid: HexGrid) -> np.ndarray:
    """
    Интерполировать комплексное поле в точки приёмников

    Args:
        field_values (np.ndarray): Поле в узлах (N,) или (N, k)
        receivers (np.ndarray): Приёмники (nr, 2)
        grid (HexGrid): Сетка решателя

    Returns:
        np.ndarray: Значения в приёмниках
    """
    field_values = np.asarray(field_values)
    if field_values.shape[0] != grid.n_nodes:
        raise ValidationError(f"Поле длины {field_values.shape[0]} не соответствует сетке ({grid.n_nodes} узлов)")
    return receiver_matrix(grid, receivers) @ field_values


def _allocate_wavefields(n_nodes: int, n_sources: int, spill_bytes: int) -> np.ndarray:
    """Буфер волновых полей в памяти или в memmap при превышении порога"""
    size = n_nodes * n_sources * np.dtype(np.complex128).itemsize
    if size <= spill_bytes:
        return np.empty((n_nodes, n_sources), dtype=np.complex128)
    spill = tempfile.NamedTemporaryFile(prefix='wavefields_', suffix='.c128', delete=False)
    logger.info(f"💾 Волновые поля ({size / 1024 ** 3:.2f} ГБ) сохраняются на диск: {spill.name}")
    return np.memmap(spill.name, dtype=np.complex128, mode='w+', shape=(n_nodes, n_sources))


def forward_map(m: ModelField, omega: float, geom: AcquisitionGeometry, grid: HexGrid,
                solver_config: Optional[SolverConfig] = None, collar: Optional[ModelField] = None,
                sizing: Optional[GridSizing] = None,
                spill_bytes: int = WAVEFIELD_SPILL_BYTES) -> tuple:
    """
    Вычислить данные F_omega(m): одна сборка, одна факторизация, решение на каждый источник

    Args:
        m (ModelField): Квадрат медленности
        omega (float): Угловая частота, рад/с
        geom (AcquisitionGeometry): Источники и приёмники
        grid (HexGrid): Сетка решателя
        solver_config (Optional[SolverConfig]): Настройки решателя
        collar (Optional[ModelField]): Замороженная опорная модель для PML, границы и eps(k) (None - всё из m)
        sizing (Optional[GridSizing]): Правило сетки (пишется в заголовок данных)
        spill_bytes (int): Порог выгрузки волновых полей на диск

    Returns:
        tuple: (FrequencyDataset, ForwardState)
    """
    solver_config = solver_config or SolverConfig()
    if m.quantity != Quantity.SLOWNESS_SQUARED:
        raise ValidationError(f"Ожидался квадрат медленности, получено {m.quantity.value}")
    if not omega > 0:
        raise ValidationError(f"Частота должна быть положительной, получено {omega}")

    transfer = ModelTransfer(grid, m.model)
    m_nodes = nodal_slowness(m, grid, collar, transfer)
    reference = m_nodes if collar is None else transfer.sample(collar.values)

    operator = assemble(grid, m_nodes, omega, solver_config.pml(grid.pml_thickness, omega),
                        eps=solver_config.shape, reference_nodes=reference)
    fac = factorize(operator, solver_config.direct_node_limit, solver_config.iterative_tol)
    sensitivity = None
    if collar is None and solver_config.shape_per_wavenumber is not None:
        sensitivity = node_weight_sensitivity(solver_config.shape_per_wavenumber, grid.h, omega, m_nodes)

    rhs = source_matrix(grid, geom.sources)
    wavefields = _allocate_wavefields(grid.n_nodes, geom.n_sources, spill_bytes)
    try:
        solve_batch(fac, rhs, workers=solver_config.workers, out=wavefields)
    except NonFiniteError as e:
        e.state.update({'frequency_hz': omega / (2.0 * math.pi), 'stage': 'forward'})
        raise

    weights = receiver_matrix(grid, geom.receivers)
    data = np.asarray((weights @ wavefields).T)
    dataset = FrequencyDataset(omega=omega, data=data, geometry=geom,
                               provenance=Provenance.PREDICTED, sizing=sizing)
    state = ForwardState(grid=grid, operator=operator, factorization=fac, wavefields=wavefields,
                         receiver_weights=weights, transfer=transfer, workers=solver_config.workers,
                         collar_frozen=collar is not None, weight_sensitivity=sensitivity)
    return dataset, state


def add_noise(dataset: FrequencyDataset, snr_db: float, rng: np.random.Generator) -> FrequencyDataset:
    """
    Добавить комплексный гауссов шум с заданным SNR

    Args:
        dataset (FrequencyDataset): Чистые данные
        snr_db (float): Отношение сигнал/шум, дБ
        rng (np.random.Generator): Генератор случайных чисел

    Returns:
        FrequencyDataset: Зашумлённые данные с тем же происхождением
    """
    signal_power = float(np.mean(np.abs(dataset.data) ** 2))
    noise_power = signal_power / 10.0 ** (snr_db / 10.0)
    scale = math.sqrt(noise_power / 2.0)
    noise = scale * (rng.standard_normal(dataset.data.shape) + 1j * rng.standard_normal(dataset.data.shape))
    return dataset.with_data(dataset.data + noise, dataset.provenance)


def generate_observed(true_model: VelocityModel, frequencies: Sequence[float], geom: AcquisitionGeometry,
                      ng: float = DEFAULT_NG, pml_wavelengths: float = DEFAULT_PML_WAVELENGTHS,
                      solver_config: Optional[SolverConfig] = None, output_dir: Optional[Path] = None,
                      noise_snr_db: Optional[float] = None, seed: Optional[int] = None) -> List[FrequencyDataset]:
    """
    Синтетические наблюдённые данные по расписанию частот

    Args:
        true_model (VelocityModel): Истинная модель
        frequencies (Sequence[float]): Частоты, Гц (строго возрастают)
        geom (AcquisitionGeometry): Геометрия наблюдений
        ng (float): Точек на длину волны
        pml_wavelengths (float): Толщина PML
        solver_config (Optional[SolverConfig]): Настройки решателя
        output_dir (Optional[Path]): Куда записать файлы данных и манифест
        noise_snr_db (Optional[float]): SNR шума, дБ (None - без шума)
        seed (Optional[int]): Зерно генератора шума

    Returns:
        List[FrequencyDataset]: Наборы данных с тегом observed
    """
    schedule = FrequencySchedule(frequencies=tuple(frequencies), ng=ng, pml_wavelengths=pml_wavelengths)
    solver_config = solver_config or SolverConfig()
    geom.validate_within(true_model)
    m_true = true_model.slowness_squared()
    rng = np.random.default_rng(seed)

    datasets = []
    files = []
    for f in schedule.frequencies:
        sizing = GridSizing.from_velocity(true_model.c, f, ng, pml_wavelengths)
        grid = build_hex_grid_from_sizing(true_model, sizing, solver_config.node_budget)
        logger.info(f"🔄 Моделирование {f:g} Гц: {grid.n_inner} внутренних узлов, {geom.n_sources} источников")
        dataset, _ = forward_map(m_true, 2.0 * math.pi * f, geom, grid, solver_config, sizing=sizing)
        dataset = dataset.with_data(dataset.data, Provenance.OBSERVED)
        if noise_snr_db is not None:
            dataset = add_noise(dataset, noise_snr_db, rng)
        datasets.append(dataset)
        if output_dir is not None:
            files.append(save_dataset(dataset, Path(output_dir)))

    if output_dir is not None:
        write_manifest(Path(output_dir), files)
    logger.info(f"✅ Сгенерировано наборов данных: {len(datasets)}")
    return datasets
