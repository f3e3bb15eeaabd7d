# -*- coding: utf-8 -*-
"""
Конфигурация запуска: дерево dataclass, загрузка JSON/TOML и переопределения --set
"""
import copy
import json
import logging
import tomllib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np

from config.settings import (
    DEFAULT_NG,
    DEFAULT_PML_WAVELENGTHS,
    DIRECT_SOLVER_NODE_LIMIT,
    NODE_BUDGET,
    PML_A0,
    PML_EXPONENT,
    SHAPE_PER_WAVENUMBER,
    SOLVER_WORKERS,
    TOOL_VERSION,
)
from models.acquisition import ACQUISITION_PRESETS, AcquisitionGeometry, LineSpec, preset_schedule
from models.inversion import BoundsConstraint, FrequencySchedule, OptimizerConfig, StoppingCriteria
from models.solver import SolverConfig
from models.velocity_model import VelocityModel
from utils.errors import ValidationError

logger = logging.getLogger(__name__)


@dataclass
class PathsConfig:
    """Пути к файлам запуска"""

    model: Optional[str] = None  # Истинная модель (forward) или начальная (invert)
    data_dir: Optional[str] = None
    output_dir: str = 'output'


@dataclass
class ScheduleConfig:
    """Частоты и правило размера сетки"""

    frequencies: List[float] = field(default_factory=list)
    preset: Optional[str] = None  # marmousi | bp2004
    ng: float = DEFAULT_NG
    pml_wavelengths: float = DEFAULT_PML_WAVELENGTHS

    def resolve(self) -> List[float]:
        """Список частот: явный или из готового расписания"""
        if self.frequencies:
            return [float(f) for f in self.frequencies]
        if self.preset:
            return preset_schedule(self.preset)
        raise ValidationError("Расписание частот пусто")


@dataclass
class GeometryConfig:
    """Раскладка наблюдений: готовая, линиями или списками координат"""

    preset: Optional[str] = None
    sources: Optional[Dict[str, Any]] = None  # LineSpec
    receivers: Optional[Dict[str, Any]] = None  # LineSpec
    source_positions: Optional[List[List[float]]] = None
    receiver_positions: Optional[List[List[float]]] = None
    depth: Optional[float] = None  # Переопределяет глубину линий

    def build(self, model: VelocityModel) -> AcquisitionGeometry:
        """
        Построить геометрию для модели

        Args:
            model (VelocityModel): Модель (начало координат и размеры)

        Returns:
            AcquisitionGeometry: Геометрия наблюдений
        """
        if self.source_positions and self.receiver_positions:
            geometry = AcquisitionGeometry(sources=np.array(self.source_positions),
                                           receivers=np.array(self.receiver_positions))
            geometry.validate_within(model)
            return geometry
        if self.preset:
            if self.preset not in ACQUISITION_PRESETS:
                raise ValidationError(f"Неизвестная раскладка: {self.preset}")
            lines = ACQUISITION_PRESETS[self.preset]
            sources, receivers = lines['sources'], lines['receivers']
        elif self.sources and self.receivers:
            sources, receivers = LineSpec.from_dict(self.sources), LineSpec.from_dict(self.receivers)
        else:
            raise ValidationError("Геометрия наблюдений не задана")
        if self.depth is not None:
            sources = LineSpec(sources.count, sources.spacing, sources.first_offset, self.depth)
            receivers = LineSpec(receivers.count, receivers.spacing, receivers.first_offset, self.depth)
        return AcquisitionGeometry.from_lines(model, sources, receivers)


@dataclass
class SolverSection:
    """Настройки решателя в файле конфигурации"""

    shape_parameter: float = 0.0  # eps, 1/м
    shape_per_wavenumber: Optional[float] = SHAPE_PER_WAVENUMBER  # eps = beta * k локально, null - постоянный eps
    pml_a0: float = PML_A0
    pml_exponent: int = PML_EXPONENT
    workers: int = SOLVER_WORKERS
    direct_node_limit: int = DIRECT_SOLVER_NODE_LIMIT
    node_budget: int = NODE_BUDGET

    def build(self) -> SolverConfig:
        """Собрать SolverConfig"""
        beta = None if self.shape_per_wavenumber is None else float(self.shape_per_wavenumber)
        return SolverConfig(shape_parameter=float(self.shape_parameter), shape_per_wavenumber=beta,
                            pml_a0=self.pml_a0, pml_exponent=self.pml_exponent, workers=self.workers,
                            direct_node_limit=self.direct_node_limit, node_budget=self.node_budget)


@dataclass
class InitialModelConfig:
    """Линейная по глубине начальная модель и известный верхний слой"""

    c_top: Optional[float] = None
    c_bottom: Optional[float] = None
    shallow_depth: Optional[float] = None
    shallow_velocity: Optional[float] = None


@dataclass
class BoundsConfig:
    """Априорные границы скорости"""

    c_min: Optional[float] = None
    c_max: Optional[float] = None

    def build(self) -> Optional[BoundsConstraint]:
        if self.c_min is None or self.c_max is None:
            return None
        return BoundsConstraint.from_velocity(self.c_min, self.c_max)


@dataclass
class NoiseConfig:
    """Аддитивный комплексный гауссов шум"""

    snr_db: Optional[float] = None


@dataclass
class RunConfig:
    """Полная конфигурация запуска"""

    paths: PathsConfig = field(default_factory=PathsConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    optimizer: Dict[str, Any] = field(default_factory=dict)
    stopping: Dict[str, Any] = field(default_factory=dict)
    bounds: BoundsConfig = field(default_factory=BoundsConfig)
    initial: InitialModelConfig = field(default_factory=InitialModelConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    seed: Optional[int] = None

    def frequency_schedule(self) -> FrequencySchedule:
        return FrequencySchedule(frequencies=tuple(self.schedule.resolve()), ng=self.schedule.ng,
                                 pml_wavelengths=self.schedule.pml_wavelengths,
                                 stopping=self.stopping_criteria())

    def optimizer_config(self) -> OptimizerConfig:
        return OptimizerConfig.from_dict(self.optimizer)

    def stopping_criteria(self) -> StoppingCriteria:
        return StoppingCriteria.from_dict(self.stopping)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> 'RunConfig':
        """
        Создать конфигурацию из словаря (неизвестные ключи - ошибка)

        Args:
            data (dict): Словарь из JSON/TOML

        Returns:
            RunConfig: Конфигурация
        """
        sections = {
            'paths': PathsConfig,
            'schedule': ScheduleConfig,
            'geometry': GeometryConfig,
            'solver': SolverSection,
            'bounds': BoundsConfig,
            'initial': InitialModelConfig,
            'noise': NoiseConfig
        }
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"Неизвестные разделы конфигурации: {sorted(unknown)}")
        kwargs = {}
        for name, value in data.items():
            if name in sections:
                kwargs[name] = _build_section(sections[name], value or {}, name)
            else:
                kwargs[name] = value
        return cls(**kwargs)


def _build_section(section_cls, values: dict, name: str):
    known = {f.name for f in fields(section_cls)}
    unknown = set(values) - known
    if unknown:
        raise ValidationError(f"Неизвестные ключи в разделе {name}: {sorted(unknown)}")
    return section_cls(**values)


def parse_override(value: str) -> Any:
    """Значение --set: JSON, иначе строка"""
    try:
        return json.loads(value)
    except json.JSONDecodeError:
        return value


def apply_overrides(data: dict, overrides: Iterable[str]) -> dict:
    """
    Применить переопределения вида section.key=value

    Args:
        data (dict): Исходный словарь конфигурации
        overrides (Iterable[str]): Строки переопределений

    Returns:
        dict: Новый словарь
    """
    result = copy.deepcopy(data)
    for override in overrides:
        if '=' not in override:
            raise ValidationError(f"Переопределение должно иметь вид a.b=value, получено '{override}'")
        key, raw = override.split('=', 1)
        parts = [part for part in key.strip().split('.') if part]
        if not parts:
            raise ValidationError(f"Пустой ключ в переопределении '{override}'")
        target = result
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ValidationError(f"Ключ {key} указывает внутрь значения, а не раздела")
        target[parts[-1]] = parse_override(raw)
    return result


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Iterable[str] = ()) -> RunConfig:
    """
    Загрузить конфигурацию из JSON или TOML с переопределениями

    Args:
        path (Optional[Union[str, Path]]): Файл конфигурации (None - значения по умолчанию)
        overrides (Iterable[str]): Переопределения --set

    Returns:
        RunConfig: Конфигурация
    """
    data: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ValidationError(f"Файл конфигурации не найден: {path}")
        try:
            if path.suffix == '.toml':
                with open(path, 'rb') as f:
                    data = tomllib.load(f)
            else:
                with open(path, 'r', encoding='utf-8') as f:
                    data = json.load(f)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
            raise ValidationError(f"Ошибка разбора {path}: {e}") from e
        logger.info(f"⚙️ Конфигурация загружена из {path}")
    try:
        return RunConfig.from_dict(apply_overrides(data, overrides))
    except TypeError as e:
        raise ValidationError(f"Некорректная конфигурация: {e}") from e


def archive_run_config(config: RunConfig, directory: Path):
    """
    Сохранить config.json и version.json в выходную директорию

    Args:
        config (RunConfig): Конфигурация запуска
        directory (Path): Выходная директория
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / 'config.json', 'w', encoding='utf-8') as f:
        json.dump(config.to_dict(), f, ensure_ascii=False, indent=2, sort_keys=True, default=_json_default)
    with open(directory / 'version.json', 'w', encoding='utf-8') as f:
        json.dump({'tool': 'hexfwi', 'version': TOOL_VERSION}, f, indent=2, sort_keys=True)


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"Значение {value!r} не сериализуется в JSON")
