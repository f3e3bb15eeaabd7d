# -*- coding: utf-8 -*-
"""
Файловые форматы: модели скоростей (JSON + f32) и частотные данные (JSON + c128)
"""
import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Union

import numpy as np

from config.settings import TOOL_VERSION
from models.acquisition import AcquisitionGeometry, FrequencyDataset, Provenance, frequency_label
from models.hex_grid import GridSizing
from models.velocity_model import ModelField, VelocityModel
from utils.errors import ValidationError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MANIFEST_NAME = 'manifest.json'


def _stem(path: PathLike) -> Path:
    """Путь без расширения .json/.bin"""
    path = Path(path)
    return path.with_suffix('') if path.suffix in ('.json', '.bin') else path


def _write_json(path: Path, data: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(data, f, ensure_ascii=False, indent=2, sort_keys=True)


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise ValidationError(f"Файл не найден: {path}")
    try:
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Некорректный JSON в {path}: {e}") from e


def save_velocity_model(model: VelocityModel, path: PathLike) -> Path:
    """
    Сохранить модель: заголовок .json и значения .bin (little-endian float32, row-major)

    Args:
        model (VelocityModel): Модель скоростей
        path (PathLike): Путь (с расширением или без)

    Returns:
        Path: Путь к заголовку
    """
    stem = _stem(path)
    header = model.to_header()
    header['quantity'] = 'velocity'
    header['payload'] = stem.with_suffix('.bin').name
    _write_json(stem.with_suffix('.json'), header)
    model.c.astype('<f4').tofile(stem.with_suffix('.bin'))
    return stem.with_suffix('.json')


def save_model_field(model_field: ModelField, path: PathLike) -> Path:
    """
    Сохранить поле на сетке модели (например, градиент) в формате модели

    Args:
        model_field (ModelField): Поле
        path (PathLike): Путь

    Returns:
        Path: Путь к заголовку
    """
    stem = _stem(path)
    header = model_field.model.to_header()
    header['quantity'] = model_field.quantity.value
    header['payload'] = stem.with_suffix('.bin').name
    _write_json(stem.with_suffix('.json'), header)
    model_field.values.astype('<f4').tofile(stem.with_suffix('.bin'))
    return stem.with_suffix('.json')


def load_velocity_model(path: PathLike) -> VelocityModel:
    """
    Загрузить модель скоростей

    Args:
        path (PathLike): Путь к .json, .bin или общий префикс

    Returns:
        VelocityModel: Модель
    """
    stem = _stem(path)
    header = _read_json(stem.with_suffix('.json'))
    if header.get('dtype', 'f32') != 'f32' or header.get('order', 'row-major') != 'row-major':
        raise ValidationError(f"Неподдерживаемый формат модели: {header.get('dtype')}/{header.get('order')}")
    if header.get('quantity', 'velocity') != 'velocity':
        raise ValidationError(f"Файл содержит {header['quantity']}, а не скорости")
    payload = stem.parent / header.get('payload', stem.with_suffix('.bin').name)
    if not payload.exists():
        raise ValidationError(f"Файл значений не найден: {payload}")
    nz, nx = int(header['nz']), int(header['nx'])
    values = np.fromfile(payload, dtype='<f4')
    if values.size != nz * nx:
        raise ValidationError(f"Ожидалось {nz * nx} значений, в файле {values.size}")
    return VelocityModel(nz=nz, nx=nx, dz=float(header['dz']), dx=float(header['dx']),
                         c=values.astype(np.float64).reshape(nz, nx),
                         origin=tuple(header.get('origin', (0.0, 0.0))))


def dataset_name(frequency_hz: float) -> str:
    """Имя файла данных по частоте в мГц"""
    return f"freq_{frequency_label(frequency_hz)}"


def save_dataset(dataset: FrequencyDataset, directory: PathLike) -> Path:
    """
    Сохранить данные одной частоты

    Args:
        dataset (FrequencyDataset): Данные
        directory (PathLike): Директория

    Returns:
        Path: Путь к заголовку
    """
    stem = Path(directory) / dataset_name(dataset.frequency_hz)
    header = {
        'omega': dataset.omega,
        'frequency_hz': dataset.frequency_hz,
        'n_sources': dataset.geometry.n_sources,
        'n_receivers': dataset.geometry.n_receivers,
        'layout': 'row-major',
        'dtype': 'c128-interleaved',
        'provenance': dataset.provenance.value,
        'geometry': dataset.geometry.to_dict(),
        'sizing': dataset.sizing.to_dict() if dataset.sizing else None,
        'payload': stem.with_suffix('.bin').name
    }
    _write_json(stem.with_suffix('.json'), header)
    np.ascontiguousarray(dataset.data, dtype='<c16').tofile(stem.with_suffix('.bin'))
    logger.debug(f"💾 Данные {dataset.frequency_hz:g} Гц сохранены в {stem}")
    return stem.with_suffix('.json')


def load_dataset(path: PathLike) -> FrequencyDataset:
    """
    Загрузить данные одной частоты

    Args:
        path (PathLike): Путь к .json или префикс

    Returns:
        FrequencyDataset: Данные
    """
    stem = _stem(path)
    header = _read_json(stem.with_suffix('.json'))
    if header.get('dtype') != 'c128-interleaved' or header.get('layout') != 'row-major':
        raise ValidationError(f"Неподдерживаемый формат данных в {stem}")
    payload = stem.parent / header.get('payload', stem.with_suffix('.bin').name)
    if not payload.exists():
        raise ValidationError(f"Файл значений не найден: {payload}")
    shape = (int(header['n_sources']), int(header['n_receivers']))
    data = np.fromfile(payload, dtype='<c16')
    if data.size != shape[0] * shape[1]:
        raise ValidationError(f"Ожидалось {shape[0] * shape[1]} значений, в файле {data.size}")
    sizing = header.get('sizing')
    return FrequencyDataset(
        omega=float(header['omega']),
        data=data.reshape(shape),
        geometry=AcquisitionGeometry.from_dict(header['geometry']),
        provenance=Provenance(header.get('provenance', 'observed')),
        sizing=GridSizing.from_dict(sizing) if sizing else None
    )


def write_manifest(directory: PathLike, files: List[Path]) -> Path:
    """
    Записать манифест набора данных

    Args:
        directory (PathLike): Директория данных
        files (List[Path]): Заголовки файлов данных

    Returns:
        Path: Путь к манифесту
    """
    directory = Path(directory)
    entries = []
    for path in files:
        header = _read_json(Path(path))
        entries.append({
            'frequency_hz': header['frequency_hz'],
            'header': Path(path).name,
            'payload': header['payload']
        })
    manifest = {'tool_version': TOOL_VERSION, 'files': entries}
    _write_json(directory / MANIFEST_NAME, manifest)
    logger.info(f"📋 Манифест: {len(entries)} файлов в {directory}")
    return directory / MANIFEST_NAME


def load_datasets(directory: PathLike) -> Dict[int, FrequencyDataset]:
    """
    Загрузить все данные по манифесту

    Args:
        directory (PathLike): Директория данных

    Returns:
        Dict[int, FrequencyDataset]: Данные по частоте в мГц
    """
    directory = Path(directory)
    manifest = _read_json(directory / MANIFEST_NAME)
    datasets = {}
    for entry in manifest.get('files', []):
        dataset = load_dataset(directory / entry['header'])
        datasets[frequency_label(dataset.frequency_hz)] = dataset
    return datasets


def dataset_for(datasets: Dict[int, FrequencyDataset], frequency_hz: float) -> FrequencyDataset:
    """
    Найти данные для частоты расписания

    Args:
        datasets (Dict[int, FrequencyDataset]): Данные по частоте в мГц
        frequency_hz (float): Частота, Гц

    Returns:
        FrequencyDataset: Данные этой частоты
    """
    label = frequency_label(frequency_hz)
    if label not in datasets:
        raise ValidationError(f"Нет данных для частоты {frequency_hz:g} Гц")
    dataset = datasets[label]
    if not math.isclose(dataset.frequency_hz, frequency_hz, rel_tol=1e-9):
        raise ValidationError(f"Частота данных {dataset.frequency_hz} не совпадает с {frequency_hz}")
    return dataset
