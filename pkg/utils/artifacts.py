# -*- coding: utf-8 -*-
"""
Изображения моделей (PGM/PPM) и вертикальные профили (CSV, опционально PNG)
"""
import logging
import math
from pathlib import Path
from typing import Optional, Sequence, Tuple

import matplotlib
import numpy as np
import pandas as pd
from matplotlib.figure import Figure
from PIL import Image

from models.velocity_model import VelocityModel
from utils.errors import OutOfDomainError, ValidationError

logger = logging.getLogger(__name__)


def to_gray_levels(values: np.ndarray, clip: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """
    Аффинно отобразить [clip_min, clip_max] в 0..255 (округление к ближайшему)

    Args:
        values (np.ndarray): Значения (nz, nx)
        clip (Optional[Tuple[float, float]]): Диапазон, по умолчанию min/max значений

    Returns:
        np.ndarray: uint8 уровни серого
    """
    values = np.asarray(values, dtype=np.float64)
    if clip is None:
        low, high = float(values.min()), float(values.max())
        if low == high:
            return np.zeros(values.shape, dtype=np.uint8)
    else:
        low, high = float(clip[0]), float(clip[1])
        if not (math.isfinite(low) and math.isfinite(high) and low < high):
            raise ValidationError(f"Некорректный диапазон отображения [{clip[0]}, {clip[1]}]")
    scaled = (np.clip(values, low, high) - low) / (high - low) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def emit_image(model: VelocityModel, out_path: Path, palette: str = 'gray',
               clip: Optional[Tuple[float, float]] = None) -> Path:
    """
    Записать модель как изображение: пиксель на ячейку, строки по глубине

    Args:
        model (VelocityModel): Модель скоростей
        out_path (Path): Файл .pgm (серый) или .ppm (цветная палитра)
        palette (str): 'gray' или имя палитры matplotlib
        clip (Optional[Tuple[float, float]]): Диапазон скоростей

    Returns:
        Path: Путь к изображению
    """
    levels = to_gray_levels(model.c, clip)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    if palette == 'gray':
        image = Image.fromarray(levels)
    else:
        try:
            colormap = matplotlib.colormaps[palette]
        except KeyError as e:
            raise ValidationError(f"Неизвестная палитра: {palette}") from e
        lut = np.floor(colormap(np.arange(256) / 255.0)[:, :3] * 255.0 + 0.5).astype(np.uint8)
        image = Image.fromarray(lut[levels])
    image.save(out_path, format='PPM')
    logger.info(f"🖼️ Изображение {model.nz}x{model.nx} сохранено в {out_path}")
    return out_path


def profile_columns(model: VelocityModel, x_positions: Sequence[float]) -> list:
    """
    Ближайшие столбцы модели для позиций x

    Args:
        model (VelocityModel): Модель
        x_positions (Sequence[float]): Позиции, м

    Returns:
        list: Пары (индекс столбца, фактическая x)
    """
    x0 = model.origin[0]
    tol = 1e-9 * max(model.width, 1.0)
    columns = []
    for x in x_positions:
        if not (x0 - tol <= x <= x0 + model.width + tol):
            raise OutOfDomainError(f"Позиция x={x} вне модели [{x0}, {x0 + model.width}]")
        index = int(min(max(round((x - x0) / model.dx), 0), model.nx - 1))
        columns.append((index, x0 + index * model.dx))
    return columns


def emit_profiles(model: VelocityModel, x_positions: Sequence[float], out_csv: Path,
                  reference: Optional[VelocityModel] = None, plot_path: Optional[Path] = None) -> pd.DataFrame:
    """
    Вертикальные профили скорости в заданных позициях

    Args:
        model (VelocityModel): Модель (результат инверсии)
        x_positions (Sequence[float]): Позиции профилей, м
        out_csv (Path): CSV: глубина и столбец на позицию
        reference (Optional[VelocityModel]): Эталонная модель для графика
        plot_path (Optional[Path]): PNG с профилями (эталон красный, результат чёрный)

    Returns:
        pd.DataFrame: Таблица профилей
    """
    if not x_positions:
        raise ValidationError("Не заданы позиции профилей")
    columns = profile_columns(model, x_positions)
    table = pd.DataFrame({'depth_m': model.z})
    for index, x in columns:
        table[f"x_{x:g}"] = model.c[:, index]

    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out_csv, index=False)
    logger.info(f"📈 Профили ({len(columns)}) сохранены в {out_csv}")

    if plot_path is not None:
        _plot_profiles(model, columns, Path(plot_path), reference)
    return table


def _plot_profiles(model: VelocityModel, columns: list, plot_path: Path, reference: Optional[VelocityModel]):
    """Панель на профиль, глубина вниз"""
    figure = Figure(figsize=(2.5 * len(columns), 5))
    axes = figure.subplots(1, len(columns), sharey=True, squeeze=False)[0]
    for axis, (index, x) in zip(axes, columns):
        if reference is not None:
            axis.plot(reference.c[:, index], reference.z, color='red', linewidth=1.0)
        axis.plot(model.c[:, index], model.z, color='black', linewidth=1.0)
        axis.set_title(f"x = {x / 1000.0:g} км")
        axis.set_xlabel('c, м/с')
    axes[0].set_ylabel('z, м')
    axes[0].invert_yaxis()
    plot_path.parent.mkdir(parents=True, exist_ok=True)
    figure.savefig(plot_path, dpi=100)
    logger.info(f"📈 График профилей сохранён в {plot_path}")
