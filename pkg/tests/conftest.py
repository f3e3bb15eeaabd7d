# -*- coding: utf-8 -*-
"""
Общие фикстуры: малые модели, сетки и геометрии
"""
import math

import numpy as np
import pytest

from fwi.modelgrid import build_hex_grid
from models.acquisition import AcquisitionGeometry
from models.velocity_model import VelocityModel


@pytest.fixture
def two_layer_model() -> VelocityModel:
    """Модель 140 x 100 м: 1500 м/с сверху, 2000 м/с ниже 50 м"""
    return VelocityModel.two_layer(nz=6, nx=8, dz=20.0, dx=20.0, c_top=1500.0, c_bottom=2000.0,
                                   interface_depth=50.0)


@pytest.fixture
def toy_grid(two_layer_model):
    """Сетка примерно из 200 узлов"""
    return build_hex_grid(two_layer_model, f=20.0, ng=4.0, pml_in_wavelengths=0.5)


@pytest.fixture
def toy_geometry() -> AcquisitionGeometry:
    return AcquisitionGeometry(sources=np.array([[30.0, 20.0], [110.0, 20.0]]),
                               receivers=np.array([[10.0, 20.0], [70.0, 20.0], [130.0, 20.0], [70.0, 90.0]]))


@pytest.fixture
def toy_omega() -> float:
    return 2.0 * math.pi * 20.0


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)
