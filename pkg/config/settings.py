# -*- coding: utf-8 -*-
"""
Настройки проекта
"""
import os
from dotenv import load_dotenv

load_dotenv()

# Версия инструмента (пишется в каждую выходную директорию)
TOOL_VERSION = '0.1.0'

# Настройки логирования
LOG_LEVEL = os.getenv('FWI_LOG_LEVEL', 'INFO')

# Настройки сетки
NODE_BUDGET = int(os.getenv('FWI_NODE_BUDGET', '5000000'))  # Максимум узлов гексагональной сетки
DEFAULT_NG = float(os.getenv('FWI_DEFAULT_NG', '8.5'))  # Точек на минимальную длину волны
DEFAULT_PML_WAVELENGTHS = float(os.getenv('FWI_PML_WAVELENGTHS', '1.0'))  # Толщина PML в [c]/f

# Настройки решателя Гельмгольца
DIRECT_SOLVER_NODE_LIMIT = int(os.getenv('FWI_DIRECT_SOLVER_NODE_LIMIT', '1000000'))
SOLVER_WORKERS = int(os.getenv('FWI_SOLVER_WORKERS', '1'))
PML_A0 = float(os.getenv('FWI_PML_A0', '1.79'))  # sigma0 = a0 * omega
PML_EXPONENT = int(os.getenv('FWI_PML_EXPONENT', '2'))
MAX_SHAPE_RATIO = float(os.getenv('FWI_MAX_SHAPE_RATIO', '2.0'))  # Максимум eps*h
# eps = beta * k в каждом узле, 1/sqrt(12) гасит член O((kh)^2) фазовой ошибки; none - постоянный eps
_SHAPE_PER_WAVENUMBER = os.getenv('FWI_SHAPE_PER_WAVENUMBER', '0.28867513459481287')
SHAPE_PER_WAVENUMBER = None if _SHAPE_PER_WAVENUMBER.strip().lower() in ('', 'none') else float(_SHAPE_PER_WAVENUMBER)

# Настройки оптимизаторов
LBFGS_MEMORY = int(os.getenv('FWI_LBFGS_MEMORY', '10'))
BB_TAU = float(os.getenv('FWI_BB_TAU', '1e-2'))
ARMIJO_C = float(os.getenv('FWI_ARMIJO_C', '1e-4'))
MAX_BACKTRACKS = int(os.getenv('FWI_MAX_BACKTRACKS', '30'))
DEFAULT_MAXITER = int(os.getenv('FWI_MAXITER', '800'))
DEFAULT_TOL_G = float(os.getenv('FWI_TOL_G', '1e-7'))
DEFAULT_TOL_J = float(os.getenv('FWI_TOL_J', '1e-14'))
# Волновые поля больше этого размера (байт) уходят в memmap на диске
WAVEFIELD_SPILL_BYTES = int(os.getenv('FWI_WAVEFIELD_SPILL_BYTES', str(2 * 1024 ** 3)))
