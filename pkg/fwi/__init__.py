# -*- coding: utf-8 -*-
"""
Численное ядро: сетка, оператор Гельмгольца, прямая задача, градиент, оптимизация
"""
