# -*- coding: utf-8 -*-
"""
Модели данных: модель скоростей, сетка, наблюдения, решатель, инверсия
"""
