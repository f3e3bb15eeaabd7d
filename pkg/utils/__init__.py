# -*- coding: utf-8 -*-
"""
Вспомогательные утилиты
""" 