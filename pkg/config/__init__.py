# -*- coding: utf-8 -*-
"""
Модуль конфигурации проекта
""" 