# -*- coding: utf-8 -*-
"""
Командная строка инструмента
"""
