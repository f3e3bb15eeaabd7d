# -*- coding: utf-8 -*-
"""
Настройка логирования: статусные строки и JSON-lines потоки
"""
import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from config.settings import LOG_LEVEL

SOLVER_STATS_LOGGER = 'hexfwi.solver_stats'
ITERATIONS_LOGGER = 'hexfwi.iterations'


def setup_logging(level: Optional[str] = None):
    """
    Настроить корневой логгер для статусных сообщений

    Args:
        level (Optional[str]): Уровень логирования, по умолчанию из настроек
    """
    logging.basicConfig(
        level=(level or LOG_LEVEL).upper(),
        format='%(asctime)s %(levelname)s %(name)s: %(message)s'
    )
    # JSON-потоки не дублируются в консоль
    for name in (SOLVER_STATS_LOGGER, ITERATIONS_LOGGER):
        logging.getLogger(name).propagate = False
        logging.getLogger(name).setLevel(logging.INFO)


def attach_jsonl_file(logger_name: str, path: Path) -> logging.Handler:
    """
    Подключить файл JSON-lines к потоку записей

    Args:
        logger_name (str): Имя логгера потока
        path (Path): Путь к файлу .jsonl

    Returns:
        logging.Handler: Созданный обработчик (для последующего отключения)
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding='utf-8')
    handler.setFormatter(logging.Formatter('%(message)s'))
    logger = logging.getLogger(logger_name)
    logger.setLevel(logging.INFO)
    logger.propagate = False
    logger.addHandler(handler)
    return handler


def detach_handler(logger_name: str, handler: logging.Handler):
    """Отключить и закрыть обработчик"""
    logging.getLogger(logger_name).removeHandler(handler)
    handler.close()


def emit_record(logger_name: str, record: Dict[str, Any]):
    """
    Записать одну JSON-строку в поток

    Args:
        logger_name (str): Имя логгера потока
        record (Dict[str, Any]): Сериализуемая запись
    """
    logging.getLogger(logger_name).info(json.dumps(record, sort_keys=True))
