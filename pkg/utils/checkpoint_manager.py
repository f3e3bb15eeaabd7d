# -*- coding: utf-8 -*-
"""
Менеджер контрольных точек многомасштабной инверсии
"""
import json
import logging
import shutil
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from models.acquisition import frequency_label
from models.inversion import IterationRecord, OptimizerHistory, StageResult
from utils.model_io import load_velocity_model, save_velocity_model

logger = logging.getLogger(__name__)

SUMMARY_COLUMNS = ['frequency_hz', 'mean_iter_seconds', 'iterations', 'inner_nodes', 'final_grad_norm']


class CheckpointManager:
    """Менеджер директорий stage_<мГц> и сводной таблицы"""

    def __init__(self, directory: Path):
        """
        Инициализация менеджера контрольных точек

        Args:
            directory (Path): Выходная директория инверсии
        """
        self.directory = Path(directory)
        self.summary_file = self.directory / 'summary.csv'

    def stage_dir(self, frequency_hz: float) -> Path:
        """Директория этапа"""
        return self.directory / f"stage_{frequency_label(frequency_hz)}"

    def has_stage(self, frequency_hz: float) -> bool:
        """
        Проверить, завершён ли этап

        Args:
            frequency_hz (float): Частота этапа

        Returns:
            bool: True если маркер stage.json записан
        """
        return (self.stage_dir(frequency_hz) / 'stage.json').exists()

    def save_stage(self, stage: StageResult) -> Path:
        """
        Сохранить этап: модель, журнал итераций и маркер завершения (последним)

        Args:
            stage (StageResult): Результат этапа

        Returns:
            Path: Директория этапа
        """
        stage_dir = self.stage_dir(stage.frequency_hz)
        stage_dir.mkdir(parents=True, exist_ok=True)
        save_velocity_model(stage.model.to_velocity_model(), stage_dir / 'model')

        with open(stage_dir / 'history.jsonl', 'w', encoding='utf-8') as f:
            for record in stage.history.records:
                f.write(json.dumps(record.to_dict(stage.frequency_hz), sort_keys=True) + '\n')

        marker = {
            'frequency_hz': stage.frequency_hz,
            'inner_nodes': stage.inner_nodes,
            'history': stage.history.to_dict()
        }
        with open(stage_dir / 'stage.json', 'w', encoding='utf-8') as f:
            json.dump(marker, f, ensure_ascii=False, indent=2, sort_keys=True)

        logger.info(f"💾 Контрольная точка {stage.frequency_hz:g} Гц сохранена в {stage_dir}")
        return stage_dir

    def load_stage(self, frequency_hz: float) -> Optional[StageResult]:
        """
        Загрузить завершённый этап

        Args:
            frequency_hz (float): Частота этапа

        Returns:
            Optional[StageResult]: Этап или None, если его нет
        """
        if not self.has_stage(frequency_hz):
            return None
        stage_dir = self.stage_dir(frequency_hz)
        with open(stage_dir / 'stage.json', 'r', encoding='utf-8') as f:
            marker = json.load(f)

        summary = marker.get('history', {})
        history = OptimizerHistory(frequency_hz=frequency_hz)
        history_file = stage_dir / 'history.jsonl'
        if history_file.exists():
            with open(history_file, 'r', encoding='utf-8') as f:
                for line in f:
                    if line.strip():
                        history.record(IterationRecord.from_dict(json.loads(line)))
        for key in ('initial_misfit', 'initial_grad_norm', 'final_misfit', 'final_grad_norm', 'exit_reason'):
            setattr(history, key, summary.get(key))
        if summary.get('best_misfit') is not None:
            history.best_misfit, history.best_iteration = summary['best_misfit'], summary.get('best_iteration')

        model = load_velocity_model(stage_dir / 'model')
        logger.info(f"✅ Загружена контрольная точка {frequency_hz:g} Гц")
        return StageResult(frequency_hz=frequency_hz, model=model.slowness_squared(), history=history,
                           inner_nodes=int(marker['inner_nodes']), resumed=True)

    def completed_frequencies(self) -> List[float]:
        """Частоты завершённых этапов по возрастанию"""
        frequencies = []
        for marker in sorted(self.directory.glob('stage_*/stage.json')):
            with open(marker, 'r', encoding='utf-8') as f:
                frequencies.append(float(json.load(f)['frequency_hz']))
        return sorted(frequencies)

    def write_summary(self, rows: List[dict]) -> Path:
        """
        Записать summary.csv (по строке на частоту)

        Args:
            rows (List[dict]): Строки StageResult.summary_row()

        Returns:
            Path: Путь к таблице
        """
        self.directory.mkdir(parents=True, exist_ok=True)
        table = pd.DataFrame(rows, columns=SUMMARY_COLUMNS)
        table.to_csv(self.summary_file, index=False)
        logger.info(f"📊 Сводная таблица: {len(rows)} этапов")
        return self.summary_file

    def clear(self) -> bool:
        """
        Удалить все контрольные точки и сводку

        Returns:
            bool: True если успешно очищено
        """
        try:
            for stage_dir in self.directory.glob('stage_*'):
                shutil.rmtree(stage_dir)
            if self.summary_file.exists():
                self.summary_file.unlink()
            logger.info("🗑️ Контрольные точки удалены")
            return True
        except OSError as e:
            logger.error(f"❌ Ошибка удаления контрольных точек: {e}")
            return False

    def get_checkpoint_info(self) -> Dict:
        """
        Получить информацию о контрольных точках

        Returns:
            Dict: Наличие, список частот и последняя частота
        """
        if not self.directory.exists():
            return {'exists': False, 'message': 'Директория контрольных точек не найдена'}
        frequencies = self.completed_frequencies()
        return {
            'exists': bool(frequencies),
            'stages': frequencies,
            'last_frequency_hz': frequencies[-1] if frequencies else None,
            'has_summary': self.summary_file.exists()
        }
