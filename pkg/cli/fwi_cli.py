# -*- coding: utf-8 -*-
"""
Основной класс командной строки
"""
import json
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

from cli.arguments import build_parser
from config.run_config import RunConfig, archive_run_config, load_run_config
from fwi.forward import generate_observed
from fwi.gradient import DEFAULT_FD_STEPS, FrequencyObjective, directional_misfit_check
from fwi.modelgrid import build_hex_grid_from_sizing, describe_grid, estimate_lattice_shape
from fwi.multiscale import ShallowPrior, initial_frequency, linear_initial_model, run_multiscale
from models.hex_grid import GridSizing
from models.velocity_model import VelocityModel
from utils.artifacts import emit_image, emit_profiles
from utils.checkpoint_manager import CheckpointManager
from utils.errors import FwiError, ValidationError
from utils.logger import SOLVER_STATS_LOGGER, attach_jsonl_file, detach_handler, setup_logging
from utils.model_io import dataset_for, load_datasets, load_velocity_model, save_velocity_model

logger = logging.getLogger(__name__)


class FwiCli:
    """Командная строка: подкоманды forward, invert, grid-info, image, profiles, gradcheck, synth"""

    def __init__(self):
        """Инициализация парсера и обработчиков"""
        self.parser = build_parser()
        self.commands: Dict[str, Callable] = {}

        # Регистрируем обработчики
        self._register_commands()

    def _register_commands(self):
        """Регистрация всех подкоманд"""
        self.commands['forward'] = self.handle_forward
        self.commands['invert'] = self.handle_invert
        self.commands['grid-info'] = self.handle_grid_info
        self.commands['image'] = self.handle_image
        self.commands['profiles'] = self.handle_profiles
        self.commands['gradcheck'] = self.handle_gradcheck
        self.commands['synth'] = self.handle_synth

    def run(self, argv: Optional[List[str]] = None) -> int:
        """
        Разобрать аргументы и выполнить подкоманду

        Args:
            argv (Optional[List[str]]): Аргументы (по умолчанию sys.argv)

        Returns:
            int: Код выхода (0 успех, 1 непредвиденная ошибка, 2 ошибка данных, 3 численный сбой)
        """
        args = self.parser.parse_args(argv)
        setup_logging(args.log_level)
        try:
            config = load_run_config(args.config, args.overrides)
            self.commands[args.command](args, config)
            return 0
        except FwiError as e:
            return self._report(e)
        except Exception as e:
            logger.debug("Непредвиденная ошибка", exc_info=True)
            return self._report(FwiError(f"{type(e).__name__}: {e}"))

    @staticmethod
    def _report(error: FwiError) -> int:
        """Одна JSON-строка ошибки в stderr"""
        print(json.dumps(error.to_dict(), ensure_ascii=False, default=str), file=sys.stderr)
        return error.exit_code

    @staticmethod
    def _require(value, name: str):
        if not value:
            raise ValidationError(f"Не задан параметр {name}")
        return value

    def handle_forward(self, args, config: RunConfig):
        """Обработчик forward: данные по расписанию и манифест"""
        model = load_velocity_model(self._require(args.model or config.paths.model, 'model'))
        data_dir = Path(self._require(args.data_dir or config.paths.data_dir, 'data_dir'))
        schedule = config.frequency_schedule()
        geometry = config.geometry.build(model)

        archive_run_config(config, data_dir)
        handler = attach_jsonl_file(SOLVER_STATS_LOGGER, data_dir / 'solver_stats.jsonl')
        try:
            generate_observed(model, schedule.frequencies, geometry, schedule.ng, schedule.pml_wavelengths,
                              config.solver.build(), output_dir=data_dir,
                              noise_snr_db=config.noise.snr_db, seed=config.seed)
        finally:
            detach_handler(SOLVER_STATS_LOGGER, handler)

    def _initial_model(self, args, config: RunConfig) -> VelocityModel:
        """Начальная модель: файл или линейная по глубине на геометрии файла"""
        template = load_velocity_model(self._require(args.model or config.paths.model, 'model'))
        initial = config.initial
        if initial.c_top is None or initial.c_bottom is None:
            return template
        shallow = None
        if initial.shallow_depth is not None and initial.shallow_velocity is not None:
            shallow = ShallowPrior(depth=initial.shallow_depth, velocity=initial.shallow_velocity)
        return linear_initial_model(initial.c_top, initial.c_bottom, template, shallow)

    def handle_invert(self, args, config: RunConfig):
        """Обработчик invert: многомасштабная инверсия с контрольными точками"""
        m0 = self._initial_model(args, config)
        data_dir = Path(self._require(args.data_dir or config.paths.data_dir, 'data_dir'))
        output_dir = Path(args.output_dir or config.paths.output_dir)
        schedule = config.frequency_schedule()
        datasets = load_datasets(data_dir)
        stage_data = [dataset_for(datasets, f) for f in schedule.frequencies]
        geometry = stage_data[0].geometry

        f0 = initial_frequency(m0.slowness_squared(), m0.depth) / (2.0 * math.pi)
        print(f"Рекомендуемая начальная частота: {f0:.4g} Гц")

        if args.dry_run:
            for f, dataset in zip(schedule.frequencies, stage_data):
                info = self._grid_info(m0, f, schedule.ng, schedule.pml_wavelengths,
                                       config.solver.node_budget, dataset.sizing)
                info['estimated_memory_bytes'] = _estimate_memory(info['nodes'], geometry.n_sources)
                print(json.dumps(info, sort_keys=True))
            return

        archive_run_config(config, output_dir)
        handler = attach_jsonl_file(SOLVER_STATS_LOGGER, output_dir / 'solver_stats.jsonl')
        try:
            result = run_multiscale(
                m0, schedule, datasets, geometry,
                optimizer=config.optimizer_config(), solver_config=config.solver.build(),
                bounds=config.bounds.build(), checkpoints=CheckpointManager(output_dir), resume=args.resume
            )
        finally:
            detach_handler(SOLVER_STATS_LOGGER, handler)
        save_velocity_model(result.final_model.to_velocity_model(), output_dir / 'final_model')
        print(pd.DataFrame(result.summary_rows()).to_string(index=False))

    @staticmethod
    def _grid_info(model: VelocityModel, f: float, ng: float, pml_wavelengths: float, node_budget: int,
                   sizing: Optional[GridSizing] = None) -> dict:
        if sizing is None:
            return describe_grid(model, f, ng, pml_wavelengths, node_budget)
        n_rows, n_cols = estimate_lattice_shape(model.width, model.depth, sizing.spacing, sizing.pml_thickness)
        return {
            'frequency_hz': f,
            'h': sizing.spacing,
            'pml_thickness': sizing.pml_thickness,
            'rows': n_rows,
            'cols': n_cols,
            'nodes': n_rows * n_cols,
            'inner_nodes': (n_rows - 2) * (n_cols - 2),
            'within_budget': n_rows * n_cols <= node_budget
        }

    def handle_grid_info(self, args, config: RunConfig):
        """Обработчик grid-info"""
        model = load_velocity_model(self._require(args.model or config.paths.model, 'model'))
        schedule = config.frequency_schedule()
        for f in schedule.frequencies:
            info = describe_grid(model, f, schedule.ng, schedule.pml_wavelengths, config.solver.node_budget)
            print(json.dumps(info, sort_keys=True))

    def handle_image(self, args, config: RunConfig):
        """Обработчик image"""
        model = load_velocity_model(args.model)
        emit_image(model, Path(args.out), palette=args.palette, clip=tuple(args.clip) if args.clip else None)

    def handle_profiles(self, args, config: RunConfig):
        """Обработчик profiles"""
        model = load_velocity_model(args.model)
        reference = load_velocity_model(args.reference) if args.reference else None
        emit_profiles(model, args.x, Path(args.out), reference=reference,
                      plot_path=Path(args.plot) if args.plot else None)

    def handle_gradcheck(self, args, config: RunConfig):
        """Обработчик gradcheck: таблица ошибок по направлениям"""
        model = load_velocity_model(self._require(args.model or config.paths.model, 'model'))
        data_dir = Path(self._require(args.data_dir or config.paths.data_dir, 'data_dir'))
        observed = dataset_for(load_datasets(data_dir), args.frequency)
        sizing = observed.sizing or GridSizing.from_velocity(model.c, args.frequency, config.schedule.ng,
                                                             config.schedule.pml_wavelengths)
        solver_config = config.solver.build()
        grid = build_hex_grid_from_sizing(model, sizing, solver_config.node_budget)
        m = model.slowness_squared()
        objective = FrequencyObjective(model, observed.omega, observed, grid, solver_config, sizing=sizing)

        rng = np.random.default_rng(config.seed)
        tables = []
        for index in range(args.directions):
            direction = rng.standard_normal(m.flat.shape)
            table = directional_misfit_check(objective, m.flat, direction, args.steps or DEFAULT_FD_STEPS,
                                             value=objective.value)
            table.insert(0, 'direction', index)
            tables.append(table)
        result = pd.concat(tables, ignore_index=True)
        best = result.groupby('direction')['relative_error'].min()
        print(f"Минимальная относительная ошибка по направлениям: max={best.max():.3e}")
        if args.out:
            result.to_csv(args.out, index=False)

    def handle_synth(self, args, config: RunConfig):
        """Обработчик synth"""
        if args.kind == 'constant':
            model = VelocityModel.constant(args.nz, args.nx, args.dz, args.dx, args.c_top)
        elif args.kind == 'two-layer':
            model = VelocityModel.two_layer(args.nz, args.nx, args.dz, args.dx, args.c_top, args.c_bottom,
                                            args.interface_depth)
        else:
            template = VelocityModel.constant(args.nz, args.nx, args.dz, args.dx, args.c_top)
            model = linear_initial_model(args.c_top, args.c_bottom, template)
        path = save_velocity_model(model, Path(args.out))
        logger.info(f"✅ Модель {model.nz}x{model.nx} сохранена в {path}")


def _estimate_memory(nodes: int, n_sources: int) -> int:
    """Волновые поля (прямые и сопряжённые) и разреженная матрица, байт"""
    wavefields = 2 * nodes * n_sources * 16
    operator = 7 * nodes * (16 + 8)
    return int(wavefields + operator)
