# -*- coding: utf-8 -*-
"""
Построение парсеров аргументов командной строки
"""
import argparse

from config.settings import LOG_LEVEL, TOOL_VERSION

CONFIG_HELP = """
Конфигурация (JSON или TOML) содержит разделы:
  paths     model, data_dir, output_dir
  schedule  frequencies (Гц) или preset (marmousi | bp2004), ng, pml_wavelengths
  geometry  preset | sources/receivers {count, spacing, first_offset, depth}
            | source_positions/receiver_positions [[x, z], ...]; depth
  solver    shape_parameter, shape_per_wavenumber, pml_a0, pml_exponent,
            workers, direct_node_limit, node_budget
  optimizer method (bb | lbfgs), variant (BB1 | BB2), memory, tau, alpha_min, alpha_max
  stopping  tol_g, tol_J, maxiter, relative
  bounds    c_min, c_max
  initial   c_top, c_bottom, shallow_depth, shallow_velocity
  noise     snr_db
  seed      зерно генератора шума
Любое поле переопределяется флагом --set раздел.ключ=значение (значение в JSON).
"""


def _add_common(parser: argparse.ArgumentParser):
    """Флаги, общие для всех подкоманд"""
    parser.add_argument('--config', help='Файл конфигурации JSON/TOML')
    parser.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                        help='Переопределение поля конфигурации (можно повторять)')
    parser.add_argument('--log-level', default=LOG_LEVEL, help='Уровень логирования')


def build_parser() -> argparse.ArgumentParser:
    """
    Построить парсер со всеми подкомандами

    Returns:
        argparse.ArgumentParser: Корневой парсер
    """
    parser = argparse.ArgumentParser(
        prog='hexfwi',
        description='Частотная инверсия полного волнового поля на гексагональных сетках',
        epilog=CONFIG_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument('--version', action='version', version=f"hexfwi {TOOL_VERSION}")
    commands = parser.add_subparsers(dest='command', required=True)

    forward = commands.add_parser('forward', help='Синтетические данные для истинной модели',
                                  epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(forward)
    forward.add_argument('--model', help='Истинная модель (.json)')
    forward.add_argument('--data-dir', help='Куда записать данные')

    invert = commands.add_parser('invert', help='Многомасштабная инверсия',
                                 epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(invert)
    invert.add_argument('--model', help='Начальная модель или шаблон геометрии (.json)')
    invert.add_argument('--data-dir', help='Директория с данными и манифестом')
    invert.add_argument('--output-dir', help='Директория контрольных точек и результатов')
    invert.add_argument('--resume', action='store_true', help='Продолжить с последней контрольной точки')
    invert.add_argument('--dry-run', action='store_true', help='Только размеры сеток и оценка памяти')

    grid_info = commands.add_parser('grid-info', help='Шаг, число узлов и толщина PML по частотам')
    _add_common(grid_info)
    grid_info.add_argument('--model', help='Модель скоростей (.json)')

    image = commands.add_parser('image', help='Изображение модели (PGM/PPM)')
    _add_common(image)
    image.add_argument('model', help='Модель (.json)')
    image.add_argument('out', help='Выходной файл')
    image.add_argument('--palette', default='gray', help="'gray' или палитра matplotlib")
    image.add_argument('--clip', nargs=2, type=float, metavar=('MIN', 'MAX'), help='Диапазон скоростей')

    profiles = commands.add_parser('profiles', help='Вертикальные профили скорости (CSV)')
    _add_common(profiles)
    profiles.add_argument('model', help='Модель (.json)')
    profiles.add_argument('out', help='Выходной CSV')
    profiles.add_argument('--x', nargs='+', type=float, required=True, help='Позиции профилей, м')
    profiles.add_argument('--reference', help='Эталонная модель для графика')
    profiles.add_argument('--plot', help='PNG с профилями')

    gradcheck = commands.add_parser('gradcheck', help='Проверка градиента конечными разностями')
    _add_common(gradcheck)
    gradcheck.add_argument('--model', help='Точка проверки (.json)')
    gradcheck.add_argument('--data-dir', help='Директория с данными')
    gradcheck.add_argument('--frequency', type=float, required=True, help='Частота, Гц')
    gradcheck.add_argument('--directions', type=int, default=10, help='Число случайных направлений')
    gradcheck.add_argument('--steps', nargs='+', type=float, help='Относительные шаги')
    gradcheck.add_argument('--out', help='Выходной CSV')

    synth = commands.add_parser('synth', help='Синтетическая модель скоростей')
    _add_common(synth)
    synth.add_argument('out', help='Выходной файл модели (.json)')
    synth.add_argument('--kind', choices=['constant', 'two-layer', 'linear'], default='two-layer')
    synth.add_argument('--nz', type=int, default=51)
    synth.add_argument('--nx', type=int, default=101)
    synth.add_argument('--dz', type=float, default=20.0)
    synth.add_argument('--dx', type=float, default=20.0)
    synth.add_argument('--c-top', type=float, default=1500.0)
    synth.add_argument('--c-bottom', type=float, default=2500.0)
    synth.add_argument('--interface-depth', type=float, default=500.0)

    return parser
