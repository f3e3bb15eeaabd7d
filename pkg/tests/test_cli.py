# -*- coding: utf-8 -*-
"""
Тесты командной строки на маленькой модели
"""
import json

import pandas as pd
import pytest

from cli.fwi_cli import FwiCli
from utils.checkpoint_manager import SUMMARY_COLUMNS
from utils.model_io import load_velocity_model

GEOMETRY = [
    '--set', 'geometry.source_positions=[[100, 20], [300, 20]]',
    '--set', 'geometry.receiver_positions=[[40, 20], [200, 20], [360, 20]]',
    '--set', 'schedule.ng=5.0',
    '--set', 'schedule.pml_wavelengths=0.5',
]


def _json_lines(text: str) -> list:
    return [json.loads(line) for line in text.splitlines() if line.startswith('{')]


@pytest.fixture
def workspace(tmp_path):
    cli = FwiCli()
    assert cli.run(['synth', str(tmp_path / 'true.json'), '--nz', '11', '--nx', '21', '--dz', '20', '--dx', '20',
                    '--c-top', '1500', '--c-bottom', '2000', '--interface-depth', '100']) == 0
    assert cli.run(['synth', str(tmp_path / 'start.json'), '--kind', 'linear', '--nz', '11', '--nx', '21',
                    '--dz', '20', '--dx', '20', '--c-top', '1500', '--c-bottom', '2000']) == 0
    return tmp_path


@pytest.fixture
def data_dir(workspace):
    target = workspace / 'data'
    code = FwiCli().run(['forward', '--model', str(workspace / 'true.json'), '--data-dir', str(target),
                         '--set', 'schedule.frequencies=[4.0, 6.0]', *GEOMETRY])
    assert code == 0
    return target


def test_synth_writes_models(workspace):
    model = load_velocity_model(workspace / 'true.json')
    assert (model.nz, model.nx) == (11, 21)
    assert model.c[0, 0] == 1500.0 and model.c[-1, 0] == 2000.0
    start = load_velocity_model(workspace / 'start.json')
    assert start.c[5, 3] == 1750.0


def test_forward_writes_dataset_and_archive(data_dir):
    for name in ('manifest.json', 'freq_4000.json', 'freq_4000.bin', 'freq_6000.bin', 'config.json',
                 'version.json'):
        assert (data_dir / name).exists()
    with open(data_dir / 'config.json', 'r', encoding='utf-8') as f:
        assert json.load(f)['schedule']['frequencies'] == [4.0, 6.0]


def test_forward_rerun_is_bit_identical(workspace, data_dir):
    again = workspace / 'data_again'
    code = FwiCli().run(['forward', '--model', str(workspace / 'true.json'), '--data-dir', str(again),
                         '--set', 'schedule.frequencies=[4.0, 6.0]', *GEOMETRY])
    assert code == 0
    for name in ('freq_4000.bin', 'freq_6000.bin'):
        assert (data_dir / name).read_bytes() == (again / name).read_bytes()


def test_grid_info_reports_each_frequency(workspace, capsys):
    code = FwiCli().run(['grid-info', '--model', str(workspace / 'true.json'),
                         '--set', 'schedule.frequencies=[4.0, 6.0]', *GEOMETRY])
    assert code == 0
    rows = _json_lines(capsys.readouterr().out)
    assert [row['frequency_hz'] for row in rows] == [4.0, 6.0]
    assert rows[0]['h'] > rows[1]['h']
    assert all(row['within_budget'] for row in rows)


def test_invert_dry_run_solves_nothing(workspace, data_dir, capsys):
    output = workspace / 'dry'
    code = FwiCli().run(['invert', '--model', str(workspace / 'start.json'), '--data-dir', str(data_dir),
                         '--output-dir', str(output), '--dry-run', '--set', 'schedule.frequencies=[4.0, 6.0]'])
    assert code == 0
    rows = _json_lines(capsys.readouterr().out)
    assert len(rows) == 2
    assert all(row['estimated_memory_bytes'] > 0 for row in rows)
    assert not output.exists()


def test_invert_writes_checkpoints_and_summary(workspace, data_dir):
    output = workspace / 'out'
    code = FwiCli().run(['invert', '--model', str(workspace / 'start.json'), '--data-dir', str(data_dir),
                         '--output-dir', str(output), '--set', 'schedule.frequencies=[4.0, 6.0]',
                         '--set', 'stopping.maxiter=2'])
    assert code == 0
    assert (output / 'stage_4000' / 'stage.json').exists()
    assert (output / 'stage_6000' / 'model.json').exists()
    assert (output / 'final_model.json').exists()

    summary = pd.read_csv(output / 'summary.csv')
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert summary['frequency_hz'].tolist() == [4.0, 6.0]
    assert summary['iterations'].tolist() == [2, 2]

    history = (output / 'stage_4000' / 'history.jsonl').read_text(encoding='utf-8').splitlines()
    assert [json.loads(line)['k'] for line in history] == [1, 2]
    assert (output / 'solver_stats.jsonl').exists()


def test_invert_resume_matches_uninterrupted_run(workspace, data_dir):
    common = ['--model', str(workspace / 'start.json'), '--data-dir', str(data_dir), '--set', 'stopping.maxiter=1']
    cli = FwiCli()
    assert cli.run(['invert', *common, '--output-dir', str(workspace / 'full'),
                    '--set', 'schedule.frequencies=[4.0, 6.0]']) == 0

    partial = workspace / 'partial'
    assert cli.run(['invert', *common, '--output-dir', str(partial), '--set', 'schedule.frequencies=[4.0]']) == 0
    assert cli.run(['invert', *common, '--output-dir', str(partial), '--resume',
                    '--set', 'schedule.frequencies=[4.0, 6.0]']) == 0

    full_model = load_velocity_model(workspace / 'full' / 'final_model')
    resumed_model = load_velocity_model(partial / 'final_model')
    assert (full_model.c == resumed_model.c).all()


def test_image_and_profiles_commands(workspace):
    cli = FwiCli()
    image = workspace / 'true.pgm'
    assert cli.run(['image', str(workspace / 'true.json'), str(image), '--clip', '1500', '2000']) == 0
    assert image.read_bytes().startswith(b'P5')

    profiles = workspace / 'profiles.csv'
    assert cli.run(['profiles', str(workspace / 'start.json'), str(profiles), '--x', '0', '200']) == 0
    table = pd.read_csv(profiles)
    assert list(table.columns) == ['depth_m', 'x_0', 'x_200']


def test_gradcheck_writes_table(workspace, data_dir):
    out = workspace / 'gradcheck.csv'
    code = FwiCli().run(['gradcheck', '--model', str(workspace / 'start.json'), '--data-dir', str(data_dir),
                         '--frequency', '4', '--directions', '2', '--out', str(out), '--set', 'seed=3'])
    assert code == 0
    table = pd.read_csv(out)
    assert table['direction'].nunique() == 2
    assert table.groupby('direction')['relative_error'].min().max() <= 1e-4


def test_empty_schedule_exits_with_validation_code(workspace, capsys):
    code = FwiCli().run(['grid-info', '--model', str(workspace / 'true.json')])
    assert code == 2
    error = _json_lines(capsys.readouterr().err)[-1]
    assert error['error'] == 'ValidationError'
    assert error['exit_code'] == 2


def test_missing_model_file_exits_with_validation_code(workspace):
    assert FwiCli().run(['image', str(workspace / 'absent.json'), str(workspace / 'x.pgm')]) == 2


def test_header_without_grid_size_exits_with_generic_code(workspace, capsys):
    header = workspace / 'true.json'
    meta = json.loads(header.read_text(encoding='utf-8'))
    del meta['nz']
    header.write_text(json.dumps(meta), encoding='utf-8')

    code = FwiCli().run(['image', str(header), str(workspace / 'true.pgm')])
    assert code == 1
    err = capsys.readouterr().err
    errors = _json_lines(err)
    assert len(errors) == 1
    assert errors[0] == {'error': 'FwiError', 'message': "KeyError: 'nz'", 'exit_code': 1}
    assert 'Traceback' not in err


def test_unwritable_output_exits_with_generic_code(workspace, capsys):
    code = FwiCli().run(['image', str(workspace / 'true.json'), str(workspace / 'true.json' / 'model.pgm')])
    assert code == 1
    errors = _json_lines(capsys.readouterr().err)
    assert [error['error'] for error in errors] == ['FwiError']
    assert errors[0]['exit_code'] == 1


def test_validation_error_reported_once(workspace, capsys):
    assert FwiCli().run(['grid-info', '--model', str(workspace / 'true.json')]) == 2
    err = capsys.readouterr().err
    assert len(_json_lines(err)) == 1
    assert err.count('Расписание частот пусто') == 1
