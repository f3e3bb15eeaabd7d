# -*- coding: utf-8 -*-
"""
Тесты многомасштабной инверсии, начальной модели и продолжения с контрольной точки
"""
import math

import numpy as np
import pandas as pd
import pytest

import fwi.multiscale as multiscale
from fwi.forward import generate_observed
from fwi.gradient import FrequencyObjective
from fwi.modelgrid import build_hex_grid_from_sizing
from fwi.multiscale import (
    ShallowPrior,
    initial_frequency,
    linear_initial_model,
    quantize,
    run_multiscale,
)
from fwi.optimize import minimize_single_frequency
from models.acquisition import AcquisitionGeometry
from models.inversion import BoundsConstraint, FrequencySchedule, OptimizerConfig, StoppingCriteria
from models.solver import SolverConfig
from models.velocity_model import VelocityModel
from utils.checkpoint_manager import SUMMARY_COLUMNS, CheckpointManager
from utils.errors import ValidationError


@pytest.fixture
def observed_by_label(two_layer_model, toy_geometry):
    datasets = generate_observed(two_layer_model, [10.0, 20.0], toy_geometry, ng=4.0, pml_wavelengths=0.5)
    return {d.frequency_mhz: d for d in datasets}


@pytest.fixture
def start_model(two_layer_model) -> VelocityModel:
    return linear_initial_model(1500.0, 2000.0, two_layer_model)


def test_initial_frequency_for_documented_case():
    model = VelocityModel.constant(nz=4, nx=3, dz=1000.0, dx=1000.0, velocity=4500.0)
    omega0 = initial_frequency(model.slowness_squared(), 3000.0)
    assert math.isclose(omega0 / (2.0 * math.pi), 1.5, rel_tol=1e-12)


def test_initial_frequency_scaling():
    m0 = VelocityModel.constant(nz=3, nx=3, dz=10.0, dx=10.0, velocity=2000.0).slowness_squared()
    assert math.isclose(initial_frequency(m0, 4000.0), 0.5 * initial_frequency(m0, 2000.0), rel_tol=1e-12)
    assert math.isclose(initial_frequency(m0, 2000.0), 2.0 * math.pi, rel_tol=1e-12)
    with pytest.raises(ValidationError):
        initial_frequency(m0, 0.0)


def test_linear_initial_model_rows():
    model = VelocityModel.constant(nz=4, nx=5, dz=1000.0, dx=1000.0, velocity=3000.0)
    initial = linear_initial_model(1500.0, 4500.0, model)
    assert np.allclose(initial.c[:, 0], [1500.0, 2500.0, 3500.0, 4500.0])
    assert np.all(initial.c == initial.c[:, :1])


def test_linear_initial_model_constant_and_invalid():
    model = VelocityModel.constant(nz=4, nx=5, dz=10.0, dx=10.0, velocity=3000.0)
    assert np.all(linear_initial_model(2000.0, 2000.0, model).c == 2000.0)
    with pytest.raises(ValidationError):
        linear_initial_model(3000.0, 2000.0, model)


def test_shallow_prior_overwrites_top_rows():
    model = VelocityModel.constant(nz=20, nx=4, dz=10.0, dx=10.0, velocity=3000.0)
    initial = linear_initial_model(1800.0, 3000.0, model, known_shallow=ShallowPrior(depth=100.0, velocity=1500.0))
    assert np.all(initial.c[:10] == 1500.0)
    assert np.all(initial.c[10:] > 1500.0)

    rows = np.full((2, 4), 1234.0)
    initial = linear_initial_model(1800.0, 3000.0, model, known_shallow=ShallowPrior(rows=rows))
    assert np.all(initial.c[:2] == 1234.0)
    with pytest.raises(ValidationError):
        ShallowPrior(depth=100.0)


def test_quantize_is_idempotent(two_layer_model, rng):
    c = two_layer_model.c * rng.uniform(0.9, 1.1, size=two_layer_model.c.shape)
    once = quantize(two_layer_model.with_velocity(c).slowness_squared())
    assert np.array_equal(quantize(once).values, once.values)
    velocity = once.values ** -0.5
    assert np.array_equal(velocity.astype(np.float32).astype(np.float64) ** -2, once.values)


def test_schedule_must_increase():
    with pytest.raises(ValidationError):
        FrequencySchedule(frequencies=(4.0, 2.0))
    with pytest.raises(ValidationError):
        FrequencySchedule(frequencies=(2.0, 2.0))
    with pytest.raises(ValidationError):
        FrequencySchedule(frequencies=())


def test_missing_dataset_rejected_before_any_solve(start_model, toy_geometry, observed_by_label, monkeypatch):
    calls = []
    monkeypatch.setattr(multiscale, 'minimize_single_frequency', lambda *args, **kwargs: calls.append(args))
    schedule = FrequencySchedule(frequencies=(10.0, 15.0))
    with pytest.raises(ValidationError):
        run_multiscale(start_model, schedule, observed_by_label, toy_geometry)
    assert not calls


def test_stage_objective_vanishes_at_true_model(two_layer_model, start_model, observed_by_label):
    for observed in observed_by_label.values():
        grid = build_hex_grid_from_sizing(start_model, observed.sizing, SolverConfig().node_budget)
        objective = FrequencyObjective(start_model, observed.omega, observed, grid, sizing=observed.sizing)
        assert objective.value(two_layer_model.slowness_squared().flat) == 0.0


def test_single_frequency_run_matches_direct_minimization(start_model, toy_geometry, observed_by_label):
    stop = StoppingCriteria(maxiter=2)
    schedule = FrequencySchedule(frequencies=(20.0,), stopping=stop)
    result = run_multiscale(start_model, schedule, observed_by_label, toy_geometry, solver_config=SolverConfig())

    observed = observed_by_label[20000]
    grid = build_hex_grid_from_sizing(start_model, observed.sizing, SolverConfig().node_budget)
    m_start = quantize(start_model.slowness_squared())
    m_direct, history = minimize_single_frequency(m_start, observed.omega, observed, grid, OptimizerConfig(), stop,
                                                  solver_config=SolverConfig(), sizing=observed.sizing)

    assert len(result.stages) == 1
    assert result.stages[0].history.iterations == history.iterations == 2
    assert np.array_equal(result.final_model.values, quantize(m_direct).values)


def test_resume_continues_bitwise(start_model, toy_geometry, observed_by_label, tmp_path):
    stop = StoppingCriteria(maxiter=2)
    full_schedule = FrequencySchedule(frequencies=(10.0, 20.0), stopping=stop)
    uninterrupted = run_multiscale(start_model, full_schedule, observed_by_label, toy_geometry,
                                   checkpoints=CheckpointManager(tmp_path / 'full'))

    checkpoints = CheckpointManager(tmp_path / 'resumed')
    run_multiscale(start_model, FrequencySchedule(frequencies=(10.0,), stopping=stop), observed_by_label,
                   toy_geometry, checkpoints=checkpoints)
    assert checkpoints.completed_frequencies() == [10.0]

    resumed = run_multiscale(start_model, full_schedule, observed_by_label, toy_geometry,
                             checkpoints=checkpoints, resume=True)
    assert [stage.resumed for stage in resumed.stages] == [True, False]
    for a, b in zip(uninterrupted.stages, resumed.stages):
        assert np.array_equal(a.model.values, b.model.values)
    assert resumed.stages[0].history.iterations == 2

    summary = pd.read_csv(checkpoints.summary_file)
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert summary['frequency_hz'].tolist() == [10.0, 20.0]
    assert summary['iterations'].tolist() == [2, 2]


def test_resume_requires_checkpoints(start_model, toy_geometry, observed_by_label):
    with pytest.raises(ValidationError):
        run_multiscale(start_model, FrequencySchedule(frequencies=(10.0,)), observed_by_label, toy_geometry,
                       resume=True)


def test_stage_output_feeds_next_stage(start_model, toy_geometry, observed_by_label, monkeypatch):
    starts = []
    original = multiscale.minimize_single_frequency

    def spy(m_init, *args, **kwargs):
        starts.append(m_init.values.copy())
        return original(m_init, *args, **kwargs)

    monkeypatch.setattr(multiscale, 'minimize_single_frequency', spy)
    schedule = FrequencySchedule(frequencies=(10.0, 20.0), stopping=StoppingCriteria(maxiter=1))
    result = run_multiscale(start_model, schedule, observed_by_label, toy_geometry)
    assert np.array_equal(starts[1], result.stages[0].model.values)


@pytest.mark.slow
def test_three_frequency_inversion_of_two_layer_model():
    true_model = VelocityModel.two_layer(nz=51, nx=101, dz=20.0, dx=20.0, c_top=1500.0, c_bottom=2000.0,
                                         interface_depth=700.0)
    geometry = AcquisitionGeometry(sources=np.column_stack([np.linspace(100.0, 1900.0, 19), np.full(19, 20.0)]),
                                   receivers=np.column_stack([np.linspace(0.0, 2000.0, 101), np.full(101, 20.0)]))
    frequencies = [2.0, 4.0, 8.0]
    datasets = {d.frequency_mhz: d for d in generate_observed(true_model, frequencies, geometry)}
    initial = linear_initial_model(1500.0, 2000.0, true_model)

    stop = StoppingCriteria(tol_g=1e-30, tol_J=1e-30, maxiter=60)
    schedule = FrequencySchedule(frequencies=tuple(frequencies), stopping=stop)
    result = run_multiscale(initial, schedule, datasets, geometry, optimizer=OptimizerConfig(method='lbfgs'),
                            bounds=BoundsConstraint.from_velocity(1400.0, 2200.0))

    def rms(model: VelocityModel) -> float:
        return float(np.sqrt(np.mean((model.c - true_model.c) ** 2)))

    assert rms(result.final_model.to_velocity_model()) <= 0.5 * rms(initial)
    for stage in result.stages:
        assert stage.history.final_misfit <= 0.1 * stage.history.initial_misfit
    inner_nodes = [stage.inner_nodes for stage in result.stages]
    assert inner_nodes == sorted(inner_nodes)
