# -*- coding: utf-8 -*-
"""
Тесты весов RBF-FD, оператора Гельмгольца с PML и факторизации
"""
import math

import numpy as np
import pytest
import scipy.sparse as sps
from scipy.special import hankel1

from fwi.helmholtz import (
    Factorization,
    HelmholtzOperator,
    assemble,
    factorize,
    local_rbf_weights,
    node_weight_sensitivity,
    node_weights,
    pml_stretch,
    point_source_rhs,
    rbf_fd_weights,
    solve_batch,
    source_matrix,
)
from fwi.forward import forward_map
from fwi.modelgrid import build_hex_grid, build_lattice, sample_to_hex
from models.acquisition import AcquisitionGeometry
from models.solver import PmlConfig, SolverConfig
from models.velocity_model import VelocityModel
from utils.errors import FactorizationError, InvalidShapeParameterError


def hexagon(h: float) -> np.ndarray:
    """Центр и шесть соседей правильного шестиугольника"""
    angles = np.arange(6) * math.pi / 3.0
    ring = np.column_stack([h * np.cos(angles), h * np.sin(angles)])
    return np.vstack([[0.0, 0.0], ring])


def fully_inner_rows(grid) -> np.ndarray:
    """Внутренние узлы, все соседи которых тоже не на границе"""
    inner = np.flatnonzero(grid.inner_mask)
    return inner[np.all(grid.inner_mask[grid.neighbors[inner]], axis=1)]


def test_classical_limit_weights():
    h = 12.5
    weights = rbf_fd_weights(0.0, h)
    assert weights.center == -4.0 / h ** 2
    assert weights.neighbor == 2.0 / (3.0 * h ** 2)


@pytest.mark.parametrize('eps_h', [0.3, 0.8, 1.5])
def test_closed_form_matches_local_system(eps_h):
    h = 10.0
    eps = eps_h / h
    weights = rbf_fd_weights(eps, h)
    local = local_rbf_weights(hexagon(h), np.zeros(2), eps)
    assert math.isclose(local[0], weights.center, rel_tol=1e-8)
    assert np.allclose(local[1:], weights.neighbor, rtol=1e-8)


def test_weights_close_to_classical_for_small_shape_parameter():
    h = 1.0
    t = 0.01
    weights = rbf_fd_weights(math.sqrt(t) / h, h)
    # x^2 + z^2 на шаблоне даёт 6 w h^2 = 4 + 3t + O(t^2)
    assert abs(6.0 * weights.neighbor * h ** 2 - (4.0 + 3.0 * t)) < 50.0 * t ** 2
    assert math.isclose(weights.center, -6.0 * weights.neighbor, rel_tol=1e-15)


def test_shape_parameter_above_limit_rejected():
    with pytest.raises(InvalidShapeParameterError):
        rbf_fd_weights(2.5, 1.0)
    with pytest.raises(InvalidShapeParameterError):
        rbf_fd_weights(-1.0, 1.0)


def test_ill_conditioned_local_system_rejected():
    with pytest.raises(InvalidShapeParameterError):
        local_rbf_weights(hexagon(1.0), np.zeros(2), 1e-3)


def test_shape_parameter_function_validated():
    k = np.array([0.1, 0.2])
    with pytest.raises(InvalidShapeParameterError):
        node_weights(lambda kk: -kk, 1.0, k)
    weights = node_weights(lambda kk: kk / math.sqrt(12.0), 1.0, k)
    assert weights.shape == k.shape
    assert np.all(weights > 2.0 / 3.0)


def test_stretch_is_one_at_zero_frequency(toy_grid):
    s_x, s_z = pml_stretch(toy_grid.nodes, toy_grid, PmlConfig.from_omega(toy_grid.pml_thickness, 0.0))
    assert np.all(s_x == 1.0)
    assert np.all(s_z == 1.0)


def test_stretch_profile(toy_grid, toy_omega):
    cfg = PmlConfig.from_omega(toy_grid.pml_thickness, toy_omega)
    x0, z0, width, depth = toy_grid.domain
    s_x, s_z = pml_stretch(np.array([x0 - toy_grid.pml_thickness, z0 + 10.0]), toy_grid, cfg)
    assert np.isclose(s_x, 1.0 + 1.79j)
    assert s_z == 1.0

    s_x, _ = pml_stretch(np.array([x0 + width + 0.5 * toy_grid.pml_thickness, z0]), toy_grid, cfg)
    assert np.isclose(s_x, 1.0 + 1.79j * 0.25)

    s_x, s_z = pml_stretch(toy_grid.nodes[toy_grid.interior_mask], toy_grid, cfg)
    assert np.all(s_x == 1.0) and np.all(s_z == 1.0)


def test_operator_is_complex_symmetric(two_layer_model, toy_grid, toy_omega):
    m_nodes = sample_to_hex(two_layer_model.slowness_squared(), toy_grid)
    operator = assemble(toy_grid, m_nodes, toy_omega, SolverConfig().pml(toy_grid.pml_thickness, toy_omega))
    matrix = operator.matrix
    assert abs(matrix - matrix.T).max() == 0.0
    assert matrix.dtype == np.complex128


def test_boundary_rows_are_identity(two_layer_model, toy_grid, toy_omega):
    m_nodes = sample_to_hex(two_layer_model.slowness_squared(), toy_grid)
    operator = assemble(toy_grid, m_nodes, toy_omega, SolverConfig().pml(toy_grid.pml_thickness, toy_omega))
    boundary = np.flatnonzero(toy_grid.boundary_mask)
    rows = operator.matrix[boundary].toarray()
    expected = np.zeros_like(rows)
    expected[np.arange(boundary.size), boundary] = 1.0
    assert np.array_equal(rows, expected)


def test_static_operator_is_discrete_laplacian(toy_grid):
    m_nodes = np.full(toy_grid.n_nodes, 1500.0 ** -2)
    operator = assemble(toy_grid, m_nodes, 0.0, PmlConfig.from_omega(toy_grid.pml_thickness, 0.0))
    rows = fully_inner_rows(toy_grid)
    matrix = operator.matrix.tocsr()

    row_sums = np.asarray(matrix[rows].sum(axis=1)).ravel()
    assert np.allclose(row_sums, 0.0, atol=1e-12 * abs(matrix[rows[0], rows[0]]))

    # -H (x^2 + z^2) = 4 для классических весов
    u = toy_grid.nodes[:, 0] ** 2 + toy_grid.nodes[:, 1] ** 2
    assert np.allclose(-(matrix @ u)[rows], 4.0, atol=1e-8)


def test_assemble_rejects_nonpositive_slowness(toy_grid, toy_omega):
    m_nodes = np.full(toy_grid.n_nodes, 1e-7)
    m_nodes[5] = 0.0
    with pytest.raises(ValueError):
        assemble(toy_grid, m_nodes, toy_omega, SolverConfig().pml(toy_grid.pml_thickness, toy_omega))


def test_source_rhs_scaled_by_cell_area(toy_grid):
    index = np.flatnonzero(toy_grid.interior_mask)[0]
    rhs = point_source_rhs(toy_grid, toy_grid.nodes[index])
    assert np.isclose(rhs[index], 1.0 / toy_grid.cell_area)
    assert np.isclose(rhs.sum(), 1.0 / toy_grid.cell_area)


def _toy_operator(two_layer_model, toy_grid, toy_omega) -> HelmholtzOperator:
    m_nodes = sample_to_hex(two_layer_model.slowness_squared(), toy_grid)
    return assemble(toy_grid, m_nodes, toy_omega, SolverConfig().pml(toy_grid.pml_thickness, toy_omega))


@pytest.mark.parametrize('direct_node_limit', [10 ** 6, 0])
def test_factorization_solves_forward_and_adjoint(two_layer_model, toy_grid, toy_omega, rng, direct_node_limit):
    operator = _toy_operator(two_layer_model, toy_grid, toy_omega)
    fac = factorize(operator, direct_node_limit=direct_node_limit)
    assert fac.kind == ('direct' if direct_node_limit else 'iterative')
    b = rng.standard_normal(operator.n) + 1j * rng.standard_normal(operator.n)

    x = fac.solve(b)
    assert np.linalg.norm(operator.matrix @ x - b) <= 1e-8 * np.linalg.norm(b)
    y = fac.solve(b, adjoint=True)
    assert np.linalg.norm(operator.matrix.conj().T @ y - b) <= 1e-8 * np.linalg.norm(b)
    assert fac.memory_bytes > 0


def test_singular_operator_reported(toy_grid):
    diagonal = np.ones(toy_grid.n_nodes, dtype=np.complex128)
    diagonal[7] = 0.0
    operator = HelmholtzOperator(matrix=sps.diags(diagonal).tocsr(), omega=1.0, grid=toy_grid,
                                 m_nodes=np.ones(toy_grid.n_nodes), stretch=np.ones(toy_grid.n_nodes))
    with pytest.raises(FactorizationError):
        Factorization(operator)


def test_batch_solution_independent_of_batching(two_layer_model, toy_grid, toy_omega, toy_geometry):
    fac = factorize(_toy_operator(two_layer_model, toy_grid, toy_omega))
    rhs = source_matrix(toy_grid, toy_geometry.sources)

    batch = solve_batch(fac, rhs)
    threaded = solve_batch(fac, rhs, workers=2)
    single = [solve_batch(fac, rhs[:, index]) for index in range(rhs.shape[1])]
    reversed_batch = solve_batch(fac, rhs[:, ::-1])

    assert np.array_equal(batch, threaded)
    for index, column in enumerate(single):
        assert np.array_equal(batch[:, index], column)
    assert np.array_equal(batch, reversed_batch[:, ::-1])


def _green_error(ng: float, solver_config: SolverConfig = None) -> float:
    """Ошибка прямого моделирования относительно (i/4) H0(kr) по узлам 2h < r < ширина/3"""
    c, f = 1500.0, 10.0
    omega = 2.0 * math.pi * f
    model = VelocityModel.constant(nz=25, nx=25, dz=25.0, dx=25.0, velocity=c)
    grid = build_hex_grid(model, f, ng, 1.0)
    source = np.array([300.0, 300.0])
    nodes = grid.nodes[grid.interior_mask]
    r = np.linalg.norm(nodes - source, axis=1)
    keep = (r > 2.0 * grid.h) & (r < model.width / 3.0)
    geometry = AcquisitionGeometry(sources=source.reshape(1, 2), receivers=nodes[keep])
    data, _ = forward_map(model.slowness_squared(), omega, geometry, grid, solver_config)
    exact = 0.25j * hankel1(0, omega / c * r[keep])
    return np.linalg.norm(data.data[0] - exact) / np.linalg.norm(exact)


def test_default_shape_parameter_is_tuned_to_wavenumber():
    config = SolverConfig()
    assert math.isclose(config.shape_per_wavenumber, 1.0 / math.sqrt(12.0), rel_tol=1e-15)
    k = np.array([0.01, 0.02])
    assert np.allclose(config.shape(k), k / math.sqrt(12.0))
    assert SolverConfig(shape_per_wavenumber=None, shape_parameter=0.1).shape == 0.1


def test_weight_sensitivity_matches_difference_quotient():
    h, omega, beta = 10.0, 2.0 * math.pi * 20.0, 1.0 / math.sqrt(12.0)
    m = np.array([1500.0, 2000.0, 3000.0]) ** -2
    step = 1e-6 * m

    def weights(values):
        return node_weights(lambda k: beta * k, h, omega * np.sqrt(values))

    expected = (weights(m + step) - weights(m - step)) / (2.0 * step)
    assert np.allclose(node_weight_sensitivity(beta, h, omega, m), expected, rtol=1e-5)
    assert np.all(node_weight_sensitivity(0.0, h, omega, m) == 0.0)


@pytest.mark.slow
def test_point_source_matches_analytic_green_function():
    assert _green_error(8.5) <= 0.05


@pytest.mark.slow
def test_green_function_error_decreases_with_resolution():
    classical = SolverConfig(shape_per_wavenumber=None)
    assert _green_error(12.0, classical) < _green_error(8.5, classical)


def _square_lattice_solution(shift_cols: int, shift_row_pairs: int, pml: PmlConfig = None):
    """Решение в области 3 lambda x 3 lambda, расширенной на заданное число узлов"""
    c, f, ng = 1500.0, 10.0, 10.0
    omega = 2.0 * math.pi * f
    h = c / f / ng
    delta = c / f
    size = 3.0 * c / f
    row_spacing = h * math.sqrt(3.0) / 2.0
    a = shift_cols * h
    b = 2 * shift_row_pairs * row_spacing
    grid = build_lattice((-a, -b), size + 2.0 * a, size + 2.0 * b, h, delta)
    m_nodes = np.full(grid.n_nodes, c ** -2)
    cfg = pml or PmlConfig.from_omega(delta, omega)
    operator = assemble(grid, m_nodes, omega, cfg)
    source = np.array([0.5 * size, 0.5 * size])
    return grid, factorize(operator).solve(point_source_rhs(grid, source)), source


@pytest.mark.slow
def test_pml_reflections_small():
    # Опорная область 12 lambda x 12 lambda: 45 столбцов и 26 пар строк (45.03 h) с каждой стороны
    shift_cols, shift_row_pairs = 45, 26
    small, u_small, source = _square_lattice_solution(0, 0)
    big, u_big, _ = _square_lattice_solution(shift_cols, shift_row_pairs)
    assert big.domain[2] == pytest.approx(4.0 * small.domain[2])
    assert big.domain[3] == pytest.approx(4.0 * small.domain[3], rel=0.01)

    index = np.flatnonzero(small.interior_mask)
    rows, cols = np.divmod(index, small.n_cols)
    mapped = (rows + 2 * shift_row_pairs) * big.n_cols + (cols + shift_cols)
    assert np.allclose(big.nodes[mapped], small.nodes[index], atol=1e-6)

    r = np.linalg.norm(small.nodes[index] - source, axis=1)
    keep = r > 2.0 * small.h
    reference = u_big[mapped][keep]
    error = np.linalg.norm(u_small[index][keep] - reference) / np.linalg.norm(reference)

    omega = 2.0 * math.pi * 10.0
    rigid = PmlConfig(thickness=small.pml_thickness, sigma0=1e-9 * omega, omega=omega)
    _, u_rigid, _ = _square_lattice_solution(0, 0, rigid)
    rigid_error = np.linalg.norm(u_rigid[index][keep] - reference) / np.linalg.norm(reference)

    assert error <= 0.01
    assert error < 0.1 * rigid_error
