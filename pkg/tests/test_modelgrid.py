# -*- coding: utf-8 -*-
"""
Тесты гексагональной сетки и переноса полей
"""
import math

import numpy as np
import pytest

from fwi.modelgrid import (
    NEIGHBOR_COS2,
    NEIGHBOR_SIN2,
    ModelTransfer,
    build_hex_grid,
    build_lattice,
    describe_grid,
    hex_interpolation_matrix,
    project_to_model,
    sample_to_hex,
)
from models.hex_grid import GridSizing
from models.velocity_model import VelocityModel
from utils.errors import InfeasibleResolutionError, OutOfDomainError, ValidationError


def test_spacing_follows_points_per_wavelength(rng):
    for _ in range(100):
        c = rng.uniform(1400.0, 4500.0, size=(5, 7))
        model = VelocityModel(nz=5, nx=7, dz=50.0, dx=50.0, c=c)
        f = rng.uniform(1.0, 15.0)
        ng = rng.uniform(3.0, 12.0)
        sizing = GridSizing.from_velocity(model.c, f, ng)
        assert math.isclose(sizing.spacing * ng * f, c.min(), rel_tol=1e-12)


def test_grid_sizes_for_documented_examples():
    model = VelocityModel.constant(nz=2, nx=2, dz=1000.0, dx=1000.0, velocity=1500.0)
    sizing = GridSizing.from_velocity(model.c, 1.0, 8.5)
    assert math.isclose(sizing.spacing, 1500.0 / 8.5, rel_tol=1e-12)
    assert math.isclose(sizing.pml_thickness, 1500.0, rel_tol=1e-12)

    sizing = GridSizing.from_velocity(model.c, 2.0, 5.0)
    assert math.isclose(sizing.spacing, 150.0, rel_tol=1e-12)


def test_ng_at_nyquist_rejected():
    with pytest.raises(ValidationError):
        GridSizing.from_velocity(np.full(4, 1500.0), 1.0, 2.0)


def test_node_budget_exceeded():
    model = VelocityModel.constant(nz=11, nx=11, dz=100.0, dx=100.0, velocity=1500.0)
    with pytest.raises(InfeasibleResolutionError):
        build_hex_grid(model, f=10.0, ng=8.5, node_budget=100)


def test_masks_partition_nodes(toy_grid):
    total = toy_grid.interior_mask.astype(int) + toy_grid.pml_mask.astype(int) + toy_grid.boundary_mask.astype(int)
    assert np.all(total == 1)
    assert toy_grid.n_inner == (toy_grid.n_rows - 2) * (toy_grid.n_cols - 2)
    assert toy_grid.n_nodes < 300


def test_neighbors_at_distance_h_in_six_directions(toy_grid):
    inner = np.flatnonzero(toy_grid.inner_mask)
    nodes = toy_grid.nodes
    for direction in range(6):
        delta = nodes[toy_grid.neighbors[inner, direction]] - nodes[inner]
        distance = np.linalg.norm(delta, axis=1)
        assert np.allclose(distance, toy_grid.h, rtol=1e-12)
        cos2 = (delta[:, 0] / distance) ** 2
        sin2 = (delta[:, 1] / distance) ** 2
        assert np.allclose(cos2, NEIGHBOR_COS2[direction], atol=1e-12)
        assert np.allclose(sin2, NEIGHBOR_SIN2[direction], atol=1e-12)


def test_boundary_ring_has_no_neighbors(toy_grid):
    assert np.all(toy_grid.neighbors[toy_grid.boundary_mask] == -1)
    assert np.all(toy_grid.neighbors[toy_grid.inner_mask] >= 0)


def test_lattice_covers_domain_with_pml():
    grid = build_lattice((0.0, 0.0), 1000.0, 500.0, 50.0, 200.0)
    assert grid.nodes[:, 0].min() <= -200.0 + 1e-9
    assert grid.nodes[:, 0].max() >= 1200.0 - 1e-9
    assert grid.nodes[:, 1].max() >= 700.0 - 1e-9
    assert math.isclose(grid.row_spacing, 50.0 * math.sqrt(3.0) / 2.0)


def test_describe_grid_matches_built_grid(two_layer_model):
    info = describe_grid(two_layer_model, 20.0, 4.0, 0.5)
    grid = build_hex_grid(two_layer_model, 20.0, 4.0, 0.5)
    assert info['nodes'] == grid.n_nodes
    assert info['inner_nodes'] == grid.n_inner
    assert info['within_budget']


def test_interpolation_reproduces_linear_functions(toy_grid, rng):
    def linear(points):
        return 2.0 * points[:, 0] - 3.0 * points[:, 1] + 1.0

    x0, z0, width, depth = toy_grid.domain
    points = np.column_stack([rng.uniform(x0, x0 + width, 200), rng.uniform(z0, z0 + depth, 200)])
    matrix = hex_interpolation_matrix(toy_grid, points)

    assert np.allclose(np.asarray(matrix.sum(axis=1)).ravel(), 1.0, atol=1e-12)
    assert np.all(np.diff(matrix.indptr) <= 3)
    assert np.all(matrix.data >= -1e-12)
    assert np.allclose(matrix @ linear(toy_grid.nodes), linear(points), atol=1e-9)


def test_interpolation_on_node_returns_node_value(toy_grid, rng):
    index = np.flatnonzero(toy_grid.interior_mask)[3]
    values = rng.standard_normal(toy_grid.n_nodes)
    matrix = hex_interpolation_matrix(toy_grid, toy_grid.nodes[index])
    assert math.isclose((matrix @ values)[0], values[index], rel_tol=1e-9, abs_tol=1e-9)


def test_interpolation_outside_domain_rejected(toy_grid):
    with pytest.raises(OutOfDomainError):
        hex_interpolation_matrix(toy_grid, np.array([-10.0, 20.0]))


def test_sample_to_hex_constant_field(two_layer_model, toy_grid):
    model = VelocityModel.constant(two_layer_model.nz, two_layer_model.nx, 20.0, 20.0, 1800.0)
    values = sample_to_hex(model.slowness_squared(), toy_grid)
    assert np.allclose(values, 1800.0 ** -2, rtol=1e-12)


def test_projection_is_adjoint_of_interior_sampling(two_layer_model, toy_grid, rng):
    transfer = ModelTransfer(toy_grid, two_layer_model)
    field = rng.standard_normal((two_layer_model.nz, two_layer_model.nx))
    node_values = rng.standard_normal(toy_grid.n_nodes) * toy_grid.interior_mask

    left = float(np.dot(transfer.sample(field), node_values))
    right = float(np.dot(field.ravel(), transfer.project(node_values)))
    assert math.isclose(left, right, rel_tol=1e-10, abs_tol=1e-10)


def test_projection_ignores_pml_nodes(two_layer_model, toy_grid):
    node_values = np.where(toy_grid.interior_mask, 0.0, 1.0)
    gradient = project_to_model(node_values, toy_grid, two_layer_model)
    assert np.all(gradient.values == 0.0)
    assert gradient.quantity.value == 'gradient'


def test_projection_is_linear(two_layer_model, toy_grid, rng):
    a = rng.standard_normal(toy_grid.n_nodes)
    b = rng.standard_normal(toy_grid.n_nodes)
    combined = project_to_model(2.0 * a - 0.5 * b, toy_grid, two_layer_model).values
    separate = (2.0 * project_to_model(a, toy_grid, two_layer_model).values
                - 0.5 * project_to_model(b, toy_grid, two_layer_model).values)
    assert np.allclose(combined, separate, atol=1e-13 * np.abs(separate).max())
