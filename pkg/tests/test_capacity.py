import json
import math

import numpy as np
import pytest

from oracles import RADIAL_CAPACITY, interval_capacity
from singspec import assemble, box_mesh, disk_mesh, euclidean, grade_toward, interval_mesh
from singspec import capacity as capmod
from singspec.capacity import (CapacityResult, almost_polar_verdict, capacity_curve,
                               equilibrium_potential, neighborhood_nodes, write_capacity_csv,
                               write_capacity_json)
from singspec.errors import DegenerateFit, EmptyConstraintSet, UnresolvedRadius
from singspec.geometry import SingularSetSpec
from singspec.mesh import refine_uniform

ORIGIN = SingularSetSpec.point((0.0, 0.0))
ORIGIN_1D = SingularSetSpec.point((0.0,))
RADII = [0.2, 0.1, 0.05, 0.025]


@pytest.fixture(scope="module")
def disk_ops():
    mesh = grade_toward(disk_mesh(8.0, 0.5), ORIGIN, 0.5, 8)
    return assemble(mesh, euclidean(2), dirichlet_boundary=True)


@pytest.fixture(scope="module")
def disk_curve(disk_ops):
    return capacity_curve(disk_ops, ORIGIN, RADII)


@pytest.fixture(scope="module")
def line_curve():
    mesh = grade_toward(interval_mesh(-8.0, 8.0, 64), ORIGIN_1D, 0.5, 6)
    ops = assemble(mesh, euclidean(1), dirichlet_boundary=True)
    return capacity_curve(ops, ORIGIN_1D, RADII)


def _result(radius, cap):
    return CapacityResult(radius, np.array([0]), np.zeros(1), np.zeros(1), cap, cap, 0.0)


def test_all_nodes_give_the_volume(unit_square):
    ops = assemble(unit_square, euclidean(2))
    res = equilibrium_potential(ops, np.arange(unit_square.n_vertices))
    assert np.all(res.vertex_values == 1.0)
    assert res.cap == pytest.approx(1.0, rel=1e-12)


def test_point_in_one_dimension_converges_to_two():
    caps = []
    for n in (64, 128, 256, 512):
        ops = assemble(interval_mesh(-8.0, 8.0, n), euclidean(1), dirichlet_boundary=True)
        caps.append(equilibrium_potential(ops, neighborhood_nodes(ops, ORIGIN_1D, 0.0)).cap)
    assert np.all(np.diff(caps) < 0)
    assert caps[-1] == pytest.approx(interval_capacity(8.0), rel=0.05)
    # the potential is exp(-|x|) up to discretisation
    ops = assemble(interval_mesh(-8.0, 8.0, 512), euclidean(1), dirichlet_boundary=True)
    res = equilibrium_potential(ops, neighborhood_nodes(ops, ORIGIN_1D, 0.0))
    x = ops.mesh.vertices[:, 0]
    assert np.abs(res.vertex_values - np.sinh(8 - np.abs(x)) / math.sinh(8)).max() < 2e-3


def test_disk_capacity_against_radial_oracle(disk_curve):
    cap = {c.radius: c.cap for c in disk_curve}
    assert cap[0.1] == pytest.approx(RADIAL_CAPACITY[0.1], rel=0.10)
    for rho in RADII:
        assert cap[rho] == pytest.approx(RADIAL_CAPACITY[rho], rel=0.10)
    assert cap[0.025] == pytest.approx(2 * math.pi / math.log(40), rel=0.15)


def test_disk_curve_is_polar(disk_curve):
    assert all(a.cap > b.cap for a, b in zip(disk_curve, disk_curve[1:]))
    verdict, fit = almost_polar_verdict(disk_curve, "log-decay-2d")
    assert verdict == "polar" and fit.decreasing


def test_line_point_is_not_polar(line_curve):
    assert min(c.cap for c in line_curve) >= 1.5
    assert almost_polar_verdict(line_curve, "none")[0] == "not-polar"


def test_verdict_edge_cases():
    zeros = [_result(r, 0.0) for r in RADII]
    assert almost_polar_verdict(zeros)[0] == "polar"
    with pytest.raises(DegenerateFit):
        almost_polar_verdict([_result(r, 1.5) for r in RADII])
    flat = [_result(r, c) for r, c in zip(RADII, [2.0, 1.9, 1.85, 1.8])]
    assert almost_polar_verdict(flat, "none")[0] == "not-polar"
    with pytest.raises(ValueError):
        almost_polar_verdict(flat, "cubic")
    assert almost_polar_verdict([_result(r, r) for r in RADII], "power-decay(3)")[0] == "polar"


def test_proposition_norm_identity(disk_curve):
    for c in disk_curve:
        assert c.cap == pytest.approx(c.h1_norm_sq, rel=1e-10)


def test_lumped_potential_bounds_on_right_triangles():
    mesh = box_mesh((-1, -1), (1, 1), (16, 16))
    ops = assemble(mesh, euclidean(2), lumped=True)
    res = equilibrium_potential(ops, neighborhood_nodes(ops, ORIGIN, 0.2))
    assert res.vertex_values.min() >= 0.0 and res.vertex_values.max() <= 1.0


def test_consistent_potential_bounds(disk_curve):
    for c in disk_curve:
        assert c.vertex_values.min() >= -1e-6 and c.vertex_values.max() <= 1 + 1e-6


def test_nested_sets_order_capacities_and_potentials(rng):
    mesh = box_mesh((-1, -1), (1, 1), (12, 12))
    ops = assemble(mesh, euclidean(2), lumped=True)
    for _ in range(5):
        big = rng.choice(mesh.n_vertices, 12, replace=False)
        small = big[:4]
        a, b = equilibrium_potential(ops, small), equilibrium_potential(ops, big)
        assert a.cap <= b.cap
        assert np.all(a.vertex_values <= b.vertex_values + 1e-6)


def test_refinement_does_not_increase_capacity():
    coarse = box_mesh((-2, -2), (2, 2), (8, 8))
    nodes = neighborhood_nodes(assemble(coarse, euclidean(2), dirichlet_boundary=True), ORIGIN,
                               0.5)
    caps = []
    mesh = coarse
    for _ in range(3):
        ops = assemble(mesh, euclidean(2), dirichlet_boundary=True)
        caps.append(equilibrium_potential(ops, nodes).cap)
        mesh = refine_uniform(mesh)
    assert caps[0] >= caps[1] >= caps[2]


def test_solution_does_not_depend_on_the_seed(disk_ops):
    nodes = neighborhood_nodes(disk_ops, ORIGIN, 0.1)
    a = equilibrium_potential(disk_ops, nodes)
    b = equilibrium_potential(disk_ops, nodes, x0=np.random.default_rng(3).random(disk_ops.size))
    assert np.array_equal(a.potential, b.potential)


def test_iterative_path_agrees_with_direct(disk_ops, monkeypatch):
    nodes = neighborhood_nodes(disk_ops, ORIGIN, 0.1)
    direct = equilibrium_potential(disk_ops, nodes)
    monkeypatch.setattr(capmod, "DIRECT_LIMIT", 10)
    seeded = equilibrium_potential(disk_ops, nodes, x0=np.full(disk_ops.size, 0.5))
    assert seeded.solver == "cg-jacobi"
    assert seeded.cap == pytest.approx(direct.cap, rel=1e-8)


def test_parallel_curve_is_identical(disk_ops, disk_curve):
    again = capacity_curve(disk_ops, ORIGIN, RADII, jobs=3)
    assert [c.cap for c in again] == [c.cap for c in disk_curve]


def test_errors(disk_ops):
    with pytest.raises(EmptyConstraintSet):
        equilibrium_potential(disk_ops, [])
    with pytest.raises(ValueError):
        capacity_curve(disk_ops, ORIGIN, [0.1, 0.2, 0.05])
    coarse = assemble(disk_mesh(8.0, 0.5), euclidean(2), dirichlet_boundary=True)
    with pytest.raises(UnresolvedRadius):
        capacity_curve(coarse, ORIGIN, [0.2, 0.1, 0.05])
    boundary = disk_ops.constrained_dofs[:1]
    with pytest.raises(ValueError):
        equilibrium_potential(disk_ops, boundary)


def test_reports(tmp_path, disk_curve):
    verdict, fit = almost_polar_verdict(disk_curve)
    write_capacity_csv(tmp_path / "c.csv", disk_curve)
    write_capacity_json(tmp_path / "c.json", disk_curve, verdict, fit)
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0].split(",")[-1] == "construct" and len(rows) == 5
    data = json.loads((tmp_path / "c.json").read_text())
    assert data["construct"] == "capacity" and data["verdict"] == "polar"
    assert [r["radius"] for r in data["rows"]] == RADII
