import math

import numpy as np
import pytest
from scipy.integrate import quad

from singspec import assemble, box_mesh, euclidean, interval_mesh, refine_uniform
from singspec.assemble import apply, energy_norms, mass_apply, read_matrix, write_matrix
from singspec.errors import DimensionMismatch, FormatError, MetricEvaluationFailed, NonFiniteEntry
from singspec.gallery import gallery, two_subdomain_pair
from singspec.geometry import MetricField, conformal, stereographic_sphere
from singspec.mesh import sphere_chart_mesh
from singspec.spectrum import eigenpairs


def test_hand_assembled_interval(two_cell_interval):
    ops = assemble(two_cell_interval, euclidean(1))
    assert np.allclose(ops.stiffness.toarray(), [[2, -2, 0], [-2, 4, -2], [0, -2, 2]])
    assert np.allclose(np.asarray(ops.mass.sum(axis=1)).ravel(), [0.25, 0.5, 0.25])
    assert np.allclose(ops.mass.toarray(), np.array([[2, 1, 0], [1, 4, 1], [0, 1, 2]]) / 12)


def test_lumped_mass_is_the_row_sum(two_cell_interval):
    ops = assemble(two_cell_interval, euclidean(1), lumped=True)
    assert np.allclose(ops.mass.toarray(), np.diag([0.25, 0.5, 0.25]))


def test_apply(two_cell_interval):
    ops = assemble(two_cell_interval, euclidean(1))
    assert np.array_equal(apply(ops, np.zeros(3)), np.zeros(3))
    assert np.abs(apply(ops, np.ones(3))).max() <= 1e-9
    assert np.allclose(apply(ops, [0.0, 1.0, 0.0]), [-2, 4, -2])
    assert np.allclose(mass_apply(ops, np.ones(3)), [0.25, 0.5, 0.25])
    with pytest.raises(DimensionMismatch):
        apply(ops, np.ones(4))


def test_energy_norms_of_constants(unit_square):
    ops = assemble(unit_square, euclidean(2))
    assert energy_norms(ops, np.zeros(ops.size)) == (0.0, 0.0)
    l2, h1 = energy_norms(ops, np.ones(ops.size))
    assert l2 == pytest.approx(1.0) and h1 == pytest.approx(1.0)


def test_sine_norms_converge_at_second_order():
    errs = []
    for n in (8, 16, 32):
        ops = assemble(interval_mesh(0.0, 1.0, n), euclidean(1), dirichlet_boundary=True)
        u = ops.interpolate(lambda x: np.sin(math.pi * x[:, 0]))
        l2, h1 = energy_norms(ops, u)
        errs.append((abs(l2**2 - 0.5), abs(h1**2 - 0.5 - math.pi**2 / 2)))
    errs = np.array(errs)
    order = np.log2(errs[:-1] / errs[1:])
    assert np.all(order > 1.8)


def test_weighted_dirichlet_integral_converges_at_second_order():
    # g = (1 + x)^2 dx^2 on [0, 1]: the form is int u' v' / (1 + x) dx
    g = conformal(euclidean(1), lambda x: 1.0 + x[:, 0], "linear")
    u = lambda x: np.sin(math.pi * x)
    v = lambda x: x * x
    exact = quad(lambda x: math.pi * math.cos(math.pi * x) * 2 * x / (1 + x), 0, 1,
                 epsabs=1e-14)[0]
    errs = []
    for n in (8, 16, 32, 64):
        ops = assemble(interval_mesh(0.0, 1.0, n), g)
        x = ops.mesh.vertices[:, 0]
        errs.append(abs(v(x) @ (ops.stiffness @ u(x)) - exact))
    order = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(order > 1.8)


def test_sphere_chart_mass_is_the_sphere_area():
    ops = assemble(sphere_chart_mesh(0.1), stereographic_sphere())
    # the chart stops at |x| = 20, which leaves out a polar cap of area 4 pi / 401
    assert float(ops.full_mass.sum()) == pytest.approx(4 * math.pi * 400 / 401, rel=0.01)


def test_conformal_invariance_in_2d(unit_square):
    flat = assemble(unit_square, euclidean(2))
    bent = assemble(unit_square, conformal(euclidean(2), lambda x: 1.0 + x[:, 0] ** 2, "bent"))
    assert abs(flat.stiffness - bent.stiffness).max() <= 1e-14 * abs(flat.stiffness).max()
    # a power-of-two factor cancels without rounding
    two = assemble(unit_square, conformal(euclidean(2), lambda x: np.full(len(x), 2.0), "two"))
    assert (flat.stiffness != two.stiffness).nnz == 0
    assert (4 * flat.mass != two.mass).nnz == 0


def test_permutation_equivariance(unit_square, rng):
    perm = rng.permutation(unit_square.n_vertices)
    inv = np.argsort(perm)
    from singspec.mesh import Mesh
    relabeled = Mesh(unit_square.vertices[perm], inv[unit_square.cells])
    g = conformal(euclidean(2), lambda x: 1.0 + x[:, 0] * x[:, 1], "xy")
    a, b = assemble(unit_square, g), assemble(relabeled, g)
    assert np.allclose(b.stiffness.toarray(), a.stiffness.toarray()[np.ix_(perm, perm)],
                       atol=1e-14)
    assert np.allclose(b.mass.toarray(), a.mass.toarray()[np.ix_(perm, perm)], atol=1e-14)


@pytest.mark.parametrize("name", ["punctured-disk-conformal", "cantor-strip",
                                  "product-perturbation", "infinite-volume-puncture"])
def test_cell_blocks_agree_exactly_outside_k(name):
    entry = gallery(name)
    mesh = entry.mesh(0.25, pin=False)
    a, b = assemble(mesh, entry.g), assemble(mesh, entry.g_prime)
    outside = entry.k_region.distance(mesh.vertices)[mesh.cells].min(axis=1) > 0
    assert outside.any()
    assert np.array_equal(a.cell_stiffness[outside], b.cell_stiffness[outside])
    assert np.array_equal(a.cell_mass[outside], b.cell_mass[outside])


def test_two_subdomain_blocks_agree_outside_k():
    entry = two_subdomain_pair()
    mesh = entry.mesh(0.05)
    a, b = assemble(mesh, entry.g), assemble(mesh, entry.g_prime)
    outside = mesh.vertices[mesh.cells][:, :, 0].max(axis=1) < 1.6
    assert np.array_equal(a.cell_stiffness[outside], b.cell_stiffness[outside])


def test_form_inclusion_orders_eigenvalues():
    entry = gallery("punctured-disk-conformal")
    mesh = entry.mesh(0.5, levels=3)
    for metric in (entry.g, entry.g_prime):
        neu = eigenpairs(assemble(mesh, metric, "neumann"), 10, vectors=False).eigenvalues
        dir_ = eigenpairs(assemble(mesh, metric, "dirichlet-at-singular"), 10,
                          vectors=False).eigenvalues
        assert np.all(dir_ >= neu - 1e-9)


def test_dimension_mismatch(unit_square):
    with pytest.raises(DimensionMismatch):
        assemble(unit_square, euclidean(3))


def test_metric_failures_are_reported(unit_square):
    def boom(x):
        raise RuntimeError("no")
    with pytest.raises(MetricEvaluationFailed):
        assemble(unit_square, MetricField(2, "boom", boom, None))
    nan = conformal(euclidean(2), lambda x: np.where(x[:, 0] > 0.5, np.nan, 1.0), "nan")
    with pytest.raises(NonFiniteEntry):
        assemble(unit_square, nan)


def test_matrix_round_trip(tmp_path, unit_square):
    ops = assemble(refine_uniform(unit_square), euclidean(2))
    write_matrix(tmp_path / "s.ssym", ops.stiffness, ops.form_type, ops.metric_label)
    mat, form, label = read_matrix(tmp_path / "s.ssym")
    assert (form, label) == ("neumann", "euclidean")
    assert (mat != ops.stiffness).nnz == 0


def test_matrix_format_error(tmp_path):
    (tmp_path / "bad.ssym").write_text("ssym 2 1 neumann euclidean\n0 five 1\n")
    with pytest.raises(FormatError):
        read_matrix(tmp_path / "bad.ssym")


def test_box_3d_constant_in_kernel():
    ops = assemble(box_mesh((0, 0, 0), (1, 1, 1), (3, 3, 3)), euclidean(3))
    assert np.abs(ops.stiffness @ np.ones(ops.size)).max() <= 1e-12
    assert float(ops.mass.sum()) == pytest.approx(1.0)
