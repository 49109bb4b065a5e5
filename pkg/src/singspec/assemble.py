"""P1 stiffness and mass matrices for a metric field on a simplicial mesh.

The stiffness matrix realises ``int g^{ij} d_i u d_j v dmu_g`` and the mass
matrix the ``L^2(dmu_g)`` product.  Two form types are supported:

``neumann``
    all vertices free; the H^1 form.
``dirichlet-at-singular``
    the mesh's singular vertices are eliminated; the H^1_0 form at the set.

``dirichlet_boundary=True`` additionally eliminates the outer boundary, which
is how truncated charts and Dirichlet model problems are set up.

Matrix file format::

    ssym <n> <nnz> <form_type> <metric_label>
    row col value        (upper triangle, 17 significant digits)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, FormatError, MetricEvaluationFailed, NonFiniteEntry
from .mesh import Mesh, quadrature_points, quadrature_rule

FORM_TYPES = ("neumann", "dirichlet-at-singular")


@dataclass(frozen=True, eq=False)
class AssembledOperators:
    """Discrete Laplace-Beltrami pencil ``(S, M)`` on the free vertices."""

    stiffness: sp.csr_matrix
    mass: sp.csr_matrix
    form_type: str
    metric_label: str
    mesh: Mesh
    metric: object
    constrained_dofs: np.ndarray
    free_dofs: np.ndarray
    full_stiffness: sp.csr_matrix
    full_mass: sp.csr_matrix
    cell_stiffness: np.ndarray
    cell_mass: np.ndarray
    lumped: bool = False

    @property
    def size(self):
        return self.free_dofs.size

    def expand(self, u):
        """Free-vertex vector -> full vertex vector (zeros where constrained)."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.size:
            raise DimensionMismatch(f"vector of length {u.shape[0]}, expected {self.size}")
        out = np.zeros((self.mesh.n_vertices,) + u.shape[1:])
        out[self.free_dofs] = u
        return out

    def restrict(self, full):
        full = np.asarray(full, dtype=float)
        if full.shape[0] != self.mesh.n_vertices:
            raise DimensionMismatch("full vector length differs from the vertex count")
        return full[self.free_dofs]

    def free_index(self):
        """Map vertex index -> free index (-1 for constrained vertices)."""
        idx = np.full(self.mesh.n_vertices, -1, dtype=np.int64)
        idx[self.free_dofs] = np.arange(self.size)
        return idx

    def interpolate(self, fn):
        """Free-vertex values of ``fn`` evaluated at the vertex coordinates."""
        return np.asarray(fn(self.mesh.vertices[self.free_dofs]), dtype=float)


def p1_gradients(mesh):
    """Barycentric gradients ``(nc, dim+1, dim)`` and unsigned cell volumes."""
    x = mesh.vertices[mesh.cells]
    jac = np.transpose(x[:, 1:, :] - x[:, :1, :], (0, 2, 1))
    inv = np.linalg.inv(jac)
    grads = np.concatenate([-inv.sum(axis=1, keepdims=True), inv], axis=1)
    vol = np.abs(np.linalg.det(jac)) / math.factorial(mesh.dim)
    return grads, vol


def cell_matrices(mesh, metric):
    """Per-cell stiffness and mass blocks, shape ``(nc, dim+1, dim+1)``."""
    if metric.dim != mesh.dim:
        raise DimensionMismatch(f"metric is {metric.dim}D but the mesh is {mesh.dim}D")
    bary, w = quadrature_rule(mesh.dim)
    qp = quadrature_points(mesh)
    nc, nq, dim = qp.shape
    try:
        ginv, dens = metric.inverse_and_density(qp.reshape(-1, dim))
    except Exception as exc:  # user tensor functions may fail arbitrarily
        raise MetricEvaluationFailed(f"metric {metric.label!r} failed: {exc}") from exc
    ginv = ginv.reshape(nc, nq, dim, dim)
    dens = dens.reshape(nc, nq)
    if not (np.all(np.isfinite(ginv)) and np.all(np.isfinite(dens))):
        bad = np.argwhere(~np.isfinite(dens))
        where = f" (cell {bad[0][0]})" if bad.size else ""
        raise NonFiniteEntry(f"metric {metric.label!r} is not finite at a quadrature point{where}")
    grads, vol = p1_gradients(mesh)
    # density enters first so that a conformal factor cancels exactly in 2D
    weight = np.einsum("q,cqij->cij", w, ginv * dens[:, :, None, None]) * vol[:, None, None]
    ks = np.einsum("caj,cij,cbi->cab", grads, weight, grads)
    ks = 0.5 * (ks + np.transpose(ks, (0, 2, 1)))
    km = np.einsum("cq,qa,qb->cab", w[None, :] * dens, bary, bary) * vol[:, None, None]
    if not (np.all(np.isfinite(ks)) and np.all(np.isfinite(km))):
        raise NonFiniteEntry("non-finite entry in a cell matrix")
    return ks, km


def _scatter(mesh, blocks):
    d1 = mesh.dim + 1
    rows = np.repeat(mesh.cells, d1, axis=1).ravel()
    cols = np.tile(mesh.cells, (1, d1)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble(mesh: Mesh, metric, form_type="neumann", dirichlet_boundary=False, lumped=False):
    """Assemble the discrete Laplace-Beltrami pencil for ``metric`` on ``mesh``."""
    if form_type not in FORM_TYPES:
        raise ValueError(f"form_type must be one of {FORM_TYPES}")
    ks, km = cell_matrices(mesh, metric)
    s_full = _scatter(mesh, ks)
    m_full = _scatter(mesh, km)
    if lumped:
        m_full = sp.diags(np.asarray(m_full.sum(axis=1)).ravel()).tocsr()
    constrained = np.array([], dtype=np.int64)
    if form_type == "dirichlet-at-singular":
        constrained = mesh.singular_vertices
    if dirichlet_boundary:
        constrained = np.union1d(constrained, mesh.boundary_vertices)
    free = np.setdiff1d(np.arange(mesh.n_vertices), constrained)
    s_red = s_full[free][:, free].tocsr()
    m_red = m_full[free][:, free].tocsr()
    return AssembledOperators(s_red, m_red, form_type, metric.label, mesh, metric,
                              constrained, free, s_full, m_full, ks, km, bool(lumped))


def _check(ops, u):
    u = np.asarray(u, dtype=float)
    if u.shape[0] != ops.size:
        raise DimensionMismatch(f"vector of length {u.shape[0]}, operators act on {ops.size}")
    return u


def apply(ops, u):
    """``S u`` (the weak Laplacian, no mass inverse)."""
    return ops.stiffness @ _check(ops, u)


def mass_apply(ops, u):
    return ops.mass @ _check(ops, u)


def energy_norms(ops, u):
    """``(||u||_{L^2}, ||u||_{H^1})`` with ``||u||_1^2 = u'Su + u'Mu``."""
    u = _check(ops, u)
    l2sq = float(u @ (ops.mass @ u))
    h1sq = float(u @ (ops.stiffness @ u)) + l2sq
    return math.sqrt(max(l2sq, 0.0)), math.sqrt(max(h1sq, 0.0))


# --------------------------------------------------------------------------
# persistence

def write_matrix(path, matrix, form_type, metric_label):
    upper = sp.triu(sp.csr_matrix(matrix)).tocoo()
    order = np.lexsort((upper.col, upper.row))
    lines = [f"ssym {matrix.shape[0]} {upper.nnz} {form_type} {metric_label}"]
    lines += [f"{r} {c} {v:.17g}" for r, c, v in
              zip(upper.row[order], upper.col[order], upper.data[order])]
    Path(path).write_text("\n".join(lines) + "\n")


def read_matrix(path):
    """Returns ``(csr_matrix, form_type, metric_label)``."""
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise FormatError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != "ssym":
        raise FormatError("expected 'ssym <n> <nnz> <form_type> <metric_label>'", 1)
    try:
        n, nnz = int(head[1]), int(head[2])
    except ValueError:
        raise FormatError("non-integer size", 1) from None
    if len(lines) - 1 < nnz:
        raise FormatError("file truncated", len(lines))
    rows, cols, vals = np.empty(nnz, np.int64), np.empty(nnz, np.int64), np.empty(nnz)
    for k in range(nnz):
        parts = lines[k + 1].split()
        try:
            rows[k], cols[k], vals[k] = int(parts[0]), int(parts[1]), float(parts[2])
        except (ValueError, IndexError):
            raise FormatError("expected 'row col value'", k + 2) from None
        if not (0 <= rows[k] <= cols[k] < n):
            raise FormatError("entry outside the upper triangle", k + 2)
    upper = sp.coo_matrix((vals, (rows, cols)), shape=(n, n))
    full = (upper + sp.triu(upper, k=1).T).tocsr()
    return full, head[3], head[4]
