"""Quasi-modes, cutoff transplantation and the residual inequality chain.

Given approximate eigenvectors ``u`` of the g-pencil at ``lam`` and a cutoff
``chi`` equal to 1 on K, the vectors ``(1 - chi) u`` live where g = g' and
are tested as quasi-modes of the g'-pencil.  Every inequality used to bound
their residual is evaluated and checked.

All norms are discrete: ``||v||`` is the M-norm, residuals are taken in the
``M^{-1}`` norm, and the operators should be assembled with lumped mass so
that the product rule below is an identity.

For a stiffness matrix with zero row sums and off-diagonal weights
``w_ij = -S_ij`` the discrete product rule reads::

    S(chi u)_i = chi_i (S u)_i + u_i (S chi)_i - sum_j w_ij (chi_i - chi_j)(u_i - u_j)

which gives, with ``Gamma(chi)_i = 1/2 sum_j |w_ij| (chi_i - chi_j)^2 / m_i``,

    ||(S - lam M)(chi u)|| <= max|M^{-1} S chi| ||phi u||
                              + 2 sqrt(max Gamma(chi)) ||grad u||_{supp chi}
                              + max|chi| ||(S - lam M) u||.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .errors import (ChainViolation, DegenerateTransplant, MeshMismatch, WindowTooNarrow)
from .geometry import CutoffSpec, cutoff_eval, mollified_laplacian_bound
from .spectrum import _m_inverse_norms, eigenpairs

DEGENERATE_NORM = 1e-8
USABLE_PHI_NORM = 0.5


@dataclass(frozen=True, eq=False)
class QuasiModes:
    """M-orthonormal vectors near ``lam`` with their eigenvalues and residuals."""

    vectors: np.ndarray       # columns on the free vertices of ``ops``
    eigenvalues: np.ndarray
    residuals: np.ndarray
    lam: float
    window: float
    found: int


def default_window(lam):
    return 0.05 * (1 + abs(lam))


def _diag_mass(ops):
    m = ops.full_mass.tocsr()
    off = m - sp.diags(m.diagonal())
    if off.count_nonzero():
        raise ValueError("the residual chain needs lumped-mass operators (assemble(lumped=True))")
    return m.diagonal()


def _weighted_residual_norm(ops, r):
    d = ops.mass.diagonal()
    return float(math.sqrt(np.sum(r * r / d)))


def quasimode_suite(ops, lam, n, window=None):
    """``n`` M-orthonormal eigenvectors with eigenvalues in ``[lam - w, lam + w]``.

    The vectors closest to ``lam`` are returned first.
    """
    w = default_window(lam) if window is None else float(window)
    k = max(n, 4)
    while True:
        k = min(k, ops.size - 1)
        rep = eigenpairs(ops, k, shift=lam - w)
        ev = rep.eigenvalues
        if ev[-1] > lam + w or k >= ops.size - 1:
            break
        k *= 2
    inside = np.flatnonzero(np.abs(ev - lam) <= w)
    if inside.size < n:
        raise WindowTooNarrow(
            f"found {inside.size} eigenvalues within {w:g} of {lam:g}, need {n}", inside.size)
    pick = inside[np.argsort(np.abs(ev[inside] - lam), kind="stable")[:n]]
    vec = rep.eigenvectors[:, pick]
    res = _m_inverse_norms(ops.mass, ops.stiffness @ vec - lam * (ops.mass @ vec))
    return QuasiModes(vec, ev[pick], res, float(lam), w, int(inside.size))


# --------------------------------------------------------------------------
# cutoffs on the mesh

@dataclass(frozen=True, eq=False)
class CutoffInterpolants:
    chi: np.ndarray          # vertex values of chi
    phi: np.ndarray          # vertex values of phi = (1 - rhat/eps)_+
    support: np.ndarray      # boolean mask: vertices of cells where chi != 0
    chi_spec: CutoffSpec
    phi_eps: float


def cutoff_interpolants(mesh, chi_spec, phi_eps):
    """Vertex interpolants of chi and of the companion cutoff phi.

    The discrete support of chi is the closure of the cells on which the
    interpolant is nonzero; ``rhat`` is the distance to its vertices.
    """
    chi = np.asarray(cutoff_eval(chi_spec, mesh.vertices), dtype=float)
    touched = (chi[mesh.cells] > 0).any(axis=1)
    support = np.zeros(mesh.n_vertices, dtype=bool)
    support[np.unique(mesh.cells[touched])] = True
    if support.any():
        rhat, _ = cKDTree(mesh.vertices[support]).query(mesh.vertices)
        phi = np.maximum(1.0 - rhat / phi_eps, 0.0)
        phi[support] = 1.0
    else:
        phi = np.zeros(mesh.n_vertices)
    return CutoffInterpolants(chi, phi, support, chi_spec, float(phi_eps))


# --------------------------------------------------------------------------
# transplantation

@dataclass(frozen=True, eq=False)
class Transplanted:
    vectors: np.ndarray      # columns on the free vertices of the g' operators
    full: np.ndarray         # columns on all vertices
    norms: np.ndarray        # g'-mass norms
    degenerate: np.ndarray   # boolean per mode


def _cells_key(mesh, mask):
    sel = mesh.cells[mask]
    return mesh.vertices[sel]


def transplant(modes, chi, ops_g, ops_gp, k_region=None, strict=False):
    """``(1 - chi) u`` for each mode, re-read in the g' discretisation.

    ``chi`` is a vector of vertex values.  The cells touching the support of
    ``1 - chi`` must coincide in both meshes.
    """
    vec = modes.vectors if isinstance(modes, QuasiModes) else np.asarray(modes, dtype=float)
    if vec.ndim == 1:
        vec = vec[:, None]
    chi = np.asarray(chi, dtype=float)
    mg, mp = ops_g.mesh, ops_gp.mesh
    if chi.shape[0] != mg.n_vertices:
        raise MeshMismatch("chi must have one value per mesh vertex")
    if k_region is not None:
        in_k = k_region.distance(mg.vertices) == 0.0
        if np.any(chi[in_k] != 1.0):
            raise ValueError("chi must equal 1 on every vertex of K")
    live = (chi[mg.cells] < 1.0).any(axis=1)
    if mg is not mp:
        if mg.n_vertices != mp.n_vertices or mg.n_cells != mp.n_cells:
            raise MeshMismatch("meshes of g and g' differ in size")
        live_p = (chi[mp.cells] < 1.0).any(axis=1)
        if (not np.array_equal(live, live_p)
                or not np.array_equal(_cells_key(mg, live), _cells_key(mp, live_p))):
            raise MeshMismatch("the meshes differ on the cells outside K")
    full = ops_g.expand(vec) * (1.0 - chi)[:, None]
    lost = np.setdiff1d(ops_gp.constrained_dofs, ops_g.constrained_dofs)
    if lost.size and np.any(full[lost] != 0.0):
        raise MeshMismatch("g' constrains vertices where the transplanted modes are nonzero")
    out = full[ops_gp.free_dofs]
    norms = np.sqrt(np.maximum(np.einsum("ij,ij->j", out, ops_gp.mass @ out), 0.0))
    degenerate = norms < DEGENERATE_NORM
    if strict and degenerate.any():
        raise DegenerateTransplant(
            f"modes {np.flatnonzero(degenerate).tolist()} vanish after transplantation")
    return Transplanted(out, full, norms, degenerate)


# --------------------------------------------------------------------------
# the chain

@dataclass
class ModeTerms:
    index: int
    eigenvalue: float
    norm: float
    energy: float
    energy_weak: float
    g_residual: float
    chain_lhs: float
    term_Dchi: float
    term_cross: float
    term_residual: float
    chain_sum: float
    phi_norm: float
    chi_norm: float
    transplanted_norm: float
    lower_bound: float
    g_prime_residual: float
    g_residual_transplanted: float
    checks: dict = field(default_factory=dict)
    usable: bool = True
    degenerate: bool = False

    def as_dict(self):
        return {k: (v if not isinstance(v, np.floating) else float(v))
                for k, v in self.__dict__.items()}


@dataclass
class QuasiModeReport:
    lam: float
    chi_kind: str
    chi_eps: float
    chi_delta: float
    phi_eps: float
    laplacian_chi_sup: float
    gradient_chi_sup: float
    chi_sup: float
    analytic_laplacian_bound: float
    analytic_gradient_bound: float
    modes: list
    chain_ok: bool
    outside_k_identity: bool
    slack_tol: float

    def as_dict(self):
        d = {k: v for k, v in self.__dict__.items() if k != "modes"}
        d["construct"] = "residual-chain"
        d["modes"] = [m.as_dict() for m in self.modes]
        return d

    def failures(self):
        return [(m.index, name) for m in self.modes for name, ok in m.checks.items() if not ok]


def _graph_weights(s_full):
    w = -s_full.tocoo()
    off = w.row != w.col
    return w.row[off], w.col[off], np.abs(w.data[off])


def residual_chain(modes, cut, ops_g, ops_gp, slack=1e-6, raise_on_violation=True):
    """Evaluate every term of the transplantation bound for each mode.

    ``modes`` is a :class:`QuasiModes` built on ``ops_g``; ``cut`` comes from
    :func:`cutoff_interpolants`.  The outside-K identity is exact only when
    chi equals 1 on every vertex within one cell of K: otherwise residual
    rows on the edge of K see the g'-mass of cells inside it.  The report
    records the identity rather than assuming it.
    """
    lam = float(modes.lam)
    vec = modes.vectors
    m_full = _diag_mass(ops_g)
    _diag_mass(ops_gp)
    s_full = ops_g.full_stiffness.tocsr()
    rows, cols, wts = _graph_weights(s_full)
    chi, phi = cut.chi, cut.phi
    free = ops_g.free_dofs

    s_chi = s_full @ chi
    lap_chi = float(np.max(np.abs(s_chi / m_full)))
    gamma = np.zeros(chi.size)
    np.add.at(gamma, rows, 0.5 * wts * (chi[rows] - chi[cols]) ** 2)
    grad_chi = float(math.sqrt(np.max(gamma / m_full)))
    chi_sup = float(np.max(np.abs(chi)))

    spec = cut.chi_spec
    if spec.kind == "chi-mollified":
        lap_bound = mollified_laplacian_bound(spec.eps, spec.delta, ops_g.mesh.dim)
    else:
        lap_bound = math.inf
    grad_bound = 3.0 / spec.eps if spec.kind in ("chi-hat", "chi-mollified") else math.nan

    moved = transplant(vec, chi, ops_g, ops_gp)
    terms = []
    all_identity = True
    for j in range(vec.shape[1]):
        u = vec[:, j]
        uf = ops_g.expand(u)
        mu = m_full * uf
        norm = float(math.sqrt(uf @ mu))
        su = s_full @ uf
        energy = float(uf @ su)
        energy_weak = float((su / m_full) @ mu)
        res_g = _weighted_residual_norm(ops_g, ops_g.stiffness @ u - lam * (ops_g.mass @ u))

        cu = chi * uf
        lhs_vec = (s_full @ cu - lam * m_full * cu)[free]
        lhs = float(math.sqrt(np.sum(lhs_vec ** 2 / m_full[free])))
        phi_norm = float(math.sqrt(np.sum(m_full * (phi * uf) ** 2)))
        chi_norm = float(math.sqrt(np.sum(m_full * (chi * uf) ** 2)))
        in_supp = cut.support[rows]
        e_supp = float(0.5 * np.sum(wts[in_supp] * (uf[rows[in_supp]] - uf[cols[in_supp]]) ** 2))
        t_dchi = lap_chi * phi_norm
        t_cross = 2.0 * grad_chi * math.sqrt(e_supp)
        t_res = chi_sup * res_g
        chain = t_dchi + t_cross + t_res

        v = moved.vectors[:, j]
        vn = float(moved.norms[j])
        degenerate = bool(moved.degenerate[j])
        rp = _weighted_residual_norm(ops_gp, ops_gp.stiffness @ v - lam * (ops_gp.mass @ v))
        vg = moved.full[free, j]
        rg = _weighted_residual_norm(ops_g, ops_g.stiffness @ vg - lam * (ops_g.mass @ vg))
        lower = abs(norm - phi_norm)

        scale = max(1.0, abs(lam), chain, res_g, norm)
        tol = slack * scale
        checks = {
            "energy_identity": abs(energy - energy_weak) <= 1e-9 * max(1.0, abs(energy)),
            "energy_nonnegative": energy >= -tol,
            "I1_product_rule_bound": lhs <= chain + tol,
            "I2_triangle": rg <= res_g + lhs + tol,
            "I3_transplanted_residual": rp <= res_g + chain + tol,
            "I4_reverse_triangle": vn >= abs(norm - chi_norm) - 1e-8 * scale,
            "I5_lower_bound": vn >= lower - 1e-8 * scale,
        }
        identity = rp == rg
        all_identity &= identity
        terms.append(ModeTerms(
            j, float(modes.eigenvalues[j]),
            norm, energy, energy_weak, res_g, lhs, t_dchi, t_cross, t_res, chain,
            phi_norm, chi_norm, vn, lower, rp, rg, checks,
            usable=phi_norm <= USABLE_PHI_NORM * norm, degenerate=degenerate))

    chain_ok = all(all(t.checks.values()) for t in terms)
    report = QuasiModeReport(lam, spec.kind, spec.eps, spec.delta, cut.phi_eps, lap_chi,
                             grad_chi, chi_sup, lap_bound, grad_bound, terms, chain_ok,
                             bool(all_identity), slack)
    if raise_on_violation and not chain_ok:
        raise ChainViolation(f"chain inequalities failed: {report.failures()}", report.failures())
    return report


def write_chain_json(path, report):
    with open(path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


CSV_COLUMNS = ("mode", "eigenvalue", "chain_lhs", "term_Dchi", "term_cross", "term_residual",
               "lower_bound", "transplanted_norm", "g_prime_residual", "usable", "chain_ok",
               "construct")


def write_chain_csv(path, report):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for m in report.modes:
            w.writerow([m.index, repr(m.eigenvalue), repr(m.chain_lhs), repr(m.term_Dchi),
                        repr(m.term_cross), repr(m.term_residual), repr(m.lower_bound),
                        repr(m.transplanted_norm), repr(m.g_prime_residual), m.usable,
                        all(m.checks.values()), "residual-chain"])
