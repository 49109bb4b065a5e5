"""Generalised eigenproblem ``S phi = lam M phi``, Weyl fits and truncation scans.

A finite mesh has no essential spectrum.  ``ess_proxy_scan`` only computes
proxies for it (eigenvalue scaling under truncation, stability under
refinement) and says so in every report it produces.
"""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .assemble import assemble
from .errors import (ConvergenceFailure, InsufficientSpectrum, RangeExceeded,
                     ShiftOnEigenvalue)
from .geometry import unit_ball_volume

DENSE_LIMIT = 1500
RESIDUAL_TOL = 1e-8
ORTHO_TOL = 1e-8
CLUSTER_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None   # columns, on the free vertices
    residuals: np.ndarray
    form_type: str
    metric_label: str
    mesh_id: str
    shift: float = 0.0
    method: str = "dense"

    @property
    def clusters(self):
        """Cluster index per eigenvalue; neighbours within 1e-6*(1+|lam|) share one."""
        lam = self.eigenvalues
        ids = np.zeros(lam.size, dtype=np.int64)
        for i in range(1, lam.size):
            same = lam[i] - lam[i - 1] <= CLUSTER_TOL * (1 + abs(lam[i]))
            ids[i] = ids[i - 1] if same else ids[i - 1] + 1
        return ids

    def multiplicities(self):
        """``[(mean eigenvalue, multiplicity), ...]`` in ascending order."""
        ids = self.clusters
        return [(float(self.eigenvalues[ids == c].mean()), int(np.sum(ids == c)))
                for c in range(ids.max() + 1 if ids.size else 0)]


def _m_inverse_norms(mass, r):
    """Column norms of ``r`` in the ``M^{-1}`` inner product."""
    if _is_diagonal(mass):
        d = mass.diagonal()
        return np.sqrt(np.sum(r * r / d[:, None], axis=0))
    lu = spla.splu(mass.tocsc())
    return np.sqrt(np.maximum(np.sum(r * lu.solve(r), axis=0), 0.0))


def _is_diagonal(a):
    a = a.tocoo()
    return bool(np.all(a.row == a.col))


def _fix_signs(v):
    for j in range(v.shape[1]):
        col = v[:, j]
        big = np.flatnonzero(np.abs(col) > 1e-10 * np.abs(col).max())
        if big.size and col[big[0]] < 0:
            v[:, j] = -col
    return v


def _order(lam, vec):
    if vec is None:
        return np.argsort(lam, kind="stable")
    keys = sorted(range(lam.size), key=lambda i: (lam[i], tuple(vec[:, i])))
    return np.array(keys, dtype=np.int64)


def _factor(s, m, sigma, scale):
    for _ in range(4):
        try:
            lu = spla.splu((s - sigma * m).tocsc())
            probe = lu.solve(np.ones(s.shape[0]))
            if np.all(np.isfinite(probe)):
                return lu, sigma
        except RuntimeError:
            pass
        sigma += 1e-8 * scale
    raise ShiftOnEigenvalue(f"shifted pencil is singular near {sigma:g}")


def _sparse_candidates(s, m, k, shift, maxiter):
    n = s.shape[0]
    scale = float(abs(s).max() / abs(m).max())
    lu, sigma = _factor(s, m, shift, scale)
    opinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=float)
    v0 = np.ones(n) / math.sqrt(float(np.ones(n) @ (m @ np.ones(n))))
    floor = shift - 1e-9 * max(1.0, abs(shift), scale)
    want = min(n - 1, k + max(5, k // 5))
    while True:
        try:
            lam, vec = spla.eigsh(s, k=want, M=m, sigma=sigma, which="LM", OPinv=opinv,
                                  v0=v0, tol=0.0, maxiter=maxiter)
        except spla.ArpackNoConvergence as exc:
            res = np.array([])
            if exc.eigenvectors is not None and exc.eigenvectors.size:
                r = s @ exc.eigenvectors - (m @ exc.eigenvectors) * exc.eigenvalues
                res = _m_inverse_norms(m, r)
            raise ConvergenceFailure("shift-invert Lanczos hit its iteration cap", res) from exc
        keep = lam >= floor
        if keep.sum() >= k or want >= n - 1:
            return lam[keep], vec[:, keep], floor
        want = min(n - 1, 2 * want)


def _rayleigh_ritz(s, m, vec):
    a = vec.T @ (s @ vec)
    b = vec.T @ (m @ vec)
    lam, y = sla.eigh(0.5 * (a + a.T), 0.5 * (b + b.T))
    vec = _fix_signs(vec @ y)
    order = _order(lam, vec)
    lam, vec = lam[order], vec[:, order]
    return lam, vec, _m_inverse_norms(m, s @ vec - (m @ vec) * lam)


def eigenpairs(ops, k, shift=0.0, vectors=True, dense_limit=DENSE_LIMIT, maxiter=None):
    """The ``k`` eigenpairs of the pencil ``(S, M)`` at or above ``shift``.

    Small systems use a dense symmetric-definite solver; larger ones
    shift-invert Lanczos with an all-ones start vector.  Either way the
    result is polished by a Rayleigh-Ritz step, which also makes the
    eigenvectors M-orthonormal, preceded by inverse iteration if the
    residuals are still above tolerance.
    """
    s, m = ops.stiffness.tocsr(), ops.mass.tocsr()
    n = s.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must satisfy 1 <= k < {n}")
    if n <= dense_limit:
        lam, vec = sla.eigh(s.toarray(), m.toarray())
        floor = shift - 1e-9 * max(1.0, abs(shift), abs(lam).max())
        keep = lam >= floor
        lam, vec, method = lam[keep], vec[:, keep], "dense"
    else:
        lam, vec, floor = _sparse_candidates(s, m, k, shift, maxiter)
        method = "shift-invert"
    if lam.size < k:
        raise RangeExceeded(f"only {lam.size} eigenvalues lie above the shift {shift:g}")
    idx = np.argsort(lam, kind="stable")[:k]
    lam, vec, res = _rayleigh_ritz(s, m, vec[:, idx])
    for _ in range(2):
        if not np.any(res > RESIDUAL_TOL * max(1.0, abs(shift))):
            break
        # strong grading makes M ill-conditioned; one block inverse-iteration
        # step restores the accuracy the dense solver lost
        scale = float(abs(s).max() / abs(m).max())
        lu, _ = _factor(s, m, lam[0] - 1e-3 * (1.0 + abs(lam[0])), scale)
        lam, vec, res = _rayleigh_ritz(s, m, lu.solve(m @ vec))
    gram = vec.T @ (m @ vec)
    if np.abs(gram - np.eye(k)).max() > ORTHO_TOL:
        raise ConvergenceFailure("eigenvectors lost M-orthonormality", res)
    if np.any(res > RESIDUAL_TOL * max(1.0, abs(shift))):
        raise ConvergenceFailure(f"eigen-residual {res.max():.2e} above {RESIDUAL_TOL:g}", res)
    return SpectrumReport(lam, vec if vectors else None, res, ops.form_type,
                          ops.metric_label, ops.mesh.mesh_id(), float(shift), method)


def counting_function(report, lam):
    """``#{i : lam_i <= lam}``; the count is closed at eigenvalues."""
    ev = report.eigenvalues
    if lam > ev[-1]:
        raise RangeExceeded(f"{lam:g} lies above the largest computed eigenvalue {ev[-1]:g}")
    return int(np.searchsorted(ev, lam, side="right"))


@dataclass(frozen=True)
class WeylFit:
    fitted: float
    theory: float
    gap: float
    intercept: float
    window: tuple


def weyl_constant(dim, volume):
    return unit_ball_volume(dim) * volume / (2 * math.pi) ** dim


def weyl_fit(report, dim, volume):
    """Fit ``N(lam) ~ C lam^(m/2) + c0`` over the upper half of the spectrum.

    The top 5% is dropped, where truncation pollution is largest.
    """
    ev = report.eigenvalues
    n = ev.size
    if n < 30:
        raise InsufficientSpectrum(f"a Weyl fit needs >= 30 eigenvalues, got {n}")
    lo, hi = n // 2, n - math.ceil(0.05 * n)
    lam = ev[lo:hi]
    counts = np.array([counting_function(report, x) for x in lam], dtype=float)
    slope, intercept = np.polyfit(lam ** (dim / 2), counts, 1)
    theory = weyl_constant(dim, volume)
    return WeylFit(float(slope), theory, float(abs(slope - theory) / theory),
                   float(intercept), (int(lo), int(hi)))


def write_spectrum_csv(path, report):
    ids = report.clusters
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "residual", "multiplicity_cluster", "construct"])
        for i, (lam, r) in enumerate(zip(report.eigenvalues, report.residuals)):
            w.writerow([i, repr(float(lam)), repr(float(r)), int(ids[i]), "spectrum"])


def spectrum_report(report, weyl=None):
    out = {
        "construct": "spectrum",
        "form_type": report.form_type,
        "metric": report.metric_label,
        "mesh_id": report.mesh_id,
        "method": report.method,
        "eigenvalues": [float(x) for x in report.eigenvalues],
        "residuals": [float(x) for x in report.residuals],
        "clusters": [{"value": v, "multiplicity": m} for v, m in report.multiplicities()],
    }
    if weyl is not None:
        out["construct"] = "weyl-fit"
        out["weyl"] = {"fitted": weyl.fitted, "theory": weyl.theory, "relative_gap": weyl.gap,
                       "intercept": weyl.intercept, "window": list(weyl.window)}
    return out


# --------------------------------------------------------------------------
# truncation scan

@dataclass
class EssProxyReport:
    """Proxy diagnostics for essential spectrum; not a computation of it."""

    radii: list
    g_eigenvalues: list
    gp_eigenvalues: list
    gp_lambda1_exponent: float
    gp_gap_exponent: float
    refinement_change: float
    refinement_h: tuple
    flags: dict = field(default_factory=dict)
    label: str = "proxy: finite meshes have no essential spectrum"

    def as_dict(self):
        return {
            "construct": "essential-spectrum-proxy",
            "label": self.label,
            "radii": self.radii,
            "g_eigenvalues": self.g_eigenvalues,
            "g_prime_eigenvalues": self.gp_eigenvalues,
            "g_prime_lambda1_exponent": self.gp_lambda1_exponent,
            "g_prime_gap_exponent": self.gp_gap_exponent,
            "g_refinement_change": self.refinement_change,
            "g_refinement_h": list(self.refinement_h),
            "flags": self.flags,
        }


def _loglog_slope(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.any(y <= 0):
        return math.nan
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _relative_change(a, b):
    a, b = np.asarray(a), np.asarray(b)
    denom = np.maximum(np.abs(b), 1.0)
    return float(np.max(np.abs(a - b) / denom))


def _side_spectrum(entry, side, radius, h, k):
    mesh, metric, dirichlet = entry.truncation(side, radius, h)
    ops = assemble(mesh, metric, dirichlet_boundary=dirichlet)
    return eigenpairs(ops, k, vectors=False).eigenvalues


def ess_proxy_scan(entry, radii, k=6, h=0.25, refine=True, jobs=1):
    """Low spectra of both sides of a gallery pair over truncation radii.

    The g' side is expected to "fill" (lambda_1 ~ R^-2, gaps closing), the g
    side to be "stable" (eigenvalues converging as the mesh refines).
    """
    radii = [float(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    tasks = [(side, r) for r in radii for side in ("g", "g_prime")]

    def one(task):
        return _side_spectrum(entry, task[0], task[1], h, k)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]
    g_side = [results[2 * i] for i in range(len(radii))]
    gp_side = [results[2 * i + 1] for i in range(len(radii))]

    lam1 = [ev[0] for ev in gp_side]
    gaps = [ev[1] - ev[0] for ev in gp_side]
    exponent = _loglog_slope(radii, lam1)
    gap_exponent = _loglog_slope(radii, gaps)
    change = math.nan
    if refine:
        fine = _side_spectrum(entry, "g", radii[-1], h / 2, k)
        change = _relative_change(g_side[-1], fine)
    flags = {
        "g_stable": bool(change < 0.01) if refine else None,
        "g_prime_filling": bool(abs(exponent + 2.0) <= 0.2 and np.all(np.diff(lam1) < 0)),
        "g_prime_lambda1_decreasing": bool(np.all(np.diff(lam1) < 0)),
    }
    return EssProxyReport(radii, [ev.tolist() for ev in g_side], [ev.tolist() for ev in gp_side],
                          exponent, gap_exponent, change, (h, h / 2), flags)


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
