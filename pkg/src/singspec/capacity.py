"""Equilibrium potentials, capacities and almost-polarity verdicts.

The capacity of a vertex set A is the minimum of ``u'(S+M)u`` over discrete
functions with ``u = 1`` on A.  The minimiser is the equilibrium potential;
since it equals 1 on A exactly, the obstacle problem reduces to a linear
solve with A eliminated as Dirichlet data.
"""
from __future__ import annotations

import csv
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (DegenerateFit, EmptyConstraintSet, SolverBreakdown,
                     UnresolvedRadius)
from .mesh import cell_distance_lower_bound

DIRECT_LIMIT = 200_000
RESIDUAL_TOL = 1e-10

# verdict policy: fitted limit relative to the capacity at the largest radius
POLAR_FRACTION = 0.1
FLOOR_FRACTION = 0.5


@dataclass(frozen=True, eq=False)
class CapacityResult:
    """Equilibrium potential of a node set and its capacity."""

    radius: float
    nodes: np.ndarray          # constrained vertex indices (the set A)
    potential: np.ndarray      # values on the free vertices of the operators
    vertex_values: np.ndarray  # values on all mesh vertices
    cap: float
    h1_norm_sq: float
    residual: float
    solver: str = "direct"

    @property
    def nodes_constrained(self):
        return int(self.nodes.size)


def neighborhood_nodes(ops, singular, radius):
    """Free vertices within chart distance ``radius`` of the singular set."""
    verts = ops.mesh.vertices[ops.free_dofs]
    d = singular.distance(verts)
    return ops.free_dofs[d <= radius * (1 + 1e-12)]


def _solve_spd(k, rhs, x0=None):
    n = k.shape[0]
    if n <= DIRECT_LIMIT:
        try:
            lu = spla.splu(k.tocsc())
        except RuntimeError as exc:
            raise SolverBreakdown(f"sparse factorisation failed: {exc}") from exc
        return lu.solve(rhs), "direct"
    diag = k.diagonal()
    if np.any(diag <= 0):
        raise SolverBreakdown("non-positive diagonal in the capacity system")
    jacobi = sp.diags(1.0 / diag)
    x, info = spla.cg(k, rhs, x0=x0, rtol=RESIDUAL_TOL * 0.1, maxiter=20 * n, M=jacobi)
    if info != 0:
        raise SolverBreakdown(f"conjugate gradients stopped with info={info}")
    return x, "cg-jacobi"


def equilibrium_potential(ops, nodes, radius=math.nan, x0=None):
    """Minimise ``u'(S+M)u`` subject to ``u = 1`` on ``nodes``.

    ``nodes`` are mesh vertex indices and must be free in ``ops``.  ``x0``
    only seeds the iterative path used for very large systems.
    """
    nodes = np.unique(np.asarray(nodes, dtype=np.int64))
    if nodes.size == 0:
        raise EmptyConstraintSet("the constraint set A is empty")
    index = ops.free_index()
    a = index[nodes]
    if np.any(a < 0):
        raise ValueError("constraint nodes overlap the constrained dofs of the form")
    k = (ops.stiffness + ops.mass).tocsr()
    n = ops.size
    rest = np.setdiff1d(np.arange(n), a)
    e = np.zeros(n)
    e[a] = 1.0
    residual, solver = 0.0, "none"
    if rest.size:
        k_rr = k[rest][:, rest]
        rhs = -(k[rest][:, a] @ np.ones(a.size))
        scale = np.linalg.norm(rhs)
        if scale > 0:
            sol, solver = _solve_spd(k_rr, rhs, None if x0 is None else np.asarray(x0)[rest])
            if not np.all(np.isfinite(sol)):
                raise SolverBreakdown("non-finite equilibrium potential")
            residual = float(np.linalg.norm(k_rr @ sol - rhs) / scale)
            if residual > RESIDUAL_TOL:
                raise SolverBreakdown(f"relative residual {residual:.3e} above {RESIDUAL_TOL:g}")
            e[rest] = sol
    ke = k @ e
    cap = float(e @ ke)
    h1sq = float(e @ (ops.stiffness @ e) + e @ (ops.mass @ e))
    return CapacityResult(float(radius), nodes, e, ops.expand(e), cap, h1sq, residual, solver)


def _check_resolved(ops, singular, radius, nodes):
    mesh = ops.mesh
    near = cell_distance_lower_bound(mesh, singular) <= radius
    smallest = mesh.diameters()[near].min() if np.any(near) else math.inf
    if nodes.size == 0 or smallest > radius / 4.0:
        raise UnresolvedRadius(
            f"radius {radius:g} is not resolved: smallest nearby cell {smallest:.3g} > radius/4")


def capacity_curve(ops, singular, radii, jobs=1, check_resolution=True):
    """Capacities of the shrinking neighbourhoods ``{dist <= rho}`` of a set."""
    radii = [float(r) for r in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    node_sets = []
    for rho in radii:
        nodes = neighborhood_nodes(ops, singular, rho)
        if check_resolution:
            _check_resolved(ops, singular, rho, nodes)
        node_sets.append(nodes)

    def one(item):
        rho, nodes = item
        return equilibrium_potential(ops, nodes, rho)

    items = list(zip(radii, node_sets))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, items))
    return [one(it) for it in items]


# --------------------------------------------------------------------------
# verdict

@dataclass
class FitReport:
    model: str
    limit: float
    slope: float
    decreasing: bool
    cap_largest: float
    polar_threshold: float
    floor: float
    abscissa: list = field(default_factory=list)

    def as_dict(self):
        return {
            "model": self.model, "limit": self.limit, "slope": self.slope,
            "decreasing": self.decreasing, "cap_largest": self.cap_largest,
            "polar_threshold": self.polar_threshold, "floor": self.floor,
            "abscissa": self.abscissa,
            "policy": (f"polar if decreasing and limit <= {POLAR_FRACTION:g}*cap_largest; "
                       f"not-polar if limit >= {FLOOR_FRACTION:g}*cap_largest"),
        }


def _abscissa(model, radii):
    if model == "log-decay-2d":
        if np.any(radii >= 1.0):
            raise ValueError("log-decay-2d needs radii below 1")
        return 1.0 / np.log(1.0 / radii)
    m = re.fullmatch(r"power-decay\((\d+)\)", model)
    if m:
        dim = int(m.group(1))
        if dim < 3:
            raise ValueError("power-decay needs dimension >= 3")
        return radii ** (dim - 2)
    if model == "none":
        return radii
    raise ValueError(f"unknown decay model {model!r}")


def almost_polar_verdict(curve, model="log-decay-2d"):
    """Extrapolate a capacity curve to zero radius.

    Fits ``cap = limit + slope * x(rho)`` by least squares, where ``x`` is
    ``1/ln(1/rho)`` for ``log-decay-2d``, ``rho**(m-2)`` for
    ``power-decay(m)`` and ``rho`` for ``none``.
    """
    if len(curve) < 3:
        raise ValueError("a verdict needs at least 3 radii")
    order = np.argsort([-c.radius for c in curve])
    radii = np.array([curve[i].radius for i in order])
    caps = np.array([curve[i].cap for i in order])
    x = _abscissa(model, radii)
    if np.all(caps == 0.0):
        fit = FitReport(model, 0.0, 0.0, True, 0.0, 0.0, 0.0, x.tolist())
        return "polar", fit
    if np.ptp(caps) <= 4 * np.finfo(float).eps * np.abs(caps).max():
        raise DegenerateFit("all capacities are equal; the fit is degenerate")
    slope, limit = np.polyfit(x, caps, 1)
    decreasing = bool(np.all(np.diff(caps) <= 1e-12 * caps[0]) and caps[-1] < caps[0])
    top = float(caps[0])
    fit = FitReport(model, float(limit), float(slope), decreasing, top,
                    POLAR_FRACTION * top, FLOOR_FRACTION * top, x.tolist())
    if decreasing and limit <= POLAR_FRACTION * top:
        return "polar", fit
    if limit >= FLOOR_FRACTION * top:
        return "not-polar", fit
    return "inconclusive", fit


# --------------------------------------------------------------------------
# reports

CSV_COLUMNS = ("radius", "cap", "h1_norm_sq", "residual", "nodes_constrained", "construct")


def write_capacity_csv(path, curve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in curve:
            w.writerow([repr(c.radius), repr(c.cap), repr(c.h1_norm_sq), repr(c.residual),
                        c.nodes_constrained, "capacity"])


def capacity_report(curve, verdict=None, fit=None):
    out = {
        "construct": "capacity",
        "rows": [{"radius": c.radius, "cap": c.cap, "h1_norm_sq": c.h1_norm_sq,
                  "residual": c.residual, "nodes_constrained": c.nodes_constrained}
                 for c in curve],
    }
    if verdict is not None:
        out["verdict"] = verdict
        out["fit"] = fit.as_dict()
    return out


def write_capacity_json(path, curve, verdict=None, fit=None):
    with open(path, "w") as fh:
        json.dump(capacity_report(curve, verdict, fit), fh, indent=2, sort_keys=True)
        fh.write("\n")
