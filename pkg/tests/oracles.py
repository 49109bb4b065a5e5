"""Independent reference values, computed without the package.

The 2D capacity values come from a second-order finite-difference solve of
the radial problem ``-(e'' + e'/r) + e = 0`` on ``[rho, 8]`` with
``e(rho) = 1`` and ``e(8) = 0`` on 1e5 points, frozen below.  The disk
itself, where ``e = 1``, adds its area ``pi rho^2`` to the squared norm.  The Bessel
closed form is kept as a cross-check of the frozen numbers.
"""
import math

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import i0, i1, k0, k1

OUTER = 8.0

RADIAL_CAPACITY = {
    0.2: 3.5498961165805145,
    0.1: 2.582375193769528,
    0.05: 2.0163123996424868,
    0.025: 1.6507958392258706,
}


def radial_capacity_fd(rho, outer=OUTER, n=100_000):
    """Capacity of the disk of radius rho: pi rho^2 + 2 pi int (e'^2 + e^2) r dr."""
    r = np.linspace(rho, outer, n + 1)
    h = r[1] - r[0]
    ri = r[1:-1]
    lower = -(1 / h**2 - 1 / (2 * h * ri))
    upper = -(1 / h**2 + 1 / (2 * h * ri))
    diag = 2 / h**2 + 1 + 0 * ri
    rhs = np.zeros_like(ri)
    rhs[0] = -lower[0] * 1.0
    ab = np.zeros((3, ri.size))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    e = np.concatenate([[1.0], solve_banded((1, 1), ab, rhs), [0.0]])
    de = np.diff(e) / h
    mid = 0.5 * (r[1:] + r[:-1])
    emid = 0.5 * (e[1:] + e[:-1])
    return float(math.pi * rho**2 + 2 * math.pi * np.sum((de**2 + emid**2) * mid) * h)


def radial_capacity_bessel(rho, outer=OUTER):
    """Closed form: e = a I0 + b K0 and cap = pi rho^2 - 2 pi rho e'(rho)."""
    det = i0(rho) * k0(outer) - k0(rho) * i0(outer)
    a, b = k0(outer) / det, -i0(outer) / det
    de = a * i1(rho) - b * k1(rho)
    return float(math.pi * rho**2 - 2 * math.pi * rho * de)


def interval_capacity(half_length):
    """Cap({0}) on [-L, L] with zero ends: e = sinh(L - |x|)/sinh(L)."""
    return 2.0 / math.tanh(half_length)


def square_dirichlet(n):
    """First n eigenvalues of the unit square with Dirichlet data."""
    vals = sorted(math.pi**2 * (j * j + k * k) for j in range(1, 40) for k in range(1, 40))
    return np.array(vals[:n])


def sphere_eigenvalues(n):
    return np.array(sorted(k * (k + 1) for k in range(60) for _ in range(2 * k + 1))[:n], float)


def stereographic_factor(x):
    """Pullback of the round metric: 4 / (1 + |x|^2)^2."""
    return 4.0 / (1.0 + float(np.dot(x, x))) ** 2
