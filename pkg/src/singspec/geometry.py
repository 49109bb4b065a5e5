"""Metric fields, chart regions, singular sets and cutoff functions.

All manifolds are single charts in R^d (d = 1, 2, 3) carrying an explicit
metric tensor field.  Distances are chart (Euclidean) distances.

Points are passed as arrays of shape ``(n, dim)``; single points of shape
``(dim,)`` are accepted by the public evaluators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import BadMollifierRadius, OutOfChart, SingularPoint


def _as_points(x, dim=None):
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x.reshape(1, 1)
    elif x.ndim == 1:
        x = x.reshape(1, -1) if dim is None or x.shape[0] == dim else x.reshape(-1, 1)
    if dim is not None and x.shape[1] != dim:
        raise ValueError(f"expected points of dimension {dim}, got {x.shape[1]}")
    return x


# --------------------------------------------------------------------------
# regions

@dataclass(frozen=True)
class Region:
    """A simple chart region: box, ball, ball exterior or a neighbourhood.

    ``kind`` is one of ``"box"``, ``"ball"``, ``"ball-exterior"``,
    ``"neighborhood"``.  A neighbourhood wraps any object with a
    ``distance`` method and a radius.
    """

    kind: str
    dim: int
    lo: tuple = ()
    hi: tuple = ()
    center: tuple = ()
    radius: float = 0.0
    base: object = None

    @classmethod
    def box(cls, lo, hi):
        lo = tuple(float(v) for v in np.atleast_1d(lo))
        hi = tuple(float(v) for v in np.atleast_1d(hi))
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ValueError("box needs lo < hi componentwise")
        return cls("box", len(lo), lo=lo, hi=hi)

    @classmethod
    def interval(cls, a, b):
        return cls.box([a], [b])

    @classmethod
    def ball(cls, center, radius):
        center = tuple(float(v) for v in np.atleast_1d(center))
        return cls("ball", len(center), center=center, radius=float(radius))

    disk = ball

    @classmethod
    def ball_exterior(cls, center, radius):
        center = tuple(float(v) for v in np.atleast_1d(center))
        return cls("ball-exterior", len(center), center=center, radius=float(radius))

    @classmethod
    def neighborhood(cls, base, radius):
        return cls("neighborhood", base.dim, radius=float(radius), base=base)

    def distance(self, x):
        x = _as_points(x, self.dim)
        if self.kind == "box":
            lo, hi = np.array(self.lo), np.array(self.hi)
            d = np.maximum(np.maximum(lo - x, x - hi), 0.0)
            return np.sqrt(np.sum(d * d, axis=1))
        if self.kind == "ball":
            return np.maximum(np.linalg.norm(x - np.array(self.center), axis=1) - self.radius, 0.0)
        if self.kind == "ball-exterior":
            return np.maximum(self.radius - np.linalg.norm(x - np.array(self.center), axis=1), 0.0)
        if self.kind == "neighborhood":
            return np.maximum(self.base.distance(x) - self.radius, 0.0)
        raise ValueError(f"unknown region kind {self.kind!r}")

    def contains(self, x, tol=0.0):
        return self.distance(x) <= tol

    @property
    def volume(self):
        if self.kind == "box":
            return float(np.prod(np.subtract(self.hi, self.lo)))
        if self.kind == "ball":
            return unit_ball_volume(self.dim) * self.radius**self.dim
        return math.inf

    def describe(self):
        if self.kind == "box":
            return f"box {list(self.lo)} x {list(self.hi)}"
        if self.kind == "ball":
            return f"ball center={list(self.center)} radius={self.radius:g}"
        if self.kind == "ball-exterior":
            return f"exterior of ball center={list(self.center)} radius={self.radius:g}"
        return f"{self.radius:g}-neighborhood of ({self.base.describe()})"


def unit_ball_volume(m):
    return math.pi ** (m / 2) / math.gamma(m / 2 + 1)


# --------------------------------------------------------------------------
# singular sets

SET_KINDS = ("point", "point-list", "segment", "cantor-approx", "sphere-cap-boundary")


@dataclass(frozen=True)
class SingularSetSpec:
    """A closed set removed from (or marked in) the chart.

    ``cantor-approx`` is the level-``level`` middle-thirds construction laid
    along the segment ``a -> b``: 2**level closed intervals of relative length
    3**-level.  ``sphere-cap-boundary`` is the sphere ``|x - center| = radius``;
    in a stereographic chart truncated at that radius it stands in for the
    removed pole.
    """

    kind: str
    dim: int
    points: tuple = ()
    a: tuple = ()
    b: tuple = ()
    level: int = 0
    center: tuple = ()
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise ValueError(f"unknown singular set kind {self.kind!r}")
        if self.kind == "cantor-approx" and self.level < 0:
            raise ValueError("cantor level must be >= 0")

    @classmethod
    def point(cls, p):
        p = tuple(float(v) for v in np.atleast_1d(p))
        return cls("point", len(p), points=(p,))

    @classmethod
    def point_list(cls, pts):
        pts = tuple(tuple(float(v) for v in np.atleast_1d(p)) for p in pts)
        return cls("point-list", len(pts[0]), points=pts)

    @classmethod
    def segment(cls, a, b):
        a = tuple(float(v) for v in np.atleast_1d(a))
        b = tuple(float(v) for v in np.atleast_1d(b))
        return cls("segment", len(a), a=a, b=b)

    @classmethod
    def cantor(cls, level, a=None, b=None, dim=2):
        a = tuple(float(v) for v in (a if a is not None else np.zeros(dim)))
        if b is None:
            b = np.zeros(dim)
            b[0] = 1.0
        b = tuple(float(v) for v in b)
        return cls("cantor-approx", len(a), a=a, b=b, level=int(level))

    @classmethod
    def cap_boundary(cls, center, radius):
        center = tuple(float(v) for v in np.atleast_1d(center))
        return cls("sphere-cap-boundary", len(center), center=center, radius=float(radius))

    def intervals(self):
        """Parameter intervals ``(t0, t1)`` in [0, 1] along ``a -> b``."""
        if self.kind == "segment":
            return np.array([[0.0, 1.0]])
        if self.kind != "cantor-approx":
            raise ValueError("intervals() only applies to segment and cantor-approx")
        iv = np.array([[0.0, 1.0]])
        for _ in range(self.level):
            third = (iv[:, 1] - iv[:, 0]) / 3.0
            left = np.column_stack([iv[:, 0], iv[:, 0] + third])
            right = np.column_stack([iv[:, 1] - third, iv[:, 1]])
            iv = np.stack([left, right], axis=1).reshape(-1, 2)
        return iv

    def components(self):
        """Point coordinates of each component (points) or its interval endpoints."""
        if self.kind in ("point", "point-list"):
            return [np.array([p]) for p in self.points]
        if self.kind in ("segment", "cantor-approx"):
            a, b = np.array(self.a), np.array(self.b)
            return [np.array([a + t0 * (b - a), a + t1 * (b - a)]) for t0, t1 in self.intervals()]
        return None

    def distance(self, x):
        x = _as_points(x, self.dim)
        if self.kind in ("point", "point-list"):
            pts = np.array(self.points)
            d = np.full(x.shape[0], np.inf)
            for p in pts:
                d = np.minimum(d, np.linalg.norm(x - p, axis=1))
            return d
        if self.kind == "sphere-cap-boundary":
            return np.abs(np.linalg.norm(x - np.array(self.center), axis=1) - self.radius)
        a, b = np.array(self.a), np.array(self.b)
        length = float(np.linalg.norm(b - a))
        u = (b - a) / length
        rel = x - a
        t = rel @ u
        perp2 = np.maximum(np.sum(rel * rel, axis=1) - t * t, 0.0)
        if self.kind == "segment":
            along = np.maximum(np.maximum(-t, t - length), 0.0)
        else:
            along = _cantor_distance_1d(t, length, self.level)
        return np.sqrt(perp2 + along * along)

    def describe(self):
        if self.kind in ("point", "point-list"):
            return f"{self.kind} {[list(p) for p in self.points]}"
        if self.kind == "sphere-cap-boundary":
            return f"sphere-cap-boundary |x - {list(self.center)}| = {self.radius:g}"
        if self.kind == "segment":
            return f"segment {list(self.a)} -> {list(self.b)}"
        return f"cantor-approx level {self.level} on {list(self.a)} -> {list(self.b)}"


def _cantor_distance_1d(t, length, level):
    """Distance from parameters ``t`` to the level-k Cantor set on [0, length].

    Descends one level at a time into the nearer child interval; points that
    fall into a removed middle third are finished, since both gap endpoints
    survive every later level.
    """
    t = np.asarray(t, dtype=float)
    lo = np.zeros_like(t)
    span = np.full_like(t, float(length))
    done = np.zeros(t.shape, dtype=bool)
    dist = np.zeros_like(t)
    for _ in range(level):
        third = span / 3.0
        left_end = lo + third
        right_start = lo + span - third
        in_gap = (~done) & (t > left_end) & (t < right_start)
        dist = np.where(in_gap, np.minimum(t - left_end, right_start - t), dist)
        done |= in_gap
        go_right = (~done) & (t >= right_start)
        lo = np.where(go_right, right_start, lo)
        span = np.where(done, span, third)
    tail = np.maximum(np.maximum(lo - t, t - (lo + span)), 0.0)
    return np.where(done, dist, tail)


def distance_to_set(spec, x):
    """Chart distance from ``x`` to a singular set or region."""
    d = spec.distance(x)
    return float(d[0]) if np.ndim(x) <= 1 and d.shape[0] == 1 else d


def cantor_polarity_threshold():
    """Exponent above which r**eps makes the Cantor set almost polar."""
    return (math.log(2) - math.log(3)) / (2 * math.log(3) - math.log(2))


# --------------------------------------------------------------------------
# metric fields

TensorFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MetricField:
    """A Riemannian metric on a chart, as a vectorised tensor function.

    ``tensor_fn`` maps points ``(n, dim)`` to symmetric tensors ``(n, dim, dim)``.
    The density is ``sqrt(det tensor)``.
    """

    dim: int
    label: str
    tensor_fn: TensorFn
    chart: Region
    singular: SingularSetSpec | None = None
    description: str = ""

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("only dimensions 1-3 are supported")
        if any(c.isspace() for c in self.label):
            raise ValueError("metric labels must not contain whitespace")

    def evaluate(self, x):
        """Vectorised ``(tensor, density)``; no domain checks."""
        x = _as_points(x, self.dim)
        t = self.tensor_fn(x)
        with np.errstate(invalid="ignore"):
            dens = np.sqrt(_det_small(t))
        return t, dens

    def inverse_and_density(self, x):
        t, dens = self.evaluate(x)
        with np.errstate(all="ignore"):
            inv = np.linalg.inv(t)
        return inv, dens


def _det_small(t):
    """Closed-form determinant for stacks of 1x1, 2x2 or 3x3 tensors.

    LAPACK's LU route loses the last bit on scaled identities, which would
    break the exact conformal cancellation of the 2D Dirichlet energy.
    """
    d = t.shape[-1]
    if d == 1:
        return t[..., 0, 0]
    if d == 2:
        return t[..., 0, 0] * t[..., 1, 1] - t[..., 0, 1] * t[..., 1, 0]
    return (t[..., 0, 0] * (t[..., 1, 1] * t[..., 2, 2] - t[..., 1, 2] * t[..., 2, 1])
            - t[..., 0, 1] * (t[..., 1, 0] * t[..., 2, 2] - t[..., 1, 2] * t[..., 2, 0])
            + t[..., 0, 2] * (t[..., 1, 0] * t[..., 2, 1] - t[..., 1, 1] * t[..., 2, 0]))


def metric_eval(metric: MetricField, x):
    """Tensor and density at a single chart point, with domain checks."""
    p = _as_points(x, metric.dim)
    if p.shape[0] != 1:
        raise ValueError("metric_eval takes a single point; use MetricField.evaluate")
    if not metric.chart.contains(p, tol=1e-12)[0]:
        raise OutOfChart(f"{list(p[0])} is outside the chart {metric.chart.describe()}")
    if metric.singular is not None and metric.singular.distance(p)[0] == 0.0:
        raise SingularPoint(f"{list(p[0])} lies on the singular set")
    t, dens = metric.evaluate(p)
    return t[0], float(dens[0])


def _identity(x, dim):
    return np.broadcast_to(np.eye(dim), (x.shape[0], dim, dim)).copy()


def euclidean(dim, chart=None, label="euclidean"):
    if chart is None:
        chart = Region("box", dim, lo=(-math.inf,) * dim, hi=(math.inf,) * dim)
    return MetricField(dim, label, lambda x: _identity(x, dim), chart,
                       description="flat metric")


def conformal(base: MetricField, factor, label, singular=None, description=""):
    """The metric ``factor(x)**2 * base``."""

    def tensor_fn(x):
        f = np.asarray(factor(x), dtype=float)
        return (f * f)[:, None, None] * base.tensor_fn(x)

    return MetricField(base.dim, label, tensor_fn, base.chart,
                       singular if singular is not None else base.singular, description)


def stereographic_sphere(chart=None, label="round-sphere"):
    """Unit round sphere in stereographic coordinates: 4/(1+|x|^2)^2 |dx|^2."""
    if chart is None:
        chart = Region("box", 2, lo=(-math.inf,) * 2, hi=(math.inf,) * 2)
    base = euclidean(2, chart)
    return conformal(base, lambda x: 2.0 / (1.0 + np.sum(x * x, axis=1)), label,
                     description="round unit sphere, stereographic chart")


def flat_bottom_sphere(chart=None, label="flat-bottom-sphere"):
    """Upper hemisphere glued to a flat unit disk along the equator.

    In the stereographic chart from the north pole the disk is ``|x| <= 1``
    (identity chart) and the hemisphere is ``|x| > 1``.  The conformal factor
    is continuous across ``|x| = 1``.
    """
    if chart is None:
        chart = Region("box", 2, lo=(-math.inf,) * 2, hi=(math.inf,) * 2)
    base = euclidean(2, chart)

    def factor(x):
        r2 = np.sum(x * x, axis=1)
        return np.where(r2 <= 1.0, 1.0, 2.0 / (1.0 + r2))

    return conformal(base, factor, label,
                     description="hemisphere (|x|>1) over a flat unit disk (|x|<=1)")


def power_factor(singular, eps, reach=1.0):
    """``f = (r/reach)**eps`` for ``r < reach`` and 1 beyond, r = distance to the set."""

    def factor(x):
        r = singular.distance(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            inside = (r / reach) ** eps
        return np.where(r < reach, inside, 1.0)

    return factor


def product_perturbation(base: MetricField, factor, n_scaled, label, singular=None):
    """``f**2 g1 (+) g2``: scale the first ``n_scaled`` coordinates by f**2."""
    dim = base.dim
    mask = np.zeros(dim)
    mask[:n_scaled] = 1.0

    def tensor_fn(x):
        f = np.asarray(factor(x), dtype=float)
        scale = np.where(mask[None, :] > 0, f[:, None], 1.0)
        return scale[:, :, None] * base.tensor_fn(x) * scale[:, None, :]

    return MetricField(dim, label, tensor_fn, base.chart,
                       singular if singular is not None else base.singular,
                       description="product perturbation f^2 g1 + g2")


# --------------------------------------------------------------------------
# cutoffs

CUTOFF_KINDS = ("psi", "phi", "chi-hat", "chi-mollified")


@dataclass(frozen=True)
class CutoffSpec:
    """Lipschitz cutoffs built from a distance function.

    psi            (1 - r)_+
    phi            (1 - r/eps)_+
    chi-hat        min(1, 2 - 3 r/eps)_+
    chi-mollified  chi-hat convolved with a bump of radius ``delta < eps/3``
    """

    kind: str
    base: object
    eps: float = 1.0
    delta: float = 0.0

    def __post_init__(self):
        if self.kind not in CUTOFF_KINDS:
            raise ValueError(f"unknown cutoff kind {self.kind!r}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.kind == "chi-mollified" and not self.delta < self.eps / 3.0:
            raise BadMollifierRadius(
                f"mollifier radius delta={self.delta:g} must be below eps/3={self.eps / 3:g}")

    @property
    def dim(self):
        return self.base.dim

    @property
    def support_radius(self):
        """Distance from the base set beyond which the cutoff vanishes."""
        if self.kind == "psi":
            return 1.0
        if self.kind == "phi":
            return self.eps
        if self.kind == "chi-hat":
            return 2.0 * self.eps / 3.0
        return 2.0 * self.eps / 3.0 + self.delta

    @property
    def plateau_radius(self):
        """Distance from the base set within which the cutoff equals 1."""
        if self.kind in ("psi", "phi"):
            return 0.0
        if self.kind == "chi-hat":
            return self.eps / 3.0
        return self.eps / 3.0 - self.delta


def _chi_hat(r, eps):
    # pin the plateau and the support edge so they hold exactly in floating point
    v = np.clip(2.0 - 3.0 * r / eps, 0.0, 1.0)
    v = np.where(r <= eps / 3.0, 1.0, v)
    return np.where(r >= 2.0 * eps / 3.0, 0.0, v)


def _bump_profile(s):
    return np.where(s < 1.0, (1.0 - s * s) ** 3, 0.0)


@lru_cache(maxsize=None)
def _bump_rule(dim):
    """Nodes on the unit ball and weights of the mollifier kernel.

    Five Gauss-Legendre radii times an angular rule; weights are normalised
    to sum to one.
    """
    s, ws = np.polynomial.legendre.leggauss(5)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    radial_w = ws * _bump_profile(s) * s ** (dim - 1)
    if dim == 1:
        nodes = np.concatenate([s, -s])[:, None]
        weights = np.concatenate([radial_w, radial_w])
    elif dim == 2:
        ang = 2 * np.pi * np.arange(12) / 12
        dirs = np.column_stack([np.cos(ang), np.sin(ang)])
        nodes = (s[:, None, None] * dirs[None]).reshape(-1, 2)
        weights = np.repeat(radial_w, 12)
    else:
        c, wc = np.polynomial.legendre.leggauss(5)
        az = 2 * np.pi * np.arange(10) / 10
        sn = np.sqrt(1 - c * c)
        dirs = np.stack([np.outer(sn, np.cos(az)), np.outer(sn, np.sin(az)),
                         np.outer(c, np.ones_like(az))], axis=-1).reshape(-1, 3)
        dir_w = np.repeat(wc, 10)
        nodes = (s[:, None, None] * dirs[None]).reshape(-1, 3)
        weights = np.outer(radial_w, dir_w).reshape(-1)
    return nodes, weights / weights.sum()


def cutoff_eval(spec: CutoffSpec, x):
    """Evaluate a cutoff at points ``x``; returns values in [0, 1]."""
    scalar = np.ndim(x) <= 1 and spec.dim == np.size(x)
    pts = _as_points(x, spec.dim)
    if spec.kind == "psi":
        out = np.maximum(1.0 - spec.base.distance(pts), 0.0)
    elif spec.kind == "phi":
        out = np.maximum(1.0 - spec.base.distance(pts) / spec.eps, 0.0)
    elif spec.kind == "chi-hat" or spec.delta == 0.0:
        out = _chi_hat(spec.base.distance(pts), spec.eps)
    else:
        if not spec.delta < spec.eps / 3.0:
            raise BadMollifierRadius("delta must be below eps/3")
        nodes, w = _bump_rule(spec.dim)
        shifted = pts[:, None, :] - spec.delta * nodes[None, :, :]
        r = spec.base.distance(shifted.reshape(-1, spec.dim)).reshape(pts.shape[0], -1)
        out = (_chi_hat(r, spec.eps) * w).sum(axis=1) / w.sum()
        out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


@lru_cache(maxsize=None)
def _bump_gradient_l1(dim):
    """L1 norm of the gradient of the unit-radius normalised bump."""
    s, ws = np.polynomial.legendre.leggauss(40)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    sphere = 2 * math.pi ** (dim / 2) / math.gamma(dim / 2)
    mass = sphere * np.sum(ws * (1 - s * s) ** 3 * s ** (dim - 1))
    grad = sphere * np.sum(ws * 6 * s * (1 - s * s) ** 2 * s ** (dim - 1))
    return grad / mass


def mollified_laplacian_bound(eps, delta, dim):
    """Analytic sup bound on the Laplacian of the mollified chi-hat.

    Uses |Lap(j * u)| <= |grad u|_inf * |grad j|_L1 with |grad chi-hat| <= 3/eps.
    """
    if delta <= 0:
        return math.inf
    return 3.0 / eps * _bump_gradient_l1(dim) / delta
