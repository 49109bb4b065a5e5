"""Named pairs of metrics ``(g, g')`` that agree outside a region K.

Each entry bundles the two metric fields, the singular set, K, the chart
domain, a mesh factory and the truncation rule used by spectral scans.
Outside K both metrics are built from the same closed forms, so they agree
bit for bit there; ``GalleryEntry.agreement`` checks this on samples.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import UnknownGalleryEntry
from .geometry import (MetricField, Region, SingularSetSpec, conformal, euclidean,
                       flat_bottom_sphere, power_factor, product_perturbation)
from .mesh import (box_mesh, build_mesh, disk_mesh, flat_bottom_chart_mesh, grade_toward,
                   merge_meshes, puncture)

NAMES = ("flat-bottom-sphere-vs-plane", "punctured-disk-conformal", "cantor-strip",
         "product-perturbation", "infinite-volume-puncture")


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    name: str
    params: dict
    g: MetricField
    g_prime: MetricField
    singular: SingularSetSpec | None
    k_region: Region
    chart: Region
    mesher: Callable
    truncator: Callable | None = None
    assumptions: tuple = ()
    samples: np.ndarray = field(default=None, repr=False)

    def as_tuple(self):
        """``((g, g'), singular set, K)``."""
        return (self.g, self.g_prime), self.singular, self.k_region

    def mesh(self, h, **hints):
        """A mesh shared by both metrics of the pair."""
        return self.mesher(h, **hints)

    def truncation(self, side, radius, h):
        """``(mesh, metric, dirichlet_boundary)`` for one side cut at ``radius``."""
        if self.truncator is None:
            raise ValueError(f"{self.name} has no truncation family")
        return self.truncator(side, radius, h)

    def outside_k(self, x):
        return self.k_region.distance(x) > 0.0

    def agreement(self, x=None):
        """Largest entrywise ``|g - g'|`` over sample points outside K."""
        x = self.samples if x is None else np.asarray(x, dtype=float)
        x = x[self.outside_k(x)]
        if x.shape[0] == 0:
            return 0.0
        tg, dg = self.g.evaluate(x)
        tp, dp = self.g_prime.evaluate(x)
        return float(max(np.abs(tg - tp).max(), np.abs(dg - dp).max()))

    def label(self):
        args = ",".join(f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in self.params.items())
        return f"{self.name}({args})" if args else self.name

    def describe(self):
        lines = [
            f"gallery entry: {self.label()}",
            f"  chart: {self.chart.describe()}",
            f"  K (where g and g' may differ): {self.k_region.describe()}",
            f"  singular set: {self.singular.describe() if self.singular else 'none'}",
            f"  g : {self.g.label} ({self.g.description})",
            f"  g': {self.g_prime.label} ({self.g_prime.description})",
        ]
        lines += [f"  assumption: {a}" for a in self.assumptions]
        return "\n".join(lines)


def _grid_samples(chart, n=21):
    if chart.kind == "box":
        lo, hi = np.array(chart.lo), np.array(chart.hi)
    else:
        c = np.array(chart.center)
        lo, hi = c - chart.radius, c + chart.radius
    axes = [np.linspace(a, b, n) for a, b in zip(lo, hi)]
    pts = np.column_stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")])
    return pts[chart.contains(pts)]


def _checked(entry):
    entry = _with_samples(entry)
    gap = entry.agreement()
    if gap != 0.0:
        raise AssertionError(f"{entry.name}: g and g' differ by {gap:g} outside K")
    return entry


def _with_samples(entry):
    samples = _grid_samples(entry.chart)
    if entry.singular is not None:
        samples = samples[entry.singular.distance(samples) > 0]
    object.__setattr__(entry, "samples", samples)
    return entry


def _disk_truncator(g, gp, singular=None, levels=0):
    def truncate(side, radius, h):
        mesh = disk_mesh(radius, h)
        if singular is not None and levels:
            mesh = grade_toward(mesh, singular, 0.5, levels)
        return mesh, (g if side == "g" else gp), True
    return truncate


# --------------------------------------------------------------------------
# entries

def flat_bottom_sphere_vs_plane(radius=20.0):
    """Hemisphere over a flat unit disk (g) against the Euclidean plane (g').

    Chart: stereographic projection from the north pole, so the flat bottom
    is ``|x| <= 1`` and the hemisphere ``|x| > 1``; the deleted north point
    sits at chart infinity and is represented by the truncation circle.
    """
    chart = Region.ball((0.0, 0.0), radius)
    g = flat_bottom_sphere(chart)
    gp = euclidean(2, chart, label="plane")

    def mesher(h, **_):
        return flat_bottom_chart_mesh(h, radius)

    def truncate(side, r, h):
        if side == "g":
            return flat_bottom_chart_mesh(h, r), g, False
        return disk_mesh(r, h), gp, True

    return _checked(GalleryEntry(
        "flat-bottom-sphere-vs-plane", {"R": float(radius)}, g, gp,
        SingularSetSpec.cap_boundary((0.0, 0.0), radius),
        Region.ball_exterior((0.0, 0.0), 1.0), chart, mesher, truncate,
        ("the seam |x| = 1 is not smoothed; the metric is Lipschitz there",
         "the north point is replaced by a small polar cap cut at the chart radius R",
         "g side keeps natural (Neumann) data on the cut; g' side is a Dirichlet disk")))


def punctured_disk_conformal(eps=1.0, radius=8.0):
    """Flat disk (g) against ``r**(2 eps) g`` on B(1) (g'), punctured at 0."""
    sing = SingularSetSpec.point((0.0, 0.0))
    chart = Region.ball((0.0, 0.0), radius)
    g = euclidean(2, chart)
    gp = conformal(g, power_factor(sing, eps), f"punctured-disk-eps{eps:g}", sing,
                   description=f"f^2 g with f = r^{eps:g} on B(1)")

    def mesher(h, levels=6, pin=True):
        mesh = grade_toward(disk_mesh(radius, h), sing, 0.5, levels)
        return puncture(mesh, sing) if pin else mesh

    return _checked(GalleryEntry(
        "punctured-disk-conformal", {"eps": float(eps), "R": float(radius)}, g, gp, sing,
        Region.ball((0.0, 0.0), 1.0), chart, mesher, _disk_truncator(g, gp, sing, 4),
        ("the plane is truncated at radius R with zero Dirichlet data",)))


def cantor_strip(eps=0.5, level=3, dim=2):
    """Flat box (g) against ``r**(2 eps) g`` near a level-k Cantor set (g')."""
    if dim not in (2, 3):
        raise ValueError("cantor-strip needs dim 2 or 3")
    sing = SingularSetSpec.cantor(level, dim=dim)
    lo = (-1.5,) + (-1.5,) * (dim - 1)
    hi = (2.5,) + (1.5,) * (dim - 1)
    chart = Region.box(lo, hi)
    g = euclidean(dim, chart)
    gp = conformal(g, power_factor(sing, eps), f"cantor-eps{eps:g}-k{level}", sing,
                   description=f"f^2 g with f = r^{eps:g} within distance 1 of the set")

    def mesher(h, levels=4, pin=True):
        mesh = grade_toward(build_mesh(chart, h), sing, 0.5, levels)
        return puncture(mesh, sing) if pin else mesh

    threshold = (math.log(2) - math.log(3)) / (2 * math.log(3) - math.log(2))
    return _checked(GalleryEntry(
        "cantor-strip", {"eps": float(eps), "level": int(level), "dim": int(dim)}, g, gp, sing,
        Region.neighborhood(sing, 1.0), chart, mesher, None,
        (f"the Cantor set is cut at construction level {level}",
         f"almost polarity is expected for eps > {threshold:.4f} in dimension > 2",)))


def product_perturbation_entry(p=0.25, dim=2):
    """``f**2 g1 (+) g2`` near a point (2D) or an axis segment (3D), f = (2r)**-p."""
    if dim == 2:
        sing = SingularSetSpec.point((0.0, 0.0))
        n_scaled = 2
        need = "f in L^(2+eps): p < 1"
    elif dim == 3:
        sing = SingularSetSpec.segment((0.0, 0.0, -1.0), (0.0, 0.0, 1.0))
        n_scaled = 2
        need = "inf f > 0 and f in L^(3/2+eps): 0 <= p < 4/3"
    else:
        raise ValueError("product-perturbation needs dim 2 or 3")
    chart = Region.box((-1.0,) * dim, (1.0,) * dim)
    g = euclidean(dim, chart)
    f = power_factor(sing, -p, reach=0.5)
    gp = product_perturbation(g, f, n_scaled, f"product-p{p:g}-d{dim}", sing)

    def mesher(h, levels=4, pin=True):
        mesh = grade_toward(build_mesh(chart, h), sing, 0.5, levels, reach=0.5)
        return puncture(mesh, sing) if pin else mesh

    return _checked(GalleryEntry(
        "product-perturbation", {"p": float(p), "dim": int(dim)}, g, gp, sing,
        Region.neighborhood(sing, 0.5), chart, mesher, None,
        (need, "the compact manifold is modelled by a box with natural boundary data")))


def infinite_volume_puncture(eps=1.0, radius=2.0):
    """Flat disk (g) against ``r**(-2 eps) g`` on B(1) (g'); infinite volume for eps >= 1."""
    sing = SingularSetSpec.point((0.0, 0.0))
    chart = Region.ball((0.0, 0.0), radius)
    g = euclidean(2, chart)
    gp = conformal(g, power_factor(sing, -eps), f"infinite-volume-eps{eps:g}", sing,
                   description=f"f^2 g with f = r^-{eps:g} on B(1)")

    def mesher(h, levels=6, pin=True):
        mesh = grade_toward(disk_mesh(radius, h), sing, 0.5, levels)
        return puncture(mesh, sing) if pin else mesh

    return _checked(GalleryEntry(
        "infinite-volume-puncture", {"eps": float(eps), "R": float(radius)}, g, gp, sing,
        Region.ball((0.0, 0.0), 1.0), chart, mesher, _disk_truncator(g, gp, sing, 4),
        ("the g'-volume of B(1) diverges for eps >= 1; only truncated sums are finite",)))


_BUILDERS = {
    "flat-bottom-sphere-vs-plane": (flat_bottom_sphere_vs_plane, {"R": "radius"}),
    "punctured-disk-conformal": (punctured_disk_conformal, {"eps": "eps", "R": "radius"}),
    "cantor-strip": (cantor_strip, {"eps": "eps", "level": "level", "dim": "dim"}),
    "product-perturbation": (product_perturbation_entry, {"p": "p", "dim": "dim"}),
    "infinite-volume-puncture": (infinite_volume_puncture, {"eps": "eps", "R": "radius"}),
}


def parse_name(text):
    """Split ``"name(k=v, ...)"`` or ``"name(v, ...)"`` into a name and parameters."""
    m = re.fullmatch(r"\s*([a-z0-9-]+)\s*(?:\((.*)\))?\s*", text)
    if not m:
        raise UnknownGalleryEntry(text)
    name, body = m.group(1), m.group(2)
    params, positional = {}, []
    if body and body.strip():
        for part in body.split(","):
            if "=" in part:
                k, v = part.split("=", 1)
                params[k.strip()] = float(v)
            else:
                positional.append(float(part))
    return name, positional, params


def gallery(name, *args, **params):
    """Build a gallery entry by name; parameters may be embedded in the name."""
    base, positional, embedded = parse_name(name)
    if base not in _BUILDERS:
        raise UnknownGalleryEntry(base)
    builder, keys = _BUILDERS[base]
    kwargs = {}
    for k, v in {**embedded, **params}.items():
        if k not in keys:
            raise ValueError(f"{base} takes no parameter {k!r} (known: {sorted(keys)})")
        kwargs[keys[k]] = v
    for k in ("level", "dim"):
        if k in kwargs:
            kwargs[k] = int(kwargs[k])
    return builder(*(positional + list(args)), **kwargs)


# --------------------------------------------------------------------------
# test fixture: two weakly coupled squares

def two_subdomain_pair(h=0.05, factor=2.0, k_start=1.6):
    """Two squares joined by a thin channel; g' = factor**2 g for x > k_start.

    Left square [0,1]^2, channel [1,1.25] x [0.45,0.55], right box
    [1.25,2.15] x [0,1].  Low modes concentrate on one square, so cutoffs
    supported in the right box see little of the left-square modes.
    """
    n = round(1 / h)
    left = box_mesh((0.0, 0.0), (1.0, 1.0), (n, n))
    channel = box_mesh((1.0, 0.45), (1.25, 0.55), (round(0.25 / h), round(0.1 / h)))
    right = box_mesh((1.25, 0.0), (2.15, 1.0), (round(0.9 / h), n))
    mesh = merge_meshes(left, channel, right)
    chart = Region.box((0.0, 0.0), (2.15, 1.0))
    g = euclidean(2, chart)

    def fac(x):
        return np.where(x[:, 0] > k_start, factor, 1.0)

    gp = conformal(g, fac, f"two-subdomain-f{factor:g}",
                   description=f"f^2 g with f = {factor:g} for x > {k_start:g}")
    k_region = Region.box((k_start, -math.inf), (math.inf, math.inf))
    return _checked(GalleryEntry(
        "two-subdomain", {"h": float(h)}, g, gp, None, k_region, chart,
        lambda *_a, **_k: mesh, None, ("test fixture, not one of the named examples",)))
