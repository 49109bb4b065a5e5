"""Is a point invisible to the Dirichlet form?

In the plane the capacity of a disk of radius rho decays like
2 pi / ln(1/rho), so a single point has capacity zero: it is "almost
polar" and removing it changes nothing.  On the line the same experiment
levels off at 2, since exp(-|x|) is a finite-energy function equal to 1 at
the origin.  The script computes both curves on graded meshes and asks for
a verdict.
"""
import math

from singspec import assemble, disk_mesh, euclidean, grade_toward, interval_mesh
from singspec.capacity import almost_polar_verdict, capacity_curve
from singspec.geometry import SingularSetSpec

radii = [0.2, 0.1, 0.05, 0.025]

plane_point = SingularSetSpec.point((0.0, 0.0))
mesh = grade_toward(disk_mesh(8.0, 0.25), plane_point, ratio=0.5, levels=7)
ops = assemble(mesh, euclidean(2), dirichlet_boundary=True)
plane = capacity_curve(ops, plane_point, radii)
print(f"plane: {mesh.n_vertices} vertices, graded toward the origin")
for c in plane:
    print(f"  rho={c.radius:<6g} cap={c.cap:.4f}   2pi/ln(1/rho)={2 * math.pi / math.log(1 / c.radius):.4f}")
verdict, fit = almost_polar_verdict(plane, "log-decay-2d")
print(f"  extrapolated limit {fit.limit:.3f} -> {verdict}\n")

line_point = SingularSetSpec.point((0.0,))
mesh = grade_toward(interval_mesh(-8.0, 8.0, 64), line_point, ratio=0.5, levels=6)
ops = assemble(mesh, euclidean(1), dirichlet_boundary=True)
line = capacity_curve(ops, line_point, radii)
print("line:")
for c in line:
    print(f"  rho={c.radius:<6g} cap={c.cap:.4f}")
verdict, fit = almost_polar_verdict(line, "none")
print(f"  extrapolated limit {fit.limit:.3f} -> {verdict}")
