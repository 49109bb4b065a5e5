"""Counting eigenvalues on the square and on the round sphere.

Weyl's law says N(lam) ~ vol * lam / (4 pi) in two dimensions.  The fit
uses the upper half of the computed spectrum with an affine term, which
absorbs the boundary correction that is of lower order.  On the sphere the
chart mesh is finest near the south pole, so the triple eigenvalue 2 shows
up slightly split.
"""
import math

from singspec import assemble, box_mesh, euclidean, stereographic_sphere
from singspec.mesh import sphere_chart_mesh
from singspec.spectrum import counting_function, eigenpairs, weyl_fit

square = eigenpairs(assemble(box_mesh((0, 0), (1, 1), (100, 100)), euclidean(2),
                             dirichlet_boundary=True), 100, vectors=False)
fit = weyl_fit(square, 2, 1.0)
print(f"unit square: N(50) = {counting_function(square, 50.0)} (2 pi^2, 5 pi^2 twice)")
print(f"  fitted {fit.fitted:.5f}  theory {fit.theory:.5f}  gap {fit.gap:.1%}")

sphere = eigenpairs(assemble(sphere_chart_mesh(0.05), stereographic_sphere()), 100,
                    vectors=False)
print("round sphere, lowest clusters:")
for value, mult in sphere.multiplicities()[:4]:
    print(f"  {value:8.4f} x{mult}")
fit = weyl_fit(sphere, 2, 4 * math.pi)
print(f"  fitted {fit.fitted:.4f}  theory {fit.theory:.4f}  gap {fit.gap:.1%}")
