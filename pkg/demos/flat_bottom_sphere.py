"""A sphere with a flat bottom against the plane.

Stereographic projection from the north pole turns the sphere minus a point
into the plane.  Give the sphere a flat bottom (the unit disk of the chart)
and keep the hemisphere metric outside it: the plane's metric and this one
agree on the disk and differ everywhere else.  The compact side has discrete
spectrum; the plane's spectrum is all of [0, inf).

Finite meshes only see proxies.  On growing disks B_R the plane's lowest
eigenvalue falls like R^-2, while the compact side, truncated at the same
chart radii, settles toward fixed values (0, then roughly 2.4 twice).  The
scan runs on one coarse mesh, so the stability flag for the compact side
is left undecided; the CLI scan repeats at h/2 to decide it.
"""
from singspec.gallery import gallery
from singspec.spectrum import ess_proxy_scan

entry = gallery("flat-bottom-sphere-vs-plane")
print(entry.describe(), "\n")

scan = ess_proxy_scan(entry, [2.0, 4.0, 8.0, 16.0], k=4, h=0.2, refine=False)
print(f"{'R':>5} | {'sphere side (g)':^34} | {'plane side (g prime)':^34}")
for r, a, b in zip(scan.radii, scan.g_eigenvalues, scan.gp_eigenvalues):
    fa = " ".join(f"{x:7.4f}" for x in a)
    fb = " ".join(f"{x:7.4f}" for x in b)
    print(f"{r:5g} | {fa} | {fb}")
print(f"\nplane lambda_1 ~ R^{scan.gp_lambda1_exponent:.3f}  (Dirichlet disk: j0^2 / R^2)")
print(f"flags: {scan.flags}")
