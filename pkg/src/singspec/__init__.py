"""Finite element experiments on Riemannian metrics with singular sets.

Capacities of shrinking neighbourhoods, discrete spectra, Weyl fits,
essential-spectrum proxies and quasimode transplantation between two
metrics that agree outside a compact set.
"""
__version__ = "0.1.0"

from .assemble import AssembledOperators, assemble, energy_norms, read_matrix, write_matrix
from .capacity import (CapacityResult, FitReport, almost_polar_verdict, capacity_curve,
                       equilibrium_potential, neighborhood_nodes)
from .errors import ConfigError, NumericalError, SingspecError
from .gallery import GalleryEntry, gallery, two_subdomain_pair
from .geometry import (CutoffSpec, MetricField, Region, SingularSetSpec, conformal, cutoff_eval,
                       euclidean, flat_bottom_sphere, metric_eval, stereographic_sphere)
from .mesh import (Mesh, box_mesh, build_mesh, disk_mesh, grade_toward, interval_mesh, puncture,
                   read_mesh, refine_uniform, write_mesh)
from .spectrum import (SpectrumReport, counting_function, eigenpairs, ess_proxy_scan, weyl_fit)
from .transplant import (QuasiModeReport, cutoff_interpolants, quasimode_suite, residual_chain,
                         transplant)

__all__ = [name for name in dir() if not name.startswith("_")]
