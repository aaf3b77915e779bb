"""Poisson problems on parametrized surfaces with a zero co-normal derivative.

P1 finite elements on a triangulated parameter disk or ellipse, with every
surface quantity pulled back through the chart's first fundamental form.
"""
import os as _os

# BLAS reads its thread count when numpy loads, so forward the cap before that
_threads = _os.environ.get("SURFPOISSON_THREADS", "")
if _threads.isdigit() and int(_threads) > 0:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

from .assembly import (SurfaceField, SurfaceVectorField, boundary_lp_norm, boundary_mass, integrate,
                       load, lp_norm, mass, stiffness, surface_divergence, tangential_gradient, w12_norm)
from .divfield import DivSolveReport, recover_gradient, solve_div_system, verify_div_system
from .errors import (ConfigError, DegenerateMetric, EigenNoConvergence, GeometryError, IncompatibleLoad,
                     MaxIterExceeded, MeshFailure, SingularInteriorBlock, SolverError, SurfPoissonError,
                     UnsupportedOrder, ZeroTangent)
from .geometry import (Chart, DomainSpec, ValidationReport, conormal, cylinder_chart, flat_chart,
                       hemisphere_chart, make_chart, mean_curvature, metric_frame, monge_chart,
                       pinched_chart, validate_chart)
from .mesh import ParamMesh, QuadratureRule, generate_mesh, quadrature, refine, refinement_sequence
from .solver import (SolveReport, check_compatibility, conormal_derivative, harmonic_extension,
                     solve_conormal_problem, solve_dirichlet, solve_neumann)
from .verify import (ConvergenceTable, IdentityReport, check_coercivity, check_divergence_theorem,
                     check_flattening_ellipticity, check_integration_by_parts, check_norm_equivalence,
                     convergence_study, estimate_poincare_constant)

__version__ = "0.1.0"
