"""Pinned elastic curves: the complete critical-point classification of the
bending energy for fixed-length curves with pinned endpoints, the
special-function stack it rests on, and a discrete cross-check minimizer."""

from .analysis import (GeometryReport, classify_graph_representability,
                       count_interior_inflections, detect_loops,
                       energy_gap_small_ratio, geometry_report,
                       graph_representability_boundary, run_verification,
                       verify_energy_ordering)
from .discrete import (DescentReport, DiscreteCurve, discrete_energy,
                       energy_gradient, hausdorff_distance, make_seed,
                       minimize, project_constraints)
from .elastica import (CriticalPoint, SampledCurve, SignChoice, bending_energy,
                       curvature_at, enumerate_spectrum, make_critical_point,
                       position_at, sample_curve, tangent_at)
from .elliptic import (EllipticDomainError, EllipticPair, JacobiTriple,
                       Modulus, cn_derivative, cn_squared_antiderivative,
                       cn_squared_by_quadrature, complete_E, complete_K,
                       complete_pair, derivative_E, derivative_K, jacobi_am,
                       jacobi_epsilon, jacobi_scd)
from .modulus import (Family, ModulusSolution, PinnedProblem, p_zero,
                      phi_ratio, r_star, solve_check_modulus,
                      solve_hat_modulus, solve_modulus)

__version__ = "1.0.0"
