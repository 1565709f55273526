"""Sub-Finsler Heisenberg group toolkit: convex trigonometry of planar norms,
geodesics and Jacobians of the exponential map, and the curvature exponent
(the optimal N in MCP(0, N))."""

from .config import RunConfig
from .curvature import (AffineNormError, CurvatureError, CurvatureReport, MCPResult, Prescription,
                        PrescriptionError, RigidityWitness, arc_values, curvature_exponent, disc_ratio,
                        hfamily_ratio, hfamily_sup_ratio, hfamily_values, mcp_ratio_check,
                        minimal_mcp_exponent, n_field, prescribe_exponent, rigidity_probe)
from .geometry import (GeodesicParams, HeisPoint, InverseResult, InversionError, PRDecomposition,
                       distortion_coefficients, exp_map, geodesic_trace, group_mul, inverse_exp,
                       jacobian, p_term, pr_decomposition, pw_integration_identity, reduced_jacobian,
                       reduced_jacobian_domega, remainder_direct)
from .norms import NormError, NormSpec, build_norm, dual_value, is_strongly_convex
from .trig import (AffineFit, BoundaryCurve, TrigError, TrigTable, affine_check, correspondence,
                   correspondence_by_pythagoras, correspondence_derivative, cos_sin, cos_sin_polar,
                   second_difference, trig_table)

__version__ = "0.1.0"
