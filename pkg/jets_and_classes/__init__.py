import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from jets_and_classes.chebyshev import (
    ChebyshevExpansion,
    bernstein_ellipse_check,
    chebyshev_expand,
    coeff_decay_report,
    geometric_bound_check,
    to_jet,
)
from jets_and_classes.star_domain import StarDomain, disk_domain, slit_plane_domain
from jets_and_classes.membership import growth_diagnostic, membership_F0
from jets_and_classes.lacunary import check_growth_preconditions, lacunary_counterexample_jet
from jets_and_classes.bounds import carleson_ehrenpreis_ratio, harmonic_mean_bound, poisson_lambda_integral

__all__ = [
    "ChebyshevExpansion", "bernstein_ellipse_check", "chebyshev_expand", "coeff_decay_report",
    "geometric_bound_check", "to_jet", "StarDomain", "disk_domain", "slit_plane_domain",
    "growth_diagnostic", "membership_F0", "check_growth_preconditions", "lacunary_counterexample_jet",
    "carleson_ehrenpreis_ratio", "harmonic_mean_bound", "poisson_lambda_integral",
]
