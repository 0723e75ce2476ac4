import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from saddle_geometry.legendre import LegendreProfile, legendre_lambda
from saddle_geometry.saddle import real_saddle, saddle_image, saddle_value, solve_saddle
from saddle_geometry.contours import Contour, build_contour, build_gamma_R, build_mellin_line, build_psi_plus, psi_radius
from saddle_geometry.h_profile import HProfile, eval_H, h_profile

__all__ = [
    "LegendreProfile", "legendre_lambda", "real_saddle", "saddle_image", "saddle_value", "solve_saddle",
    "Contour", "build_contour", "build_gamma_R", "build_mellin_line", "build_psi_plus", "psi_radius",
    "HProfile", "eval_H", "h_profile",
]
