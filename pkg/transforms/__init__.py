import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from transforms.jet import Jet, geometric_jet, load_jet, pole_jet, polynomial_jet, save_jet, sparse_jet
from transforms.transform import (
    EntireRep,
    inverse_singular,
    moment_sum,
    regular_transform,
    regular_transform_pm,
    regularity_probe,
    singular_transform,
    stability_probe,
)

__all__ = [
    "Jet", "geometric_jet", "load_jet", "pole_jet", "polynomial_jet", "save_jet", "sparse_jet",
    "EntireRep", "inverse_singular", "moment_sum", "regular_transform", "regular_transform_pm",
    "regularity_probe", "singular_transform", "stability_probe",
]
