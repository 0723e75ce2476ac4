import sys
import os
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exceptions import ConfigError
from models import WeightSpec, parse_weight_spec
from weights.weight import Weight
from weights.denjoy import DenjoyWeight, make_denjoy_weight
from weights.raw import RawGammaWeight
from weights.derived import DerivedWeight, derive_weight
from weights.regularity import check_regularity, quasianalyticity_test


def build_weight(spec) -> Weight:
    """Build a Weight from a WeightSpec, a dict, JSON text or a canonical string."""
    spec = parse_weight_spec(spec)
    if spec.type == "denjoy":
        return make_denjoy_weight(spec.multi_index())
    if spec.type == "raw":
        return RawGammaWeight(spec.family, params=spec.params, table=spec.table)
    if spec.type == "derived":
        if spec.base is None:
            raise ConfigError("derived weight needs a base")
        return derive_weight(build_weight(spec.base), spec.derivation, a=spec.a)
    raise ConfigError(f"Unknown weight type {spec.type!r}")


def eval_log_L(w: Weight, s):
    """log L(s) with the sector check."""
    return w.log_L(s)


def eval_epsilon(w: Weight, s):
    """eps(s) = s L'(s)/L(s) with the sector check."""
    return w.epsilon(s)


LOG_WEIGHT = "denjoy:a0=0;1:1"
LOG_SQUARED_WEIGHT = "denjoy:a0=0;1:2"

__all__ = [
    "Weight", "DenjoyWeight", "RawGammaWeight", "DerivedWeight", "WeightSpec",
    "make_denjoy_weight", "derive_weight", "build_weight", "eval_log_L", "eval_epsilon",
    "check_regularity", "quasianalyticity_test", "LOG_WEIGHT", "LOG_SQUARED_WEIGHT",
]
