import os
import sys
from typing import Dict, Sequence

import numpy as np

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# a fitted constant validates when the upper half needs at most 10% more
FIT_MARGIN = 0.1


def pass_rate(passed: int, checks: int) -> float:
    """Percentage of passing checks (or agreeing membership verdicts), two decimals; 0.0 without checks."""
    return round(100.0 * passed / checks, 2) if checks > 0 else 0.0


def fit_constant(x: Sequence[float], excess: Sequence[float], margin: float = FIT_MARGIN) -> Dict[str, float]:
    """
    Constant-fitting protocol for bounds of the form |F| <= C * majorant.

    The samples are ordered by x. log C is fitted as the worst excess
    log|F| - log(majorant) over the lower half and validated on the upper half:
    the bound holds when the upper half needs a constant at most (1 + margin) times
    the fitted one.

    Args:
        x (Sequence[float]): sample positions (e.g. radius, index, |u|).
        excess (Sequence[float]): log|F| - log(majorant) at the samples; -inf is allowed.
        margin (float): relative slack on C.

    Returns:
        dict:
          - fit (float): log C from the lower half.
          - validation (float): worst excess on the upper half.
          - score (float): validation - fit.
          - worst (float): worst excess overall.
          - passed (bool): validation <= fit + log(1 + margin).
    """
    x = np.asarray(x, dtype=float)
    excess = np.asarray(excess, dtype=float)
    finite = ~np.isnan(excess)
    x, excess = x[finite], excess[finite]
    if len(excess) < 2:
        return {"fit": float("nan"), "validation": float("nan"), "score": float("nan"),
                "worst": float("nan"), "passed": False}
    order = np.argsort(x, kind="stable")
    excess = excess[order]
    half = len(excess) // 2
    fit = float(np.max(excess[:half]))
    validation = float(np.max(excess[half:]))
    if np.isneginf(fit) and np.isneginf(validation):
        score = 0.0
    else:
        score = validation - fit
    return {"fit": fit, "validation": validation, "score": float(score), "worst": float(np.max(excess)),
            "passed": bool(score <= np.log1p(margin))}


def ratio_spread(values: Sequence[float]) -> float:
    """max / min of positive ratios; inf when any ratio is not positive."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0 or np.any(values <= 0) or not np.all(np.isfinite(values)):
        return float("inf")
    return float(np.max(values) / np.min(values))


def is_nonincreasing(values: Sequence[float], slack: float = 0.0) -> bool:
    values = np.asarray(values, dtype=float)
    return bool(np.all(np.diff(values) <= slack))


def within(value: float, lo: float, hi: float) -> bool:
    return bool(np.isfinite(value) and lo <= value <= hi)
