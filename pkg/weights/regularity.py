import logging
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from exceptions import ConfigError
from models import RegularityEntry, RegularityReport
from utils import central_diff4, trend_slope
from weights.weight import Weight

logger = logging.getLogger(__name__)

T_STEP = 0.05
SLOPE_TOL = 0.05
FLAT_LEVEL = 0.1
MIN_POINTS = 8
MIN_DECADES = 3.0
SECTOR_ANGLES = [np.pi / 4, -np.pi / 4, np.pi / 2 - 0.1, -(np.pi / 2 - 0.1)]

DESCRIPTIONS = {
    "derivative_vanishes": "l'(t) = o(1)",
    "eventually_concave": "l''(t) <= 0 eventually",
    "curvature_small": "l'' = o(l')",
    "curvature_times_level": "l'' l = o(l')",
    "third_derivative_small": "|l''| eventually decreasing and l''' l = o(l'')",
    "curvature_log": "l'' log(1/l') = o(l')",
    "derivative_times_level": "l' l = o(1)",
    "sector_epsilon": "eps(rho e^{i theta}) ~ eps(rho) uniformly in the sector",
    "sector_epsilon_derivative": "s eps'(s) ~ rho eps'(rho) uniformly in the sector",
}


def trend_verdict(t: np.ndarray, q: np.ndarray) -> Tuple[str, float]:
    """
    Verdict for "q(t) -> 0" from the slope of log q against log t.

    Returns:
        tuple: (verdict, slope). Clearly negative slope passes, clearly positive fails;
        a flat trend fails when the last value is still above 0.1 and is inconclusive otherwise.
    """
    q = np.abs(np.asarray(q, dtype=float))
    with np.errstate(divide="ignore"):
        slope = trend_slope(np.log(t), np.log(q))
    if not np.isfinite(slope):
        return "inconclusive", float("nan")
    if slope < -SLOPE_TOL:
        return "pass", slope
    if slope > SLOPE_TOL:
        return "fail", slope
    return ("fail" if q[-1] > FLAT_LEVEL else "inconclusive"), slope


def _derivatives(ell: Callable, t: np.ndarray):
    h = T_STEP
    f = {k: ell(t + k * h) for k in (-2, -1, 0, 1, 2)}
    d1 = (-f[2] + 8 * f[1] - 8 * f[-1] + f[-2]) / (12 * h)
    d2 = (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12 * h ** 2)
    d3 = (f[2] - 2 * f[1] + 2 * f[-1] - f[-2]) / (2 * h ** 3)
    return f[0], d1, d2, d3


def _sector_ratios(w: Weight, rho: np.ndarray, derivative: bool) -> np.ndarray:
    worst = np.zeros_like(rho)
    if derivative:
        def deps(s):
            return central_diff4(lambda x: w._epsilon(np.exp(x)), np.log(s), 1e-3)
        ref = deps(rho.astype(complex))
    else:
        ref = w._epsilon(rho.astype(complex))
    for theta in SECTOR_ANGLES:
        s = rho * np.exp(1j * theta)
        val = deps(s) if derivative else w._epsilon(s)
        worst = np.maximum(worst, np.abs(val / ref - 1.0))
    return worst


def check_regularity(w: Weight, grid: Optional[np.ndarray] = None) -> RegularityReport:
    """
    Evaluate the nine regularity assumptions on a log-spaced grid.

    With l(t) = log L(e^t), derivatives are fourth-order finite differences with step 0.05 in t.
    Each entry carries the measured quantity per grid point and the log-log slope used
    for its verdict.

    Args:
        w (Weight): weight under test.
        grid (np.ndarray, optional): rho values; defaults to 40 points over 9 decades above rho0.

    Returns:
        RegularityReport: verdicts keyed by assumption name.

    Raises:
        ConfigError: if the grid has fewer than 8 points or spans less than 3 decades above rho0.
    """
    if grid is None:
        grid = np.logspace(np.log10(w.rho0), np.log10(w.rho0) + 9, 40)
    rho = np.sort(np.asarray(grid, dtype=float))
    rho = rho[rho >= w.rho0]
    if rho.size < MIN_POINTS or np.log10(rho[-1] / rho[0]) < MIN_DECADES:
        raise ConfigError(f"regularity grid needs >= {MIN_POINTS} points over >= {MIN_DECADES:g} decades above rho0")

    t = np.log(rho)

    def ell(x):
        return w._log_L_real(np.exp(x))

    l0, l1, l2, l3 = _derivatives(ell, t)
    upper = slice(len(t) // 2, None)
    entries: Dict[str, RegularityEntry] = {}

    def add(name, q, verdict=None):
        v, slope = trend_verdict(t, q)
        entries[name] = RegularityEntry(
            name=name, description=DESCRIPTIONS[name], verdict=verdict or v,
            t_values=t.tolist(), measured=np.asarray(q, dtype=float).tolist(), trend=slope,
        )

    add("derivative_vanishes", l1)

    concave_tol = 1e-9 * np.maximum(1.0, np.abs(l1[upper]))
    concave = "pass" if np.all(l2[upper] <= concave_tol) else "fail"
    entries["eventually_concave"] = RegularityEntry(
        name="eventually_concave", description=DESCRIPTIONS["eventually_concave"], verdict=concave,
        t_values=t.tolist(), measured=l2.tolist(), trend=float(np.max(l2[upper])),
    )

    add("curvature_small", np.abs(l2) / np.abs(l1))
    add("curvature_times_level", np.abs(l2) * l0 / np.abs(l1))

    ratio3 = np.abs(l3) * l0 / np.abs(l2)
    decreasing = np.all(np.diff(np.abs(l2[upper])) <= 0)
    add("third_derivative_small", ratio3, verdict=None if decreasing else "fail")

    with np.errstate(divide="ignore", invalid="ignore"):
        add("curvature_log", np.abs(l2) * np.log(1.0 / np.abs(l1)) / np.abs(l1))
    add("derivative_times_level", l1 * l0)
    add("sector_epsilon", _sector_ratios(w, rho, derivative=False))
    add("sector_epsilon_derivative", _sector_ratios(w, rho, derivative=True))

    report = RegularityReport(weight=w.canonical(), entries=entries)
    summary = ", ".join(f"{k}={e.verdict}" for k, e in entries.items())
    logger.info(f"Regularity of {w.canonical()}: {summary}")
    return report


def quasianalyticity_test(w: Weight) -> str:
    """
    Classify a weight as quasianalytic, non_quasianalytic or undetermined.

    Denjoy weights are decided from their exponents. Other kinds integrate 1/L(e^v)
    decade by decade over 6 decades above rho0 and read the local power p of the
    decay of the decade contributions in v: p - 1 above 0.1 means convergence,
    below -0.1 divergence, anything in between is undetermined.
    """
    if hasattr(w, "is_quasianalytic"):
        return "quasianalytic" if w.is_quasianalytic() else "non_quasianalytic"

    edges = np.log(w.rho0) + np.log(10.0) * np.arange(7)
    contributions = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        v = np.linspace(lo, hi, 65)
        g = np.exp(-w._log_L_real(np.exp(v)))
        contributions.append(np.trapezoid(g, v))
    contributions = np.asarray(contributions)
    mids = 0.5 * (edges[:-1] + edges[1:])
    if np.any(contributions <= 0):
        logger.info(f"Quasianalyticity of {w.canonical()}: integrand underflows, non_quasianalytic")
        return "non_quasianalytic"
    top = slice(3, None)
    p = -trend_slope(np.log(mids[top]), np.log(contributions[top]))
    stat = p - 1.0
    if stat > 0.1:
        verdict = "non_quasianalytic"
    elif stat < -0.1:
        verdict = "quasianalytic"
    else:
        verdict = "undetermined"
    logger.info(f"Quasianalyticity of {w.canonical()}: local exponent p={p:.3f}, {verdict}")
    return verdict
