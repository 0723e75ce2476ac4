import logging
from typing import Any, Dict, Sequence

import numpy as np

from evaluation.metrics import fit_constant, ratio_spread
from exceptions import DivergentIntegralError, PreconditionError
from saddle_geometry.legendre import legendre_lambda
from transforms.jet import Jet
from utils import composite_gauss
from weights.derived import derive_weight
from weights.weight import Weight

logger = logging.getLogger(__name__)

# integration window in x = log t
X_MAX = 600.0
PANEL_WIDTH = 5.0
PANEL_ORDER = 16
TAIL_FIT_DECADE = 100.0

_LAMBDA_NODES: Dict[str, Dict[str, np.ndarray]] = {}


def _lambda_on_nodes(w: Weight) -> Dict[str, np.ndarray]:
    key = w.canonical()
    if key not in _LAMBDA_NODES:
        x, h = composite_gauss(0.0, X_MAX, int(X_MAX / PANEL_WIDTH), PANEL_ORDER)
        lam = np.array([legendre_lambda(w, float(np.exp(v)))[0] for v in x])
        _LAMBDA_NODES[key] = {"x": x, "h": h, "lam": lam}
        logger.info(f"Tabulated Lambda for {key} at {len(x)} nodes on log t in [0, {X_MAX:g}]")
    return _LAMBDA_NODES[key]


def _tail_exponent(w: Weight) -> float:
    """alpha in Lambda(t)/t ~ (log t)^{-alpha} from the last stretch of the window."""
    x = np.array([X_MAX - TAIL_FIT_DECADE, X_MAX])
    log_g = np.array([np.log(legendre_lambda(w, float(np.exp(v)))[0]) - v for v in x])
    return float(-(log_g[1] - log_g[0]) / (np.log(x[1]) - np.log(x[0])))


def poisson_lambda_integral(w: Weight, r: float) -> float:
    """
    int_1^inf r / (r^2 + t^2) Lambda(t) dt.

    In x = log t the integrand is Lambda(e^x) / (2 cosh(x - log r)); the window [0, 600] is
    integrated with composite Gauss-Legendre and the rest with Lambda(t)/t ~ C (log t)^{-alpha}.
    The part over (0, 1) is at most Lambda(1) arctan(1/r) and is left out.

    Raises:
        DivergentIntegralError: if the fitted alpha is at most 1.
    """
    table = _lambda_on_nodes(w)
    log_r = np.log(r)
    body = float(np.sum(table["h"] * table["lam"] / (2.0 * np.cosh(table["x"] - log_r))))
    alpha = _tail_exponent(w)
    if alpha <= 1.0:
        raise DivergentIntegralError(f"int r Lambda(t)/t^2 dt diverges for {w.canonical()} (alpha={alpha:.3f})")
    g_end = legendre_lambda(w, float(np.exp(X_MAX)))[0] / np.exp(X_MAX)
    tail = r * g_end * X_MAX / (alpha - 1.0)
    return body + tail


def carleson_ehrenpreis_ratio(w: Weight, r_values: Sequence[float] = (1e3, 1e4, 1e5, 1e6)) -> Dict[str, Any]:
    """
    int r/(r^2+t^2) Lambda_L(t) dt divided by Lambda_{L/L~}(r); the two are comparable.

    Returns:
        dict: 'r', 'ratios' and 'spread' = max ratio / min ratio.
    """
    quotient = derive_weight(w, "dual_quotient")
    ratios = []
    for r in r_values:
        ratios.append(poisson_lambda_integral(w, float(r)) / legendre_lambda(quotient, float(r))[0])
    spread = ratio_spread(ratios)
    logger.info(f"Carleson-Ehrenpreis ratios for {w.canonical()}: "
                f"{', '.join(f'{x:.3f}' for x in ratios)} (spread {spread:.3f})")
    return {"r": [float(r) for r in r_values], "ratios": [float(x) for x in ratios], "spread": spread}


def harmonic_mean_bound(jet: Jet, w: Weight, a: float) -> Dict[str, Any]:
    """
    Fit |a_n| <= C a^{-n} gamma(n+1) / gamma_*(n+1) with gamma_* from the harmonic-mean weight.

    Raises:
        PreconditionError: if a coefficient is not a nonnegative real number or a <= 0.
    """
    if a <= 0:
        raise PreconditionError(f"a must be positive, got {a}")
    log_a = np.asarray(jet.log_mag, dtype=float)
    nonzero = np.isfinite(log_a)
    if np.any(np.abs(np.asarray(jet.phase)[nonzero]) > 1e-12):
        raise PreconditionError("the harmonic-mean bound applies to nonnegative coefficients")
    w_star = derive_weight(w, "harmonic_mean")
    n = jet.index_array()[nonzero]
    excess = log_a[nonzero] + n * np.log(a) - (w.log_gamma_int(n + 1) - w_star.log_gamma_int(n + 1))
    fit = fit_constant(n, excess)
    return {"C": float(np.exp(fit["fit"])), "score": fit["score"], "passed": fit["passed"]}
