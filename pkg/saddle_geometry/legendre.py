import logging
from typing import Tuple

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar
from scipy.special import gammaln

from exceptions import DomainError
from utils import central_diff4
from weights.weight import Weight

logger = logging.getLogger(__name__)

SCAN_POINTS = 400
POLISH_STEPS = 6


def _objective(w: Weight, log_r: float, y):
    """x (log r - log x - log L(x)) at x = e^y."""
    y = np.asarray(y, dtype=float)
    return np.exp(y) * (log_r - y - w._log_L_real(np.exp(y)))


def _stationarity(w: Weight, log_r: float, y):
    """log(x L(x)) + 1 + eps(x) - log r at x = e^y."""
    y = np.asarray(y, dtype=float)
    x = np.exp(y)
    return y + w._log_L_real(x) + 1.0 + w._epsilon_real(x) - log_r


def legendre_lambda(w: Weight, r: float) -> Tuple[float, float]:
    """
    Lambda_L(r) = log sup_{x>0} r^x / gamma(x) and its maximizer.

    The sup is bracketed by a scan in log x, refined with a bounded golden-section
    search and polished by Newton steps on the stationarity condition
    log(x L(x)) + 1 + eps(x) = log r.

    Args:
        w (Weight): the weight.
        r (float): argument, r >= 1.

    Returns:
        tuple: (Lambda_L(r), x_r); (0.0, 0.0) when the sup is attained as x -> 0+.

    Raises:
        DomainError: if r < 1.
    """
    if r < 1:
        raise DomainError(f"Lambda_L is defined for r >= 1, got {r}")
    log_r = float(np.log(r))
    y_grid = np.linspace(-40.0, log_r + 5.0, SCAN_POINTS)
    values = _objective(w, log_r, y_grid)
    values = np.where(np.isfinite(values), values, -np.inf)
    i = int(np.argmax(values))
    if values[i] <= 0:
        return 0.0, 0.0
    lo = y_grid[max(i - 1, 0)]
    hi = y_grid[min(i + 1, SCAN_POINTS - 1)]
    res = minimize_scalar(lambda y: -float(_objective(w, log_r, y)), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    y = float(res.x)

    g = float(_stationarity(w, log_r, y))
    for _ in range(POLISH_STEPS):
        if abs(g) < 1e-13:
            break
        dg = float(central_diff4(lambda u: _stationarity(w, log_r, u), np.array(y), 1e-5))
        if not np.isfinite(dg) or dg <= 0:
            break
        y_new = y - g / dg
        g_new = float(_stationarity(w, log_r, y_new))
        if abs(g_new) >= abs(g):
            break
        y, g = y_new, g_new

    value = float(_objective(w, log_r, y))
    if value <= 0:
        return 0.0, 0.0
    return value, float(np.exp(y))


class LegendreProfile:
    """
    Lambda_L and its maximizer tabulated on a log grid of r.

    Attributes:
        r_min, r_max (float): validity range of the table.
        log_r (np.ndarray): grid.
        values (np.ndarray): Lambda_L on the grid.
        maximizers (np.ndarray): x_r on the grid.
    """

    def __init__(self, w: Weight, r_min: float = 10.0, r_max: float = 1e12, per_decade: int = 8):
        self.weight = w
        self.r_min, self.r_max = float(r_min), float(r_max)
        n = int(round(np.log10(r_max / r_min) * per_decade)) + 1
        self.log_r = np.linspace(np.log(r_min), np.log(r_max), n)
        pairs = [legendre_lambda(w, float(np.exp(v))) for v in self.log_r]
        self.values = np.array([p[0] for p in pairs])
        self.maximizers = np.array([p[1] for p in pairs])
        positive = self.values > 0
        self._spline = CubicSpline(self.log_r[positive], np.log(self.values[positive]))
        logger.info(f"Legendre profile for {w.canonical()} on [{r_min:g}, {r_max:g}] with {n} points")

    def __call__(self, r):
        """Lambda_L(r) from the table, direct evaluation outside it."""
        r = np.asarray(r, dtype=float)
        inside = (r >= self.r_min) & (r <= self.r_max)
        out = np.empty_like(r)
        out[inside] = np.exp(self._spline(np.log(r[inside])))
        for idx in zip(*np.nonzero(~inside)):
            out[idx] = legendre_lambda(self.weight, float(r[idx]))[0]
        return out

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.values) >= 0) and np.all(np.diff(self.maximizers) >= 0))

    def log_mu(self, r: float) -> float:
        """log of the Ostrowski function sup_x r^x / (x L(x))^x."""
        return legendre_lambda(self.weight, r)[0]

    def log_mu_integer(self, r: float) -> float:
        """
        log sup_n r^n / (n! gamma(n+1)), which is comparable to Lambda_L(r).

        Stirling's bound log n! >= n log n - n puts the sup below Lambda_L(e r), and the maximizer
        sits next to the continuous one at e r.
        """
        _, x = legendre_lambda(self.weight, np.e * r)
        spread = 10.0 + 0.1 * x
        n = np.arange(max(0.0, np.floor(x - spread)), np.ceil(x + spread) + 1)
        return float(np.max(n * np.log(r) - gammaln(n + 1) - self.weight.log_gamma_int(n + 1)))


############# Growth properties of Lambda_L #############

def scaled_point_ratio(w: Weight, r: float) -> float:
    """Lambda_L(e r L(r)) / r, which tends to 1."""
    arg = np.e * r * np.exp(w.log_L_real(r))
    return legendre_lambda(w, float(arg))[0] / r


def subadditivity_violation(w: Weight, r_values, t_values) -> float:
    """max over the grid of Lambda(r t) / (t Lambda(r)); at most 1 when Lambda(rt) <= t Lambda(r)."""
    worst = 0.0
    for r in r_values:
        base = legendre_lambda(w, float(r))[0]
        for t in t_values:
            worst = max(worst, legendre_lambda(w, float(r * t))[0] / (t * base))
    return worst


def normalized_scaling_ratio(w: Weight, r: float, lam: float) -> float:
    """Lambda(lam r) / (lam Lambda(r))."""
    return legendre_lambda(w, lam * r)[0] / (lam * legendre_lambda(w, r)[0])


def index_spread_constant(w: Weight, n_max: float = 1e6, points: int = 30) -> float:
    """Smallest C with n (log L(k) - log L(n)) <= C (k + n) for n <= k on a log grid."""
    grid = np.logspace(0, np.log10(n_max), points)
    n, k = np.meshgrid(grid, grid, indexing="ij")
    mask = n <= k
    lhs = n[mask] * (w.log_L_real(k[mask]) - w.log_L_real(n[mask]))
    return float(np.max(lhs / (k[mask] + n[mask])))


def epsilon_transfer_ratio(w: Weight, rho: float) -> float:
    """eps(Lambda_L(rho)) / eps(rho)."""
    lam = legendre_lambda(w, rho)[0]
    return w.epsilon_real(lam) / w.epsilon_real(rho)
