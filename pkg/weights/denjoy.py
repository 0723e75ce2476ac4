import logging
import math

import mpmath
import numpy as np

from config import DEFAULT_RHO0, DEFAULT_SECTOR_MARGIN
from exceptions import FastGrowthError, InvalidWeightError
from models import MultiIndex, WeightSpec
from weights.weight import Weight

logger = logging.getLogger(__name__)

MAX_LEVEL = 3

# E_k = exp_k(1): shifts making log_k(s + E_k) equal to 1 at s = 0
SHIFTS = [1.0, math.e, math.exp(math.e), math.exp(math.exp(math.e))]


def _iterated_log(x, k: int):
    y = x
    for _ in range(k):
        y = np.log(y)
    return y


class DenjoyWeight(Weight):
    """
    L(s) = exp(log^{alpha0}(s+1)) * prod_k log_k^{alpha_k}(s + exp_k(1)).

    Everything is evaluated in closed form with principal branches.
    """
    kind = "denjoy"

    def __init__(self, alpha: MultiIndex, rho0: float = DEFAULT_RHO0,
                 sector_half_angle: float = np.pi - DEFAULT_SECTOR_MARGIN):
        self.alpha0 = float(alpha.alpha0)
        self.levels = alpha.active()
        abscissa = 0.0 if self.alpha0 > 0 else max(SHIFTS[k - 1] - SHIFTS[k] for k, _ in self.levels)
        spec = WeightSpec(type="denjoy", alpha0=self.alpha0, alphas=self.levels)
        super().__init__(spec, rho0=rho0, sector_half_angle=sector_half_angle, abscissa=abscissa)

    def _log_L(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        if self.alpha0 > 0:
            nz = s != 0
            out[nz] += np.exp(self.alpha0 * np.log(np.log(s[nz] + 1.0)))
        for k, a in self.levels:
            out += a * np.log(_iterated_log(s + SHIFTS[k], k))
        return out

    def _log_L_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        if self.alpha0 > 0:
            out += np.log1p(rho) ** self.alpha0
        for k, a in self.levels:
            out += a * np.log(_iterated_log(rho + SHIFTS[k], k))
        return out

    def _epsilon(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        if self.alpha0 > 0:
            nz = s != 0
            lg = np.log(s[nz] + 1.0)
            out[nz] += self.alpha0 * np.exp((self.alpha0 - 1.0) * np.log(lg)) * s[nz] / (s[nz] + 1.0)
        for k, a in self.levels:
            x = s + SHIFTS[k]
            denom = np.array(x)
            y = x
            for _ in range(k):
                y = np.log(y)
                denom = denom * y
            out += a * s / denom
        return out

    def _epsilon_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        if self.alpha0 > 0:
            with np.errstate(divide="ignore", invalid="ignore"):
                term = self.alpha0 * np.log1p(rho) ** (self.alpha0 - 1.0) * rho / (rho + 1.0)
            out += np.where(rho == 0, 0.0, term)
        for k, a in self.levels:
            x = rho + SHIFTS[k]
            denom = np.array(x)
            y = x
            for _ in range(k):
                y = np.log(y)
                denom = denom * y
            out += a * rho / denom
        return out

    def log_gamma_mp(self, n, dps: int):
        with mpmath.workdps(dps):
            n = mpmath.mpf(n)
            if n == 0:
                return mpmath.mpf(0)
            total = mpmath.mpf(0)
            if self.alpha0 > 0:
                total += mpmath.log(n + 1) ** self.alpha0
            for k, a in self.levels:
                y = n + _mp_shift(k)
                for _ in range(k):
                    y = mpmath.log(y)
                total += a * mpmath.log(y)
            return n * total

    def is_quasianalytic(self) -> bool:
        """
        Decide quasianalyticity from the exponents.

        The integral of 1/(u L(u)) converges iff alpha0 > 0 or the exponent vector
        (alpha_1, alpha_2, ...) exceeds (1, 1, ...) at its first deviation.
        """
        if self.alpha0 > 0:
            return False
        exps = dict(self.levels)
        for k in range(1, MAX_LEVEL + 2):
            a = exps.get(k, 0.0)
            if a != 1.0:
                return a < 1.0
        return True


def _mp_shift(k: int):
    y = mpmath.mpf(1)
    for _ in range(k):
        y = mpmath.exp(y)
    return y


def make_denjoy_weight(alpha: MultiIndex, rho0: float = DEFAULT_RHO0) -> DenjoyWeight:
    """
    Build a Denjoy weight from its multi-index.

    Args:
        alpha (MultiIndex): exponents (alpha0, [(k, alpha_k), ...]).
        rho0 (float): asymptotic threshold.

    Returns:
        DenjoyWeight: the weight, with sector half-angle pi - 0.2.

    Raises:
        FastGrowthError: if alpha0 >= 1.
        InvalidWeightError: if no exponent is positive, an exponent is negative, or a level exceeds 3.
    """
    if alpha.alpha0 >= 1.0:
        raise FastGrowthError(f"alpha0={alpha.alpha0} >= 1 gives a fast-growing weight")
    if alpha.alpha0 < 0:
        raise InvalidWeightError(f"alpha0={alpha.alpha0} must be nonnegative")
    levels = alpha.active()
    for k, a in levels:
        if k < 1 or k > MAX_LEVEL:
            raise InvalidWeightError(f"iterated-log level {k} outside 1..{MAX_LEVEL}")
        if a < 0:
            raise InvalidWeightError(f"exponent alpha_{k}={a} must be positive")
    if alpha.alpha0 == 0 and not levels:
        raise InvalidWeightError("all exponents vanish: L is bounded")
    weight = DenjoyWeight(alpha, rho0=rho0)
    logger.info(f"Built Denjoy weight {weight.canonical()}")
    return weight
