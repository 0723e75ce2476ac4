import logging

import numpy as np
from scipy.optimize import brentq

from config import DEFAULT_RHO0, DEFAULT_SECTOR_MARGIN
from exceptions import DomainError
from models import WeightSpec
from utils import central_diff4

logger = logging.getLogger(__name__)

# step in log s for the fourth-order stencils of non-Denjoy kinds
LOG_STEP = 1e-3


class Weight:
    """
    A weight function L with its logarithmic derivative and log gamma(s) = s log L(s).

    Subclasses provide the unchecked kernels `_log_L`, `_log_L_real` and optionally
    `_epsilon`, `_log_gamma`, `_saddle_function`. The public methods check the sector
    |arg s| < sector_half_angle before evaluating.

    Attributes:
        spec (WeightSpec): serializable description of the weight.
        kind (str): 'denjoy', 'raw' or 'derived'.
        sector_half_angle (float): half-angle of the sector where L is analytic and nonvanishing.
        rho0 (float): threshold below which asymptotic formulas are not trusted.
        abscissa (float): gamma(s) is analytic for Re s > abscissa.
        supports_complex (bool): False for tabulated weights.
    """
    kind = "abstract"
    supports_complex = True

    def __init__(self, spec: WeightSpec, rho0: float = DEFAULT_RHO0,
                 sector_half_angle: float = np.pi - DEFAULT_SECTOR_MARGIN, abscissa: float = 0.0):
        self.spec = spec
        self.rho0 = float(rho0)
        self.sector_half_angle = float(sector_half_angle)
        self.abscissa = float(abscissa)

    def canonical(self) -> str:
        return self.spec.canonical()

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.canonical()})"

    ############# Unchecked kernels #############

    def _log_L(self, s):
        raise NotImplementedError

    def _log_L_real(self, rho):
        return np.real(self._log_L(np.asarray(rho, dtype=complex)))

    def _epsilon(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        nz = s != 0
        w = np.log(s[nz])
        out[nz] = central_diff4(lambda x: self._log_L(np.exp(x)), w, LOG_STEP)
        return out

    def _epsilon_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        pos = rho > 0
        w = np.log(rho[pos])
        out[pos] = central_diff4(lambda x: self._log_L_real(np.exp(x)), w, LOG_STEP)
        return out

    def _log_gamma(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        nz = s != 0
        out[nz] = s[nz] * self._log_L(s[nz])
        return out

    def _log_gamma_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        nz = rho != 0
        out[nz] = rho[nz] * self._log_L_real(rho[nz])
        return out

    def _saddle_function(self, s):
        """d/ds log gamma(s); equals log L(s) + eps(s)."""
        s = np.asarray(s, dtype=complex)
        return self._log_L(s) + self._epsilon(s)

    def _saddle_function_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self._log_L_real(rho) + self._epsilon_real(rho)

    ############# Checked public API #############

    def check_sector(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        outside = (s != 0) & (np.abs(np.angle(s)) >= self.sector_half_angle)
        if np.any(outside):
            bad = s[outside].ravel()[0]
            raise DomainError(f"s={bad} lies outside the sector |arg s| < {self.sector_half_angle:.4f}")
        return s

    def log_L(self, s):
        """log L(s), principal branch in every factor."""
        scalar = np.isscalar(s)
        out = self._log_L(self.check_sector(s))
        return complex(out) if scalar else out

    def epsilon(self, s):
        """eps(s) = s L'(s) / L(s)."""
        scalar = np.isscalar(s)
        out = self._epsilon(self.check_sector(s))
        return complex(out) if scalar else out

    def log_gamma(self, s):
        """log gamma(s) = s log L(s), with log gamma(0) = 0."""
        scalar = np.isscalar(s)
        out = self._log_gamma(self.check_sector(s))
        return complex(out) if scalar else out

    def log_L_real(self, rho):
        scalar = np.isscalar(rho)
        out = self._log_L_real(np.asarray(rho, dtype=float))
        return float(out) if scalar else out

    def epsilon_real(self, rho):
        scalar = np.isscalar(rho)
        out = self._epsilon_real(np.asarray(rho, dtype=float))
        return float(out) if scalar else out

    def log_gamma_int(self, n) -> np.ndarray:
        """log gamma(n) for nonnegative (possibly huge, float-valued) indices."""
        return self._log_gamma_real(np.asarray(n, dtype=float))

    def log_gamma_mp(self, n, dps: int):
        """log gamma(n) as an mpmath number computed with dps digits."""
        raise NotImplementedError

    def saddle_function(self, s):
        return self._saddle_function(self.check_sector(s))

    def L_inverse(self, R: float) -> float:
        """The rho > 0 with L(rho) = R (bisection in log rho)."""
        target = np.log(R)

        def gap(v):
            return self._log_L_real(np.array([np.exp(v)]))[0] - target

        lo, hi = np.log(1e-12), 700.0
        if gap(hi) < 0:
            raise DomainError(f"L^-1({R}) exceeds the double range")
        if gap(lo) > 0:
            return 0.0
        return float(np.exp(brentq(gap, lo, hi, xtol=1e-13)))
