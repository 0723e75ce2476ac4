import logging
from typing import Dict, List, Optional

import mpmath
import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import digamma, loggamma

from config import DEFAULT_RHO0
from exceptions import ConfigError, DomainError, InvalidWeightError, PrecisionExhaustedError
from models import WeightSpec
from weights.weight import Weight

logger = logging.getLogger(__name__)

RAW_FAMILIES = ["borel", "mittag_leffler", "constant", "power", "table"]


class RawGammaWeight(Weight):
    """
    A weight given directly through log gamma.

    Families:
        borel: log gamma(s) = log Gamma(s), so gamma(n+1) = n! and E(z) = e^z.
        mittag_leffler(alpha): log gamma(s) = log Gamma(alpha (s-1) + 1).
        constant(c): L = c.
        power(a): L = (s+1)^a.
        table: tabulated log gamma(n), n = 0..N; real arguments only.
    """
    kind = "raw"

    def __init__(self, family: str, params: Optional[Dict[str, float]] = None,
                 table: Optional[List[float]] = None, rho0: float = DEFAULT_RHO0):
        if family not in RAW_FAMILIES:
            raise InvalidWeightError(f"Unknown raw family {family!r}; expected one of {RAW_FAMILIES}")
        params = dict(params or {})
        self.family = family
        self.params = params
        abscissa = 0.0
        if family == "mittag_leffler":
            self.alpha = float(params.get("alpha", 2.0))
            if self.alpha <= 0:
                raise InvalidWeightError("mittag_leffler needs alpha > 0")
            abscissa = 1.0 - 1.0 / self.alpha
        elif family == "constant":
            self.c = float(params.get("c", np.e))
            if self.c < 1:
                raise InvalidWeightError("constant weight needs c >= 1")
        elif family == "power":
            self.a = float(params.get("a", 1.0))
            if self.a <= 0:
                raise InvalidWeightError("power weight needs a > 0")
            abscissa = -1.0
        elif family == "table":
            if not table or len(table) < 4:
                raise InvalidWeightError("table weight needs at least 4 values of log gamma(n)")
            values = np.asarray(table, dtype=float)
            self._table_n = np.arange(len(values), dtype=float)
            self._table_spline = CubicSpline(self._table_n, values)
            self.supports_complex = False
        spec = WeightSpec(type="raw", family=family, params=params, table=list(table) if table else None)
        super().__init__(spec, rho0=rho0, abscissa=abscissa)

    def _log_gamma(self, s):
        s = np.asarray(s, dtype=complex)
        if self.family == "table":
            raise DomainError("table weights are defined on the real ray only")
        out = np.zeros_like(s)
        nz = s != 0
        x = s[nz]
        if self.family == "borel":
            out[nz] = loggamma(x)
        elif self.family == "mittag_leffler":
            out[nz] = loggamma(self.alpha * (x - 1.0) + 1.0)
        elif self.family == "constant":
            out[nz] = x * np.log(self.c)
        elif self.family == "power":
            out[nz] = self.a * x * np.log(x + 1.0)
        return out

    def _log_gamma_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.family == "table":
            n_max = self._table_n[-1]
            if np.any(rho < 0) or np.any(rho > n_max):
                raise DomainError(f"table weight is tabulated on [0, {n_max:g}] only")
            out = self._table_spline(rho)
            return np.where(rho == 0, 0.0, out)
        return np.real(self._log_gamma(rho.astype(complex)))

    def _log_L(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros_like(s)
        nz = s != 0
        out[nz] = self._log_gamma(s[nz]) / s[nz]
        if self.family == "constant":
            out[~nz] = np.log(self.c)
        return out

    def _log_L_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        out = np.zeros_like(rho)
        nz = rho != 0
        out[nz] = self._log_gamma_real(rho[nz]) / rho[nz]
        if self.family == "constant":
            out[~nz] = np.log(self.c)
        return out

    def _saddle_function(self, s):
        s = np.asarray(s, dtype=complex)
        if self.family == "borel":
            return digamma(s)
        if self.family == "mittag_leffler":
            return self.alpha * digamma(self.alpha * (s - 1.0) + 1.0)
        if self.family == "constant":
            return np.full_like(s, np.log(self.c))
        if self.family == "power":
            return self.a * (np.log(s + 1.0) + s / (s + 1.0))
        raise DomainError("table weights are defined on the real ray only")

    def _saddle_function_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.family == "table":
            return self._table_spline(rho, 1)
        return np.real(self._saddle_function(rho.astype(complex)))

    def log_gamma_mp(self, n, dps: int):
        with mpmath.workdps(dps):
            n = mpmath.mpf(n)
            if n == 0:
                return mpmath.mpf(0)
            if self.family == "borel":
                return mpmath.loggamma(n)
            if self.family == "mittag_leffler":
                return mpmath.loggamma(self.alpha * (n - 1) + 1)
            if self.family == "constant":
                return n * mpmath.log(self.c)
            if self.family == "power":
                return self.a * n * mpmath.log(n + 1)
        raise PrecisionExhaustedError("table weights carry double precision only")

    def closed_form_kernel(self, t):
        """Exact K(t) where the family has one, else None."""
        t = np.asarray(t, dtype=float)
        if self.family == "borel":
            return np.exp(-t)
        if self.family == "mittag_leffler":
            a = self.alpha
            return (1.0 / a) * t ** ((1.0 - a) / a) * np.exp(-t ** (1.0 / a))
        return None

    def check_kernel_support(self):
        if self.family == "constant":
            raise ConfigError("constant weights have no saddle point: the kernel K does not exist")
