import logging

import numpy as np
from scipy.interpolate import CubicSpline

from config import GRID_DENSITY
from exceptions import DivergentIntegralError, InvalidWeightError, PreconditionError
from models import WeightSpec
from utils import gauss_legendre
from weights.weight import Weight

logger = logging.getLogger(__name__)

DERIVATIONS = ["dual", "harmonic_mean", "family", "dual_quotient"]

# window of the tabulated tail integral J(rho) = int_rho^inf du / (u L(u))
J_RHO_MIN = 1e-6
J_RHO_MAX = 1e12
V_FAR = 690.0
FAR_POINTS = 256
MIN_TAIL_EXPONENT = 1.05
ARG_NODES = 32


class TailIntegral:
    """
    J(rho) = int_rho^inf du / (u L(u)) for a base weight, tabulated in v = log u.

    The window [1e-6, 1e12] is integrated at 64 panels per decade with 8-point
    Gauss-Legendre and continued geometrically in v up to v = 690; beyond that the
    integrand 1/L(e^v) is modelled as v^{-p} with p fitted on the last decade.
    Values are stored as a cubic spline of log J in log rho.
    """

    def __init__(self, base: Weight, density: int = GRID_DENSITY):
        self.base = base
        if getattr(base, "is_quasianalytic", None) and base.is_quasianalytic():
            raise DivergentIntegralError(
                f"int du/(u L(u)) diverges for {base.canonical()}: the weight is quasianalytic")
        v_lo, v_mid = np.log(J_RHO_MIN), np.log(J_RHO_MAX)
        decades = np.log10(J_RHO_MAX / J_RHO_MIN)
        v = np.linspace(v_lo, v_mid, int(round(decades * density)) + 1)
        # beyond 1e12 the grid is geometric in v up to the top of the double range
        far = np.exp(np.linspace(np.log(v_mid), np.log(V_FAR), FAR_POINTS + 1))[1:]
        v = np.concatenate([v, far])
        v_hi = V_FAR
        x01, w01 = gauss_legendre(8)
        h = np.diff(v)
        nodes = v[:-1, None] + h[:, None] * x01[None, :]
        g = np.exp(-base._log_L_real(np.exp(nodes.ravel()))).reshape(nodes.shape)
        panels = (g * w01[None, :]).sum(axis=1) * h

        self.v_hi = v_hi
        self.tail_exponent = self._fit_tail_exponent(v_hi)
        tail = self._tail(v_hi)
        cumulative = np.concatenate([np.cumsum(panels[::-1])[::-1], [0.0]]) + tail
        self.v = v
        self.log_J_table = np.log(cumulative)
        self.g_min = float(np.exp(-base._log_L_real(np.array([J_RHO_MIN]))[0]))
        self.spline = CubicSpline(v, self.log_J_table)
        logger.info(f"Tabulated tail integral for {base.canonical()}: J(1e12)={cumulative[-1]:.4g}, "
                    f"tail exponent p={self.tail_exponent:.3f}")

    def _log_g(self, v):
        return -self.base._log_L_real(np.exp(np.asarray(v, dtype=float)))

    def _fit_tail_exponent(self, v_hi: float) -> float:
        v_lo = v_hi - np.log(10.0)
        lg = self._log_g(np.array([v_lo, v_hi]))
        p = -(lg[1] - lg[0]) / (np.log(v_hi) - np.log(v_lo))
        if p <= MIN_TAIL_EXPONENT:
            raise DivergentIntegralError(
                f"int du/(u L(u)) diverges for {self.base.canonical()} (local exponent p={p:.3f}): "
                f"the weight is quasianalytic")
        return float(p)

    def _tail(self, v):
        v = np.asarray(v, dtype=float)
        return np.exp(self._log_g(v)) * v / (self.tail_exponent - 1.0)

    def log_J_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        v = np.log(np.maximum(rho, 1e-300))
        out = np.empty_like(v)
        inside = (v >= self.v[0]) & (v <= self.v_hi)
        above = v > self.v_hi
        below = v < self.v[0]
        out[inside] = self.spline(v[inside])
        out[above] = np.log(self._tail(v[above]))
        out[below] = np.log(np.exp(self.log_J_table[0]) + self.g_min * (self.v[0] - v[below]))
        return out

    def log_J(self, s):
        """
        Complex continuation J(s) = J(|s|) - i int_0^theta dphi / L(|s| e^{i phi}).
        """
        s = np.asarray(s, dtype=complex)
        rho = np.abs(s)
        theta = np.angle(s)
        J_abs = np.exp(self.log_J_real(rho))
        x01, w01 = gauss_legendre(ARG_NODES)
        phi = theta[..., None] * x01
        arc = np.exp(-self.base._log_L(rho[..., None] * np.exp(1j * phi)))
        correction = theta * (arc * w01).sum(axis=-1)
        return np.log(J_abs - 1j * correction)


class DerivedWeight(Weight):
    """
    Weights built from a base weight L and its tail integral J.

        dual:           L~ = L * J
        harmonic_mean:  L* = L / (eps L + 1)
        family(a):      L_a = L~ (L / L~)^a = L * J^{1-a}
        dual_quotient:  L / L~ = 1 / J
    """
    kind = "derived"

    def __init__(self, base: Weight, derivation: str, a: float = None):
        if derivation not in DERIVATIONS:
            raise InvalidWeightError(f"Unknown derivation {derivation!r}; expected one of {DERIVATIONS}")
        if derivation == "family" and (a is None or a <= 0):
            raise InvalidWeightError("family derivation needs a > 0")
        self.base = base
        self.derivation = derivation
        self.a = a
        self.tail = TailIntegral(base) if derivation != "harmonic_mean" else None
        spec = WeightSpec(type="derived", base=base.spec, derivation=derivation,
                          a=a if derivation == "family" else None)
        abscissa = max(0.0, base.abscissa)
        super().__init__(spec, rho0=base.rho0, sector_half_angle=base.sector_half_angle, abscissa=abscissa)
        self.supports_complex = base.supports_complex

    def _log_L(self, s):
        s = np.asarray(s, dtype=complex)
        if self.derivation == "harmonic_mean":
            log_L = self.base._log_L(s)
            return log_L - np.log(self.base._epsilon(s) * np.exp(log_L) + 1.0)
        log_J = self.tail.log_J(s)
        if self.derivation == "dual":
            return self.base._log_L(s) + log_J
        if self.derivation == "family":
            return self.base._log_L(s) + (1.0 - self.a) * log_J
        return -log_J

    def _log_L_real(self, rho):
        rho = np.asarray(rho, dtype=float)
        if self.derivation == "harmonic_mean":
            log_L = self.base._log_L_real(rho)
            return log_L - np.log(self.base._epsilon_real(rho) * np.exp(log_L) + 1.0)
        log_J = self.tail.log_J_real(rho)
        if self.derivation == "dual":
            return self.base._log_L_real(rho) + log_J
        if self.derivation == "family":
            return self.base._log_L_real(rho) + (1.0 - self.a) * log_J
        return -log_J

    def log_gamma_mp(self, n, dps: int):
        import mpmath
        with mpmath.workdps(dps):
            n = mpmath.mpf(n)
            if n == 0:
                return mpmath.mpf(0)
            return n * mpmath.mpf(float(self._log_L_real(np.array([float(n)]))[0]))

    def log_J_real(self, rho):
        if self.tail is None:
            raise PreconditionError("harmonic-mean weights carry no tail integral")
        return self.tail.log_J_real(rho)


def derive_weight(w: Weight, derivation: str, a: float = None) -> Weight:
    """
    Build a derived weight.

    Args:
        w (Weight): base weight; dual and family need it non-quasianalytic.
        derivation (str): 'dual', 'harmonic_mean', 'family' or 'dual_quotient'.
        a (float, optional): exponent for the family derivation.

    Returns:
        Weight: the derived weight. family with a = 1 returns w itself.

    Raises:
        DivergentIntegralError: if the tail integral of w diverges.
    """
    if derivation == "family" and a == 1.0:
        return w
    weight = DerivedWeight(w, derivation, a=a)
    check_eventually_increasing(weight)
    return weight


def check_eventually_increasing(w: Weight, decades: int = 9):
    """Raise InvalidWeightError unless log L increases and grows on [rho0, rho0 * 10^decades]."""
    rho = np.logspace(np.log10(w.rho0), np.log10(w.rho0) + decades, 4 * decades + 1)
    log_L = w._log_L_real(rho)
    upper = log_L[len(log_L) // 2:]
    if not np.all(np.isfinite(log_L)) or np.any(np.diff(upper) < -1e-12) or log_L[-1] <= log_L[0]:
        raise InvalidWeightError(f"{w.canonical()} is not eventually increasing to infinity")
