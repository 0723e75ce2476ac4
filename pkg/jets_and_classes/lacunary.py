import logging
from typing import Any, Dict, List, Tuple

import numpy as np

from exceptions import ConstructionIncompleteError, DomainError, PreconditionError
from saddle_geometry.legendre import legendre_lambda
from transforms.jet import Jet, sparse_jet
from utils import trend_slope
from weights.weight import Weight

logger = logging.getLogger(__name__)

# log rho grid for the growth preconditions, up to the top of the double range
GROWTH_LOG_RHO = np.geomspace(np.log(1e3), 600.0, 24)
GROWTH_SLOPE = 0.05
SLACK = 1.1
MAX_LOG_INDEX = 700.0


def _log_log_slope(values: np.ndarray) -> float:
    return trend_slope(np.log(GROWTH_LOG_RHO), values)


def check_growth_preconditions(w: Weight, w2: Weight) -> Dict[str, float]:
    """
    rho L'(rho) -> inf and 1/eps = o(L2), read off as trends of log(eps L) and log(1/(eps L2))
    against log log rho.

    Raises:
        PreconditionError: if either trend is flat or has the wrong sign.
    """
    rho = np.exp(GROWTH_LOG_RHO)
    log_eps = np.log(w.epsilon_real(rho))
    growth = _log_log_slope(log_eps + w.log_L_real(rho))
    if not growth > GROWTH_SLOPE:
        raise PreconditionError(f"rho L'(rho) does not grow for {w.canonical()} (trend {growth:.3f})")
    ratio = _log_log_slope(-log_eps - w2.log_L_real(rho))
    if not ratio < -GROWTH_SLOPE:
        raise PreconditionError(f"1/eps is not o(L2) for {w.canonical()} against {w2.canonical()} "
                                f"(trend {ratio:.3f})")
    return {"rho_L_prime_trend": growth, "eps_L2_trend": ratio}


class _Construction:
    """Quantities of the lacunary series at a candidate index n = e^y."""

    def __init__(self, w: Weight, w2: Weight, delta: float, A: float):
        self.w, self.w2, self.delta, self.A = w, w2, delta, A

    def log_r(self, y: float) -> float:
        """log r_n with r_n = sqrt(min(L, L2)(n) / eps(n))."""
        n = np.exp(y)
        log_min_L = min(self.w.log_L_real(n), self.w2.log_L_real(n))
        return 0.5 * (log_min_L - np.log(self.w.epsilon_real(n)))

    def main_term(self, y_index: float, y_point: float) -> float:
        """Lambda(n r) eps(n r) at n = e^{y_index}, r = r_{e^{y_point}}."""
        arg = np.exp(y_index + self.log_r(y_point))
        return legendre_lambda(self.w, arg)[0] * self.w.epsilon_real(arg)

    def omega(self, y: float) -> float:
        return self.delta * self.main_term(y, y) / legendre_lambda(self.w, np.exp(y))[0]

    def feasible(self, y_prev: float, y: float, k: int) -> bool:
        """Both sparsity inequalities for the next index e^y after e^{y_prev}, with 10% slack."""
        if y > MAX_LOG_INDEX or y + self.log_r(y) > MAX_LOG_INDEX:
            raise DomainError(f"index e^{y:.1f} leaves the double range")
        later_at_earlier = self.A * self.main_term(y, y_prev) * SLACK <= 0.5 * self.main_term(y, y)
        earlier_at_later = (self.A * self.main_term(y_prev, y) * SLACK
                            <= self.delta * self.main_term(y, y) - np.log(2.0 * (k + 1)))
        return bool(later_at_earlier and earlier_at_later)

    def certificate(self, y: float) -> Dict[str, float]:
        """log|F(r_n)| >= delta Lambda(n r_n) eps(n r_n) - log 2 against L2^{-1}(r_n)."""
        log_r = self.log_r(y)
        lower = self.delta * self.main_term(y, y) - np.log(2.0)
        try:
            target = self.w2.L_inverse(float(np.exp(log_r)))
        except DomainError:
            target = float("inf")
        return {"log_index": float(y), "r": float(np.exp(log_r)), "lower_bound": float(lower),
                "target": float(target), "exceeds": bool(lower > target)}


def lacunary_counterexample_jet(w: Weight, w2: Weight, k_terms: int, delta: float = 0.1,
                                A: float = 2.0) -> Tuple[Jet, List[Dict[str, Any]]]:
    """
    Lacunary Fourier series f(x) = sum_k exp(-omega_{n_k} Lambda(n_k)) e^{i n_k x} whose
    singular transform escapes A(L2; R).

    r_n is the geometric mean of 1/eps(n) and min(L, L2)(n); omega_n = delta Lambda(n r_n)
    eps(n r_n) / Lambda(n). The first index is rho0; each next one squares the previous
    index until both sparsity inequalities hold with 10% slack.

    Args:
        w (Weight): weight with rho L'(rho) -> inf.
        w2 (Weight): target weight with 1/eps = o(L2).
        k_terms (int): number of lacunary indices.
        delta (float), A (float): the lower and upper constants of log|E1(i n r_n)| in units
            of Lambda(n r_n) eps(n r_n).

    Returns:
        tuple: (Jet with sparse float indices n_k, certificate: one dict per index with the
        lower bound of log|F(r_{n_k})| and L2^{-1}(r_{n_k})).

    Raises:
        PreconditionError: if the growth hypotheses fail.
        ConstructionIncompleteError: if an index leaves the double range before k_terms are
            found; `partial` carries the (jet, certificate) built so far.
    """
    if k_terms <= 0:
        return sparse_jet([], [], []), []
    trends = check_growth_preconditions(w, w2)
    logger.info(f"Lacunary construction for {w.canonical()} against {w2.canonical()}: {trends}")
    build = _Construction(w, w2, delta, A)

    ys = [float(np.log(w.rho0))]
    while len(ys) < k_terms:
        y = ys[-1]
        found = None
        try:
            while found is None:
                y *= 2.0
                if build.feasible(ys[-1], y, len(ys)):
                    found = y
        except DomainError as e:
            jet, certificate = _assemble(build, ys)
            raise ConstructionIncompleteError(
                f"only {len(ys)} of {k_terms} lacunary indices fit: {e}", partial=(jet, certificate))
        logger.info(f"lacunary index {len(ys)}: n = e^{found:.2f}")
        ys.append(found)
    return _assemble(build, ys)


def _assemble(build: _Construction, ys: List[float]) -> Tuple[Jet, List[Dict[str, Any]]]:
    log_mag = [-build.omega(y) * legendre_lambda(build.w, np.exp(y))[0] for y in ys]
    jet = sparse_jet([float(np.exp(y)) for y in ys], log_mag, [0.0] * len(ys))
    return jet, [build.certificate(y) for y in ys]
