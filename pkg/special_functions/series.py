import cmath
import logging
from typing import Dict, Tuple

import mpmath
import numpy as np
from scipy.special import gammaln

from config import DEFAULT_TOL, MAX_SERIES_TERMS, MP_DPS_BUDGET
from exceptions import (
    ConfigError,
    PrecisionExhaustedError,
    PreconditionError,
    SaddleFailureError,
    TruncationFailureError,
)
from models import EvalResult
from saddle_geometry.saddle import solve_saddle
from utils import gauss_legendre, log_abs_sum
from weights.derived import TailIntegral
from weights.weight import Weight

logger = logging.getLogger(__name__)

KINDS = ["E", "E1", "Etilde", "Estar"]

CHUNK_START = 256
DECREASING_RUN = 5
EPS_FLOOR = 1e-300
DOUBLE_DIGITS = 15.0
MIN_TOL = 1e-14

# Mellin-Barnes line Re s = 1/2, used off the positive ray
MB_ARG_MIN = np.pi / 3
MB_RADIUS_MIN = 2.0
MB_TAU_MAX = 120.0
MB_PANEL = 0.25
MB_KINDS = ("denjoy", "derived")

ASYMPTOTIC_DELTA = 0.1


class SeriesEvaluator:
    """
    Power series sum_n exp(c_n) z^n with positive coefficients given in log form.

    Kinds:
        E:      c_n = -log gamma(n+1)
        E1:     c_n = -log(n! gamma(n+1))
        Etilde: c_n = (n+1) log eps(n+1), eps clamped at 1e-300
        Estar:  c_n = log gamma~(n+1) - log gamma(n+1) = (n+1) log J(n+1)
    """

    def __init__(self, w: Weight, kind: str = "E", max_terms: int = MAX_SERIES_TERMS):
        if kind not in KINDS:
            raise ConfigError(f"Unknown series kind {kind!r}; expected one of {KINDS}")
        self.weight = w
        self.kind = kind
        self.max_terms = int(max_terms)
        self.tail = TailIntegral(w) if kind == "Estar" else None

    def __repr__(self) -> str:
        return f"SeriesEvaluator({self.kind}, {self.weight.canonical()})"

    def log_coefficients(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        if self.kind == "E":
            return -self.weight.log_gamma_int(n + 1)
        if self.kind == "E1":
            return -(gammaln(n + 1) + self.weight.log_gamma_int(n + 1))
        if self.kind == "Etilde":
            eps = self.weight.epsilon_real(n + 1)
            return (n + 1) * np.log(np.maximum(eps, EPS_FLOOR))
        return (n + 1) * self.tail.log_J_real(n + 1)

    def log_coefficient_mp(self, n: int, dps: int):
        with mpmath.workdps(dps):
            if self.kind == "E":
                return -self.weight.log_gamma_mp(n + 1, dps)
            if self.kind == "E1":
                return -(mpmath.loggamma(n + 1) + self.weight.log_gamma_mp(n + 1, dps))
            return mpmath.mpf(float(self.log_coefficients(np.array([float(n)]))[0]))


############# Truncation #############

def _truncation_index(log_t: np.ndarray, phase: np.ndarray, tol: float, log_ref: float = None):
    """First index whose term is below tol * |S| after 5 consecutive decreases, or None.

    |S| is the double-precision sum unless a reference log|S| is given.
    """
    log_S = log_abs_sum(log_t, phase)[0] if log_ref is None else log_ref
    if not np.isfinite(log_S) or len(log_t) <= DECREASING_RUN:
        return None
    decreasing = (np.diff(log_t) < 0).astype(int)
    run = np.convolve(decreasing, np.ones(DECREASING_RUN, dtype=int), mode="valid")
    ok = np.zeros(len(log_t), dtype=bool)
    ok[DECREASING_RUN:] = run == DECREASING_RUN
    small = log_t < np.log(tol) + log_S
    hits = np.flatnonzero(ok & small)
    return int(hits[0]) if len(hits) else None


def _collect_terms(se: SeriesEvaluator, z: complex, tol: float, log_ref: float = None):
    """(log|t_n|, arg t_n, cut) from chunks that double until the truncation rule holds; None past max_terms."""
    log_r, arg = np.log(abs(z)), cmath.phase(z)
    size = CHUNK_START
    while True:
        n = np.arange(size, dtype=float)
        log_t = se.log_coefficients(n) + n * log_r
        phase = n * arg
        cut = _truncation_index(log_t, phase, tol, log_ref)
        if cut is not None:
            return log_t, phase, cut
        if size >= se.max_terms:
            return None
        size = min(2 * size, se.max_terms)


def _sum_mp(se: SeriesEvaluator, z: complex, count: int, dps: int) -> Tuple[float, float]:
    with mpmath.workdps(dps):
        log_z = mpmath.log(mpmath.mpc(z.real, z.imag))
        total = mpmath.mpc(0)
        for n in range(count):
            total += mpmath.exp(se.log_coefficient_mp(n, dps) + n * log_z)
        if total == 0:
            return -np.inf, 0.0
        return float(mpmath.log(abs(total))), float(mpmath.arg(total))


def _digits_needed(log_l1: float, log_S: float, tol: float) -> int:
    return int(np.ceil((log_l1 - log_S) / np.log(10.0) - np.log10(tol) + 10))


def eval_series_function(se: SeriesEvaluator, z: complex, tol: float = DEFAULT_TOL) -> EvalResult:
    """
    Sum the series of `se` at z in log space.

    Terms are generated in chunks that double until the truncation rule holds. When the
    l1-size of the retained terms exceeds |S| by more than double precision can absorb,
    the sum is redone in mpmath. The double sum then only bounds |S| from above, so the
    mpmath sum is repeated with the cut and the digit count re-derived from its own |S|
    until both are consistent.

    Args:
        se (SeriesEvaluator): the series.
        z (complex): evaluation point.
        tol (float): relative tolerance, at least 1e-14.

    Returns:
        EvalResult: log|F(z)|, arg F(z) and the relative error estimate.

    Raises:
        PreconditionError: if tol < 1e-14.
        TruncationFailureError: if the term budget is exhausted (kind E falls back to
            eval_E_asymptotic instead).
        PrecisionExhaustedError: if the cancellation needs more than MP_DPS_BUDGET digits.
    """
    if tol < MIN_TOL:
        raise PreconditionError(f"tol={tol:g} is below the supported {MIN_TOL:g}")
    z = complex(z)
    if z == 0:
        c0 = float(se.log_coefficients(np.array([0.0]))[0])
        return EvalResult(log_magnitude=c0, phase=0.0, abs_error_estimate=1e-16, method="series")

    def exhausted():
        message = f"{se} at z={z}: no truncation within {se.max_terms} terms"
        if se.kind == "E":
            logger.warning(f"{message}; using the saddle-point asymptotic")
            return eval_E_asymptotic(se.weight, z)
        raise TruncationFailureError(message)

    terms = _collect_terms(se, z, tol)
    if terms is None:
        return exhausted()
    log_t, phase, cut = terms
    log_S, arg_S, log_l1 = log_abs_sum(log_t[:cut + 1], phase[:cut + 1])
    loss = (log_l1 - log_S) / np.log(10.0) if np.isfinite(log_S) else np.inf
    if loss <= DOUBLE_DIGITS + np.log10(tol):
        error = max(tol, 1e-16 * 10 ** loss)
        return EvalResult(log_magnitude=log_S, phase=arg_S, abs_error_estimate=error, method="series")

    if not np.isfinite(loss):
        loss = (log_l1 - np.max(log_t[:cut + 1])) / np.log(10.0) + 30.0
    dps = int(np.ceil(loss - np.log10(tol) + 10))
    while True:
        if dps > MP_DPS_BUDGET:
            raise PrecisionExhaustedError(
                f"{se} at z={z}: cancellation needs {dps} > {MP_DPS_BUDGET} digits")
        logger.info(f"{se} at z={z}: resumming {cut + 1} terms with dps={dps}")
        log_S, arg_S = _sum_mp(se, z, cut + 1, dps)
        if not np.isfinite(log_S):
            dps *= 2
            continue
        terms = _collect_terms(se, z, tol, log_ref=log_S)
        if terms is None:
            return exhausted()
        log_t, phase, new_cut = terms
        log_l1 = log_abs_sum(log_t[:max(cut, new_cut) + 1], phase[:max(cut, new_cut) + 1])[2]
        needed = _digits_needed(log_l1, log_S, tol)
        if new_cut <= cut and needed <= dps:
            break
        cut = max(cut, new_cut)
        if needed > dps:
            dps = max(min(2 * dps, MP_DPS_BUDGET), needed)
    return EvalResult(log_magnitude=log_S, phase=arg_S, abs_error_estimate=tol, method="series")


############# Mellin-Barnes integral #############

_MB_RULES: Dict[str, Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}


def _mb_rule(w: Weight, order: int):
    key = f"{w.canonical()}|{order}"
    if key not in _MB_RULES:
        x01, w01 = gauss_legendre(order)
        edges = np.arange(-MB_TAU_MAX, MB_TAU_MAX + MB_PANEL / 2, MB_PANEL)
        tau = (edges[:-1, None] + MB_PANEL * x01[None, :]).ravel()
        s = 0.5 + 1j * tau
        log_w = (np.log(np.tile(MB_PANEL * w01, len(edges) - 1)) - np.logaddexp(np.pi * tau, -np.pi * tau)
                 - w._log_gamma(1.0 - s))
        _MB_RULES[key] = (s, np.real(log_w), np.imag(log_w), tau)
    return _MB_RULES[key]


def mellin_barnes_applicable(w: Weight, z: complex) -> bool:
    z = complex(z)
    return w.kind in MB_KINDS and abs(z) > MB_RADIUS_MIN and abs(cmath.phase(z)) >= MB_ARG_MIN


def eval_E_mellin_barnes(w: Weight, z: complex) -> EvalResult:
    """
    E(z) = (1/2) int exp(-s log(-z)) / (cosh(pi tau) gamma(1-s)) dtau on s = 1/2 + i tau.

    Closing the line to the left picks up the residues z^n / gamma(n+1) at s = -n. The
    integrand decays when |arg(-z)| < pi - sup arg log L, which holds for slowly varying
    weights and |arg z| >= pi/3. The error estimate compares 8- and 6-point panels.
    """
    z = complex(z)
    log_mz = cmath.log(-z)
    values = []
    for order in (8, 6):
        s, log_w_re, log_w_im, _ = _mb_rule(w, order)
        log_t = log_w_re + np.real(-s * log_mz)
        phase = log_w_im + np.imag(-s * log_mz)
        log_S, arg_S, _ = log_abs_sum(log_t, phase)
        values.append((log_S, arg_S))
    (log_S, arg_S), (log_S6, arg_S6) = values
    fine = cmath.exp(complex(0.0, arg_S))
    coarse = cmath.exp(complex(log_S6 - log_S, arg_S6))
    error = max(abs(fine - coarse), 1e-15)
    return EvalResult(log_magnitude=log_S, phase=arg_S, abs_error_estimate=error, method="quadrature")


############# Saddle-point asymptotic #############

def eval_E_asymptotic(w: Weight, z: complex) -> EvalResult:
    """
    Saddle-point main term zE(z) = sqrt(2 pi s / eps(s)) exp(s eps(s)) with s = s_z.

    Inside the image of the sector |arg s| <= pi/2 + 0.1 the main term is returned. Off
    the positive ray, when the saddle lies outside that sector or Newton finds none, z is
    on the bounded branch and E(z) = -1/z (1 + o(1)) is reported.

    Raises:
        BelowThresholdError: if |z| does not exceed L(rho0).
        SaddleFailureError: if Newton fails on the positive ray.
    """
    z = complex(z)
    if z.imag < 0:
        upper = eval_E_asymptotic(w, z.conjugate())
        return upper.model_copy(update={"phase": -upper.phase})
    if w.kind == "raw":
        logger.debug(f"limsup eps < 2 is not verified for raw weight {w.canonical()}")
    try:
        sp = solve_saddle(w, z)
    except SaddleFailureError:
        if z.imag == 0 and z.real > 0:
            raise
        sp = None
    if sp is None or abs(sp.theta) > np.pi / 2 + ASYMPTOTIC_DELTA:
        log_E = -cmath.log(-z)
        return EvalResult(log_magnitude=log_E.real, phase=log_E.imag, abs_error_estimate=1.0,
                          method="asymptotic")
    s = sp.s
    eps = complex(w._epsilon(np.array([s]))[0])
    log_zE = 0.5 * cmath.log(2 * np.pi * s / eps) + s * eps
    log_E = log_zE - cmath.log(z)
    phase = float(np.angle(cmath.exp(complex(0.0, log_E.imag))))
    return EvalResult(log_magnitude=log_E.real, phase=phase, abs_error_estimate=float(abs(eps)),
                      method="asymptotic")


def asymptotic_ratio(w: Weight, rho: float, tol: float = DEFAULT_TOL) -> float:
    """r E(r) divided by sqrt(2 pi rho / eps(rho)) exp(rho eps(rho)) at r = L(rho) e^{eps(rho)}."""
    eps = w.epsilon_real(rho)
    log_r = w.log_L_real(rho) + eps
    series = eval_series_function(series_evaluator(w, "E"), float(np.exp(log_r)), tol)
    main = 0.5 * np.log(2 * np.pi * rho / eps) + rho * eps
    return float(np.exp(log_r + series.log_magnitude - main))


############# Dispatch #############

_EVALUATORS: Dict[str, SeriesEvaluator] = {}


def series_evaluator(w: Weight, kind: str = "E") -> SeriesEvaluator:
    key = f"{w.canonical()}|{kind}"
    if key not in _EVALUATORS:
        _EVALUATORS[key] = SeriesEvaluator(w, kind)
    return _EVALUATORS[key]


def eval_E(w: Weight, z: complex, tol: float = DEFAULT_TOL, kind: str = "E") -> EvalResult:
    """
    Evaluate a comparison function, choosing the method by region.

    E off the positive ray (|arg z| >= pi/3, |z| > 2) uses the Mellin-Barnes integral for
    Denjoy and derived weights; everything else goes through the power series.
    """
    if kind == "E" and mellin_barnes_applicable(w, z):
        return eval_E_mellin_barnes(w, z)
    return eval_series_function(series_evaluator(w, kind), z, tol)


def log_E_real(w: Weight, r: float, tol: float = DEFAULT_TOL) -> float:
    """log E(r) on the positive ray; the asymptotic is used once the series budget is exceeded."""
    try:
        return eval_E(w, r, tol).log_magnitude
    except PrecisionExhaustedError:
        return eval_E_asymptotic(w, r).log_magnitude
