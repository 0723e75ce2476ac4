import logging
from typing import Any, Callable, Dict, List, Tuple

import mpmath
import numpy as np
from pydantic import BaseModel
from scipy.fft import dct

from evaluation.metrics import fit_constant
from exceptions import ConfigError, InsufficientDataError
from saddle_geometry.legendre import legendre_lambda
from transforms.jet import Jet
from weights.weight import Weight

logger = logging.getLogger(__name__)

RECOMPOSITION_TOL = 1e-10
MIN_COEFFICIENTS = 8
# coefficients below this fraction of the largest are roundoff
NOISE_FLOOR = 1e-14
DECAY_DELTAS = [1.0, 0.5, 0.25]
# the last quarter of a resolved expansion is pure roundoff
TAIL_FRACTION = 4
NOISE_MARGIN = 4.0
JET_DPS = 60


class ChebyshevExpansion(BaseModel):
    """
    f(x) = sum_n c_n T_n(chi(x)) on [a, b], chi the affine map onto [-1, 1].

    Attributes:
        a, b (float): interval.
        coefficients (List[float]): c_0..c_N.
        source (str): description of the sampled function.
        recomposition_error (float): max error at the sampling nodes relative to max |f|.
    """
    a: float = -1.0
    b: float = 1.0
    coefficients: List[float]
    source: str = ""
    recomposition_error: float = 0.0

    @property
    def n_max(self) -> int:
        return len(self.coefficients) - 1

    def chi(self, x):
        return (2.0 * np.asarray(x) - self.a - self.b) / (self.b - self.a)

    def __call__(self, x):
        return np.polynomial.chebyshev.chebval(self.chi(x), self.coefficients)

    def significant(self) -> np.ndarray:
        c = np.abs(np.asarray(self.coefficients))
        return c > NOISE_FLOOR * np.max(c) if np.max(c) > 0 else np.zeros(len(c), dtype=bool)

    def noise_floor(self) -> float:
        """Roundoff level of the coefficients, read off the last quarter once the expansion is resolved."""
        c = np.abs(np.asarray(self.coefficients))
        scale = float(np.max(c))
        tail = c[len(c) - max(len(c) // TAIL_FRACTION, 1):]
        floor = max(NOISE_MARGIN * float(np.max(tail)), float(np.finfo(float).eps) * scale)
        return min(floor, NOISE_FLOOR * scale)


def lobatto_nodes(n_max: int, a: float = -1.0, b: float = 1.0) -> np.ndarray:
    """The n_max + 1 Chebyshev-Gauss-Lobatto nodes cos(pi k / n_max) mapped to [a, b]."""
    x = np.cos(np.pi * np.arange(n_max + 1) / n_max)
    return 0.5 * (a + b) + 0.5 * (b - a) * x


def chebyshev_expand(f: Callable, interval: Tuple[float, float] = (-1.0, 1.0), n_max: int = 32,
                     source: str = "") -> ChebyshevExpansion:
    """
    Chebyshev coefficients from samples at the Lobatto nodes by a type-I DCT.

    Exact to roundoff for polynomials of degree <= n_max. Exceptions raised by f propagate.

    Raises:
        ConfigError: if n_max < 1 or the interval is empty.
    """
    a, b = map(float, interval)
    if n_max < 1:
        raise ConfigError(f"n_max must be at least 1, got {n_max}")
    if not b > a:
        raise ConfigError(f"empty interval [{a}, {b}]")
    nodes = lobatto_nodes(n_max, a, b)
    values = np.asarray([f(x) for x in nodes], dtype=float)
    c = dct(values, type=1) / n_max
    c[0] /= 2.0
    c[-1] /= 2.0
    scale = max(float(np.max(np.abs(values))), 1e-300)
    recomposed = np.polynomial.chebyshev.chebval(np.cos(np.pi * np.arange(n_max + 1) / n_max), c)
    error = float(np.max(np.abs(recomposed - values)) / scale)
    if error > RECOMPOSITION_TOL:
        logger.warning(f"Chebyshev recomposition error {error:.3g} for {source or 'f'} exceeds {RECOMPOSITION_TOL}")
    return ChebyshevExpansion(a=a, b=b, coefficients=c.tolist(), source=source, recomposition_error=error)


def _monomial_rows(k_max: int) -> List[List[int]]:
    """Integer power-basis coefficients of T_0..T_k_max from T_{k+1} = 2u T_k - T_{k-1}."""
    rows = [[1], [0, 1]]
    for k in range(1, k_max):
        nxt = [0] + [2 * v for v in rows[k]]
        for j, v in enumerate(rows[k - 1]):
            nxt[j] -= v
        rows.append(nxt)
    return rows[:k_max + 1]


def to_jet(ce: ChebyshevExpansion) -> Jet:
    """
    Taylor coefficients at 0 of the expansion.

    Coefficients at the noise floor are dropped before the change of basis, which is done
    exactly in mpmath. Each Taylor coefficient carries the bound floor * sum_k |T_k^(n)(0)| / n!
    over the kept and the first two dropped indices; trailing coefficients at or below their
    bound are roundoff and cut from the jet.
    """
    c = np.asarray(ce.coefficients, dtype=float)
    floor = ce.noise_floor()
    keep = np.flatnonzero(np.abs(c) > floor)
    K = int(keep[-1]) if len(keep) else 0
    rows = _monomial_rows(K + 2)
    alpha = 2.0 / (ce.b - ce.a)
    beta = -(ce.a + ce.b) / (ce.b - ce.a)
    with mpmath.workdps(JET_DPS):
        d = [mpmath.fsum(mpmath.mpf(float(c[k])) * rows[k][j] for k in range(j, K + 1)) for j in range(K + 1)]
        dd = [mpmath.mpf(floor) * sum(abs(rows[k][j]) for k in range(j, K + 3))
              for j in range(K + 3)]
        a, e = [], []
        for n in range(K + 1):
            scale = mpmath.mpf(alpha) ** n
            a.append(float(scale * mpmath.fsum(d[j] * mpmath.binomial(j, n) * mpmath.mpf(beta) ** (j - n)
                                               for j in range(n, K + 1))))
            e.append(float(abs(scale) * mpmath.fsum(dd[j] * mpmath.binomial(j, n) * abs(mpmath.mpf(beta)) ** (j - n)
                                                    for j in range(n, K + 3))))
    a, e = np.array(a), np.array(e)
    resolved = np.flatnonzero(np.abs(a) > e)
    n_terms = int(resolved[-1]) + 1 if len(resolved) else 1
    logger.info(f"Taylor jet of {ce.source or 'f'}: {K + 1} Chebyshev terms, {n_terms} resolved Taylor terms")
    return Jet.from_values(a[:n_terms], provenance="sampled")


def coeff_decay_report(ce: ChebyshevExpansion, w: Weight) -> Dict[str, Any]:
    """
    Fit |c_n| <= C exp(-Lambda_L(n) / delta) for delta in {1, 1/2, 1/4}, plus the geometric
    rate of analytic sources.

    The constant is fitted on the lower half of the significant indices and validated on the
    upper half. An expansion with fewer than 8 significant coefficients has finite support and
    passes trivially.

    Returns:
        dict: 'finite_support', per-delta {'C', 'passed', 'score'} under 'deltas', and the
        exponential rate under 'geometric_rate'.

    Raises:
        InsufficientDataError: if the expansion has fewer than 8 coefficients.
    """
    c = np.abs(np.asarray(ce.coefficients))
    if len(c) < MIN_COEFFICIENTS:
        raise InsufficientDataError(f"decay report needs at least {MIN_COEFFICIENTS} coefficients, got {len(c)}")
    n = np.flatnonzero(ce.significant())
    n = n[n >= 1]
    if len(n) < MIN_COEFFICIENTS:
        return {"finite_support": True, "support": n.tolist(),
                "deltas": {d: {"C": float(np.max(c)), "passed": True, "score": 0.0} for d in DECAY_DELTAS},
                "geometric_rate": float("inf")}
    log_c = np.log(c[n])
    lam = np.array([legendre_lambda(w, float(k))[0] for k in n])
    deltas = {}
    for delta in DECAY_DELTAS:
        fit = fit_constant(n, log_c + lam / delta)
        deltas[delta] = {"C": float(np.exp(fit["fit"])), "passed": fit["passed"], "score": fit["score"]}
        logger.info(f"{ce.source}: delta={delta} C={deltas[delta]['C']:.4g} passed={fit['passed']}")
    slope = float(np.polyfit(n, log_c, 1)[0])
    return {"finite_support": False, "support": n.tolist(), "deltas": deltas, "geometric_rate": -slope}


def geometric_bound_check(ce: ChebyshevExpansion, constant: float, base: float, n_max: int = 30) -> Dict[str, Any]:
    """
    |c_n| <= constant * base^{-n} for n <= n_max, over the indices where the bound is above roundoff.
    """
    c = np.abs(np.asarray(ce.coefficients))
    n = np.arange(min(n_max, ce.n_max) + 1)
    bound = constant * base ** (-n.astype(float))
    checked = n[bound > NOISE_FLOOR * max(float(np.max(c)), 1.0)]
    ratios = c[checked] / bound[checked]
    return {"checked": checked.tolist(), "max_ratio": float(np.max(ratios)), "passed": bool(np.all(ratios <= 1.0))}


def bernstein_ellipse_check(n: int, rhos=(1.1, 1.5), samples: int = 64) -> Dict[float, float]:
    """max |T_n(z)| / rho^n over the boundary of the ellipse with foci -1, 1 and parameter rho."""
    coeffs = np.zeros(n + 1)
    coeffs[n] = 1.0
    phi = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    ratios = {}
    for rho in rhos:
        z = 0.5 * (rho * np.exp(1j * phi) + np.exp(-1j * phi) / rho)
        ratios[float(rho)] = float(np.max(np.abs(np.polynomial.chebyshev.chebval(z, coeffs))) / rho ** n)
    return ratios
