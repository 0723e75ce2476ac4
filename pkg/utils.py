import hashlib
import json
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy.special import logsumexp

############# Log-space arithmetic #############

def log_abs_sum(log_mag: np.ndarray, phase: np.ndarray) -> Tuple[float, float, float]:
    """
    Sum complex terms given as (log|t_n|, arg t_n) without overflow.

    Args:
        log_mag (np.ndarray): log-magnitudes of the terms (-inf for zero terms).
        phase (np.ndarray): arguments of the terms.

    Returns:
        tuple:
          - log|S| (float): log-magnitude of the sum (-inf if the sum vanishes).
          - arg S (float): argument of the sum.
          - log sum |t_n| (float): log of the l1 size, used as cancellation gauge.
    """
    log_mag = np.asarray(log_mag, dtype=float)
    phase = np.asarray(phase, dtype=float)
    finite = np.isfinite(log_mag)
    if not np.any(finite):
        return -np.inf, 0.0, -np.inf
    m = np.max(log_mag[finite])
    scaled = np.exp(log_mag[finite] - m) * np.exp(1j * phase[finite])
    total = scaled.sum()
    l1 = float(logsumexp(log_mag[finite]))
    if total == 0:
        return -np.inf, 0.0, l1
    return float(m + np.log(abs(total))), float(np.angle(total)), l1


def log_complex(z) -> np.ndarray:
    """Principal complex logarithm that maps 0 to -inf instead of warning."""
    z = np.asarray(z, dtype=complex)
    with np.errstate(divide="ignore"):
        return np.log(z)


############# Quadrature rules #############

@lru_cache(maxsize=32)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=32)
def clenshaw_curtis(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Clenshaw-Curtis nodes and weights on [-1, 1] with n+1 points.

    Nodes are returned in increasing order, endpoints included.
    """
    if n < 1:
        raise ValueError("Clenshaw-Curtis needs n >= 1")
    theta = np.pi * np.arange(n + 1) / n
    x = -np.cos(theta)
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    interior = theta[1:-1]
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n ** 2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * interior) / (4 * k ** 2 - 1)
        v -= np.cos(n * interior) / (n ** 2 - 1)
    else:
        w[0] = w[n] = 1.0 / n ** 2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * interior) / (4 * k ** 2 - 1)
    w[1:-1] = 2.0 * v / n
    return x, w


def composite_gauss(a: float, b: float, n_panels: int, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule on [a, b] with equal panels, vectorized."""
    x01, w01 = gauss_legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * x01[None, :]).ravel()
    weights = (h[:, None] * w01[None, :]).ravel()
    return nodes, weights


############# Differentiation #############

def central_diff4(f: Callable, x, h):
    """Fourth-order central difference f'(x) with step h (vectorized)."""
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


############# Trend statistics #############

def trend_slope(x, y) -> float:
    """Least-squares slope of y against x; nan when fewer than two finite points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    mask = np.isfinite(x) & np.isfinite(y)
    if mask.sum() < 2:
        return float("nan")
    return float(np.polyfit(x[mask], y[mask], 1)[0])


def stable_hash(payload) -> str:
    """Short sha256 of a JSON-serializable payload with sorted keys."""
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
