import logging
from typing import Any, Dict, List, Optional

import numpy as np

from config import DEFAULT_TOL
from exceptions import PrecisionExhaustedError, ResumError
from saddle_geometry.contours import build_contour, gamma_R_angle, psi_radius
from saddle_geometry.legendre import legendre_lambda
from special_functions.kernel import KernelEvaluator, kernel_saddle
from special_functions.series import eval_E, log_E_real
from utils import trend_slope
from weights.weight import Weight

logger = logging.getLogger(__name__)

DELTA1_GRID = [0.1, 0.05, 0.02, 0.01, 0.005]
FLAT_SLOPE = 0.05


def matching_scan(ke: KernelEvaluator, delta: float = 0.3, delta1_grid: List[float] = DELTA1_GRID,
                  stride: int = 4) -> Dict[str, Any]:
    """
    Scan delta1 for a finite, flat-trending sup of log E(delta1 t) + log E((1 - delta) t) + log|K(t)|
    over the cached t >= 1.

    Returns:
        dict: delta1 (first value that works, or None), sup, slope, t and values for it.
    """
    ke.ensure_cache()
    u = ke.log_t[ke.log_t >= 0][::stride]
    t = np.exp(u)
    log_K, _ = ke.kernel_values(t)
    w = ke.weight
    far = np.array([log_E_real(w, (1 - delta) * x) for x in t])
    result: Dict[str, Any] = {"delta1": None, "sup": float("inf"), "slope": float("nan"),
                              "t": t.tolist(), "values": []}
    for delta1 in delta1_grid:
        near = np.array([log_E_real(w, delta1 * x) for x in t])
        values = near + far + log_K
        upper = slice(len(values) // 2, None)
        slope = trend_slope(u[upper], values[upper])
        sup = float(np.max(values))
        logger.info(f"matching scan {w.canonical()}: delta1={delta1}, sup={sup:.4g}, slope={slope:.4g}")
        if np.isfinite(sup) and slope <= FLAT_SLOPE:
            result.update({"delta1": delta1, "sup": sup, "slope": slope, "values": values.tolist()})
            break
    return result


def sector_bound_constant(w: Weight, R: float = 3.0, n_radii: int = 8, n_angles: int = 12,
                          tol: float = DEFAULT_TOL) -> Dict[str, Any]:
    """
    max of log|E(z)| / log|z| over R <= |z| <= R^2 and theta_R <= |arg z| <= pi.
    """
    theta = gamma_R_angle(w, R)
    radii = np.logspace(np.log10(R), 2 * np.log10(R), n_radii)
    angles = np.linspace(theta, np.pi, n_angles)
    ratios = []
    for r in radii:
        for psi in angles:
            value = eval_E(w, r * np.exp(1j * psi), tol).log_magnitude
            ratios.append(value / np.log(r))
    return {"theta_R": theta, "C": float(np.max(ratios)), "ratios": ratios}


def ray_sandwich(w: Weight, r_values=None, eta: float = 0.5, tol: float = DEFAULT_TOL) -> Dict[str, Any]:
    """
    Constants C1, C2 with L^{-1}(eta r) <= C1 log E(r) and log E(r) <= C2 L^{-1}(r).

    The default radii run from 3 up to the r whose L^{-1} still fits in double range.
    """
    if r_values is None:
        r_top = 0.9 * float(np.exp(w.log_L_real(np.exp(600.0))))
        r_values = np.logspace(np.log10(3.0), np.log10(r_top), 16)
    lower, upper = [], []
    for r in r_values:
        log_E = log_E_real(w, float(r), tol)
        lower.append(w.L_inverse(eta * r) / log_E)
        upper.append(log_E / w.L_inverse(r))
    return {"r": list(map(float, r_values)), "C1": float(np.max(lower)), "C2": float(np.max(upper)),
            "lower": lower, "upper": upper}


def e1_global_constant(w: Weight, radius: float = 1e3, samples: int = 32, seed: int = 0,
                       tol: float = 1e-8) -> Dict[str, Any]:
    """
    Single C with log|E1(z)| <= C Lambda(|z|) + C over random z in the disk |z| <= radius.
    Samples whose cancellation exceeds the precision budget are skipped and counted.
    """
    rng = np.random.default_rng(seed)
    z = radius * np.sqrt(rng.uniform(size=samples)) * np.exp(1j * rng.uniform(-np.pi, np.pi, size=samples))
    ratios, skipped = [], 0
    for point in z:
        try:
            value = eval_E(w, complex(point), tol, kind="E1").log_magnitude
        except PrecisionExhaustedError:
            skipped += 1
            continue
        lam, _ = legendre_lambda(w, max(abs(point), 1.0))
        ratios.append(value / (lam + 1.0))
    return {"C": float(np.max(ratios)) if ratios else float("nan"), "samples": len(ratios), "skipped": skipped}


def e1_imaginary_ratio(w: Weight, x: float, tol: float = 1e-8) -> float:
    """log|E1(i x)| / (Lambda(x) eps(x))."""
    value = eval_E(w, 1j * x, tol, kind="E1").log_magnitude
    lam, _ = legendre_lambda(w, x)
    return float(value / (lam * w.epsilon_real(x)))


def kernel_decay_constant(w: Weight, n_max: int = 6, rho_max: float = 1e5) -> Dict[str, Any]:
    """
    Fitted C with int |z|^n |E(z)|^{-1/|z|} d|z| <= C^{n+1} gamma(n+1) on the curved part of psi_plus.

    log|E| on the curve comes from the saddle-point main term at the known preimages i rho.
    """
    contour = build_contour(w, "psi_plus", psi_radius(w, rho_max))
    mask = contour.segment_ids >= 1
    z = contour.nodes[mask]
    s = contour.preimages[mask]
    eps = w._epsilon(s)
    log_E = np.real(0.5 * np.log(2 * np.pi * s / eps) + s * eps) - np.log(np.abs(z))
    length = np.abs(contour.weights[mask])
    constants = []
    for n in range(n_max + 1):
        integral = float(np.sum(length * np.abs(z) ** n * np.exp(-log_E / np.abs(z))))
        log_gamma = float(w.log_gamma_int(np.array([n + 1.0]))[0])
        constants.append(float(np.exp((np.log(integral) - log_gamma) / (n + 1))))
    return {"C": max(constants), "per_n": constants}


def kernel_log_ratio(ke: KernelEvaluator) -> float:
    """log K(t) / (-c eps(c)) at the largest cached t, c the real saddle of t."""
    ke.ensure_cache()
    c, _ = kernel_saddle(ke.kernel_weight, float(ke.log_t[-1]))
    eps = ke.kernel_weight.epsilon_real(c)
    return float(ke.log_abs[-1] / (-c * eps))


def kernel_asymptotic_ratio(ke: KernelEvaluator, rho: float) -> float:
    """K(t) over its saddle-point main term at the t whose real saddle is rho (direct quadrature)."""
    w = ke.kernel_weight
    t = float(np.exp(w.log_L_real(rho) + w.epsilon_real(rho)))
    direct = ke.eval_K(t, force_quadrature=True).log_magnitude
    return float(np.exp(direct - ke.asymptotic_log_K(t)))


def ek_product_profile(ke: KernelEvaluator, stride: int = 8, tol: float = DEFAULT_TOL) -> Dict[str, Any]:
    """log(E(t) K(t) / log E(t)) over the cached t >= 1."""
    ke.ensure_cache()
    u = ke.log_t[ke.log_t >= 0][::stride]
    t = np.exp(u)
    log_K, _ = ke.kernel_values(t)
    values = []
    for x, lk in zip(t, log_K):
        log_E = log_E_real(ke.weight, float(x), tol)
        values.append(log_E + lk - np.log(log_E) if log_E > 0 else float("nan"))
    finite = [v for v in values if np.isfinite(v)]
    return {"t": t.tolist(), "values": values, "sup": max(finite) if finite else float("nan"),
            "slope": trend_slope(u, values)}


def negative_ray_bound(w: Weight, radii=None, tol: float = DEFAULT_TOL) -> Optional[float]:
    """max |E(-r)| over the radii, or None when an evaluation fails."""
    radii = np.logspace(0, 6, 25) if radii is None else radii
    try:
        return float(max(np.exp(eval_E(w, -float(r), tol).log_magnitude) for r in radii))
    except ResumError as e:
        logger.warning(f"E(-r) failed for {w.canonical()}: {e}")
        return None
