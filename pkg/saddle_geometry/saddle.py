import cmath
import logging

import numpy as np
from scipy.optimize import brentq

from exceptions import BelowThresholdError, SaddleFailureError
from models import SaddlePoint
from weights.weight import Weight

logger = logging.getLogger(__name__)

MAX_NEWTON_ITERATIONS = 200
RESIDUAL_TOL = 1e-10
DERIVATIVE_STEP = 1e-5
ANGLE_MARGIN = 0.05


def saddle_value(w: Weight, s):
    """log L(s) + eps(s); the saddle equation reads saddle_value(s) = log z."""
    return w._saddle_function(np.asarray(s, dtype=complex))


def saddle_image(w: Weight, s):
    """z = L(s) e^{eps(s)}, the point whose saddle is s."""
    return np.exp(saddle_value(w, s))


def real_saddle(w: Weight, log_x: float, v_lo: float, v_hi: float = 700.0) -> float:
    """Solve log L(rho) + eps(rho) = log_x for rho on the real ray (bisection in log rho)."""

    def gap(v):
        return float(w._saddle_function_real(np.array([np.exp(v)]))[0]) - log_x

    if gap(v_lo) > 0:
        raise BelowThresholdError(f"log x = {log_x:.6g} lies below the real saddle range")
    if gap(v_hi) < 0:
        raise SaddleFailureError(f"log x = {log_x:.6g} beyond the double range of the saddle equation")
    return float(np.exp(brentq(gap, v_lo, v_hi, xtol=1e-14, rtol=1e-15)))


def solve_saddle(w: Weight, z: complex, enforce_threshold: bool = True) -> SaddlePoint:
    """
    Solve log L(s) + eps(s) = log z by damped Newton iteration in w = log s.

    The start is rho0 from bisection on the real ray and theta0 = arg z / eps(rho0),
    clipped to the sector. Steps are halved until the residual decreases.

    Args:
        w (Weight): the weight.
        z (complex): target point.
        enforce_threshold (bool): require |z| > L(rho0) and |s| >= rho0.

    Returns:
        SaddlePoint: the solution with its residual.

    Raises:
        BelowThresholdError: if z is too small.
        SaddleFailureError: if Newton does not converge within 200 iterations.
    """
    z = complex(z)
    if z == 0:
        raise BelowThresholdError("z = 0 has no saddle")
    log_z = cmath.log(z)
    if enforce_threshold and log_z.real <= w.log_L_real(w.rho0):
        raise BelowThresholdError(f"|z|={abs(z):.6g} does not exceed L(rho0)={np.exp(w.log_L_real(w.rho0)):.6g}")

    v_lo = np.log(max(w.abscissa, 0.0) + 1e-8) if w.abscissa >= 0 else np.log(1e-8)
    rho_start = real_saddle(w, log_z.real, v_lo)
    eps0 = w.epsilon_real(rho_start)
    limit = w.sector_half_angle - ANGLE_MARGIN
    theta_start = float(np.clip(log_z.imag / eps0, -limit, limit)) if eps0 > 0 else 0.0
    logs = complex(np.log(rho_start), theta_start)

    def residual(u):
        return complex(saddle_value(w, np.exp(u))) - log_z

    r = residual(logs)
    iterations = 0
    while abs(r) >= RESIDUAL_TOL:
        if iterations >= MAX_NEWTON_ITERATIONS:
            raise SaddleFailureError(f"Newton did not converge for z={z} (residual {abs(r):.3g})")
        iterations += 1
        h = DERIVATIVE_STEP
        deriv = (-residual(logs + 2 * h) + 8 * residual(logs + h) - 8 * residual(logs - h)
                 + residual(logs - 2 * h)) / (12 * h)
        if deriv == 0:
            raise SaddleFailureError(f"vanishing derivative of the saddle equation at s={np.exp(logs)}")
        step = -r / deriv
        damping = 1.0
        while True:
            trial = logs + damping * step
            trial = complex(trial.real, float(np.clip(trial.imag, -limit, limit)))
            r_trial = residual(trial)
            if abs(r_trial) < abs(r) or damping < 1e-8:
                break
            damping *= 0.5
        if abs(r_trial) >= abs(r):
            raise SaddleFailureError(f"damped Newton stalled for z={z} at residual {abs(r):.3g}")
        logs, r = trial, r_trial

    s = cmath.exp(logs)
    if z.imag == 0 and z.real > 0:
        s = complex(s.real, 0.0)
    if enforce_threshold and abs(s) < w.rho0 * (1 - 1e-9):
        raise BelowThresholdError(f"saddle |s|={abs(s):.6g} lies below rho0={w.rho0:g}")
    return SaddlePoint(z_real=z.real, z_imag=z.imag, s_real=s.real, s_imag=s.imag,
                       residual=abs(r), newton_iterations=iterations)
