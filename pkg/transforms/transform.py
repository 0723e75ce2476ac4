import cmath
import logging
from typing import Dict, Optional, Tuple

import numpy as np

from exceptions import ConfigError, DivergentIntegrandError, PreconditionError
from models import QuadratureSpec, SummationResult
from saddle_geometry.contours import Contour
from special_functions.kernel import KernelEvaluator
from special_functions.series import eval_E, log_E_real
from transforms.jet import Jet, geometric_jet
from utils import log_abs_sum, trend_slope
from weights.weight import Weight

logger = logging.getLogger(__name__)

# slope of log |b_n|^{1/n} against log n below which the rescaled series is called entire
ENTIRE_SLOPE = -0.05
MIN_TREND_TERMS = 8
TRUNCATION_RUN = 3
EXTENSION_DECADES = 1
ROUNDING = 1e-16


class EntireRep:
    """
    The singular transform F(z) = sum_n b_n z^n, b_n = a_n / gamma(n+1), of a jet.

    Coefficients stay in log space. Geometric jets a_n = c q^n evaluate through the closed
    form F(z) = c E(q z); everything else is summed term by term.

    Attributes:
        weight (Weight): the weight defining gamma.
        log_b (np.ndarray), phase (np.ndarray): rescaled coefficients.
        indices (np.ndarray): coefficient indices.
        geometric (tuple, optional): (c, Re q, Im q).
        radius (float): estimated radius of convergence (inf when entire).
        entire (bool): entirety diagnostic from the |b_n|^{1/n} trend.
    """

    def __init__(self, weight: Weight, log_b, phase, indices, geometric=None, provenance: str = "synthetic",
                 tol: float = 1e-10):
        self.weight = weight
        self.log_b = np.asarray(log_b, dtype=float)
        self.phase = np.asarray(phase, dtype=float)
        self.indices = np.asarray(indices, dtype=float)
        self.geometric = geometric
        self.provenance = provenance
        self.tol = tol
        self.root_slope, self.radius = self._radius_diagnostic()
        self.entire = bool(np.isinf(self.radius))

    def __repr__(self) -> str:
        return f"EntireRep({len(self.log_b)} terms, {self.weight.canonical()}, radius={self.radius:.4g})"

    def _radius_diagnostic(self) -> Tuple[float, float]:
        """Slope of log |b_n|^{1/n} against log n over the upper half, and the radius it implies."""
        mask = np.isfinite(self.log_b) & (self.indices >= 1)
        n, log_b = self.indices[mask], self.log_b[mask]
        if len(n) < MIN_TREND_TERMS:
            return float("nan"), float("inf")
        upper = slice(len(n) // 2, None)
        log_root = log_b[upper] / n[upper]
        slope = trend_slope(np.log(n[upper]), log_root)
        if slope < ENTIRE_SLOPE:
            return slope, float("inf")
        return slope, float(np.exp(-log_root[-1]))

    def log_eval(self, z: complex) -> Tuple[float, float, float]:
        """(log|F(z)|, arg F(z), relative error) at a single point."""
        z = complex(z)
        if self.geometric is not None:
            c, q = self.geometric[0], complex(self.geometric[1], self.geometric[2])
            if c == 0:
                return -np.inf, 0.0, 0.0
            result = eval_E(self.weight, q * z, self.tol)
            phase = result.phase + (np.pi if c < 0 else 0.0)
            return np.log(abs(c)) + result.log_magnitude, phase, result.abs_error_estimate
        if z == 0:
            zero = self.indices == 0
            if not np.any(zero):
                return -np.inf, 0.0, 0.0
            i = int(np.flatnonzero(zero)[0])
            return float(self.log_b[i]), float(self.phase[i]), ROUNDING
        log_z = cmath.log(z)
        log_t = self.log_b + self.indices * log_z.real
        phase = self.phase + self.indices * log_z.imag
        log_S, arg_S, l1 = log_abs_sum(log_t, phase)
        error = ROUNDING * len(log_t) * float(np.exp(min(l1 - log_S, 700.0))) if np.isfinite(log_S) else 0.0
        return log_S, arg_S, error

    def value(self, z: complex) -> complex:
        log_F, arg_F, _ = self.log_eval(z)
        return cmath.exp(complex(log_F, arg_F)) if np.isfinite(log_F) else 0j


############# Singular transform #############

def singular_transform(jet: Jet, w: Weight, tol: float = 1e-10) -> EntireRep:
    """
    S_L: b_n = a_n / gamma(n+1), computed in log space.

    Args:
        jet (Jet): the coefficients a_n.
        w (Weight): weight defining gamma(n+1) = L(n+1)^{n+1}.
        tol (float): tolerance used when the rep is evaluated through E.

    Returns:
        EntireRep: the rescaled series with its radius diagnostic.
    """
    n = jet.index_array()
    log_b = np.asarray(jet.log_mag, dtype=float) - w.log_gamma_int(n + 1)
    rep = EntireRep(w, log_b, jet.phase, n, geometric=jet.geometric, provenance=jet.provenance, tol=tol)
    if not rep.entire:
        logger.warning(f"S_L of a {jet.n_terms}-term jet under {w.canonical()} is not entire: "
                       f"radius ~ {rep.radius:.4g}")
    return rep


def inverse_singular(rep: EntireRep) -> Jet:
    """a_n = b_n gamma(n+1), the exact inverse of singular_transform on the stored coefficients."""
    log_a = rep.log_b + rep.weight.log_gamma_int(rep.indices + 1)
    dense = np.array_equal(rep.indices, np.arange(len(rep.indices), dtype=float))
    return Jet(log_mag=list(log_a), phase=list(rep.phase), indices=None if dense else list(rep.indices),
               geometric=rep.geometric, provenance=rep.provenance)


############# Regular transform on the positive axis #############

def _check_pair(rep: EntireRep, ke: KernelEvaluator):
    if ke.kind != "K":
        raise PreconditionError(f"regular transforms use the K kernel, got {ke.kind}")
    if rep.weight.canonical() != ke.weight.canonical():
        raise PreconditionError(f"rep built from {rep.weight.canonical()} but kernel from {ke.weight.canonical()}")


def _value_at_zero(rep: EntireRep, ke: KernelEvaluator) -> Tuple[complex, float]:
    """F(0) times the zeroth moment gamma(1)."""
    log_F, arg_F, err = rep.log_eval(0.0)
    if not np.isfinite(log_F):
        return 0j, 0.0
    value = cmath.exp(complex(log_F + ke.log_moment_target(0), arg_F))
    return value, abs(value) * err


def _trapezoid(log_terms: np.ndarray, phases: np.ndarray, log_h: float, stride: int) -> complex:
    log_t = log_terms[::stride] + log_h + np.log(stride)
    ph = phases[::stride]
    log_t = log_t.copy()
    log_t[[0, -1]] -= np.log(2.0)
    log_S, arg_S, _ = log_abs_sum(log_t, ph)
    return cmath.exp(complex(log_S, arg_S)) if np.isfinite(log_S) else 0j


def regular_transform(rep: EntireRep, ke: KernelEvaluator, x: complex,
                      quad: Optional[QuadratureSpec] = None) -> SummationResult:
    """
    R_L F(x) = int_0^inf F(x t) K(t) dt.

    The integral runs over the kernel grid in log t, extended one decade past the cache with
    the asymptotic kernel. Integration stops once |F(xt) K(t)| stays below tol times its
    running peak for three consecutive points; the error estimate is the difference of the
    h and 2h trapezoid sums plus the dropped tail.

    Args:
        rep (EntireRep): F = S_L f.
        ke (KernelEvaluator): kernel of the same weight.
        x (complex): evaluation point.
        quad (QuadratureSpec, optional): tolerances, defaults to the kernel's.

    Returns:
        SummationResult: the value with truncation point and kernel cache id in the trace.

    Raises:
        PreconditionError: if rep and kernel come from different weights.
        DivergentIntegrandError: if |F(xt) K(t)| never decays over the usable range.
    """
    _check_pair(rep, ke)
    quad = quad or ke.quad
    x = complex(x)
    trace: Dict = {"x": [x.real, x.imag], "kernel_cache": ke.cache_id}
    if x == 0:
        value, err = _value_at_zero(rep, ke)
        trace["method"] = "moment-identity"
        return SummationResult(value_real=value.real, value_imag=value.imag, error_estimate=err, trace=trace)

    ke.ensure_cache()
    u0 = ke.log_t
    h = float(u0[1] - u0[0])
    extra = u0[-1] + h * np.arange(1, EXTENSION_DECADES * quad.density + 1)
    u = np.concatenate([u0, extra])
    t = np.exp(u)
    log_K, sign_K = ke.kernel_values(t)

    log_terms = np.full(len(u), -np.inf)
    phases = np.zeros(len(u))
    rel_err = np.zeros(len(u))
    peak = -np.inf
    log_tol = np.log(quad.rel_tol)
    run = 0
    stop = None
    for i in range(len(u)):
        log_F, arg_F, err = rep.log_eval(x * t[i])
        log_terms[i] = u[i] + log_F + log_K[i]
        phases[i] = arg_F + (0.0 if sign_K[i] > 0 else np.pi)
        rel_err[i] = err
        if not np.isfinite(log_terms[i]):
            run += 1 if np.isfinite(peak) else 0
        elif log_terms[i] < peak + log_tol:
            run += 1
        else:
            run = 0
        peak = max(peak, log_terms[i])
        if run >= TRUNCATION_RUN:
            stop = i
            break
    if stop is None:
        raise DivergentIntegrandError(
            f"|F(xt)K(t)| does not decay for x={x} up to t={t[-1]:.4g} ({rep.weight.canonical()})")

    log_terms, phases = log_terms[:stop + 1], phases[:stop + 1]
    fine = _trapezoid(log_terms, phases, np.log(h), 1)
    coarse = _trapezoid(log_terms, phases, np.log(h), 2)

    # power-law tail below the first grid point, F taken as F(x t0)
    slope = (log_K[1] - log_K[0]) / h
    lower = 0j
    if np.isfinite(log_terms[0]) and slope > -1:
        lower = cmath.exp(complex(log_terms[0] - np.log(1 + slope), phases[0]))
    value = fine + lower
    upper_tail = float(np.exp(log_terms[-1])) * TRUNCATION_RUN * h if np.isfinite(log_terms[-1]) else 0.0
    l1 = float(np.exp(log_abs_sum(log_terms + np.log(h), phases)[2]))
    error = abs(fine - coarse) + upper_tail + l1 * (quad.rel_tol + float(np.max(rel_err[:stop + 1])))

    trace.update({"method": "trapezoid-log-t", "truncation_t": float(t[stop]), "points": int(stop + 1),
                  "beyond_cache": bool(t[stop] > ke.t_hi)})
    logger.debug(f"R_L at x={x}: {value:.10g} +- {error:.3g} (stopped at t={t[stop]:.4g})")
    return SummationResult(value_real=value.real, value_imag=value.imag, error_estimate=error, trace=trace)


############# Regular transform along the boundary contours #############

_CONTOUR_KERNELS: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}


def kernel_on_contour(ke: KernelEvaluator, contour: Contour, quad: Optional[QuadratureSpec] = None
                      ) -> Tuple[np.ndarray, np.ndarray]:
    """log|K| and arg K at the contour nodes, memoized per kernel and contour."""
    quad = quad or ke.quad
    key = (f"{ke.cache_id}|{contour.role}|{quad.spec_hash()}|"
           f"{contour.metadata.get('r_max')}|{contour.metadata.get('density')}|{len(contour.nodes)}")
    if key not in _CONTOUR_KERNELS:
        log_K = np.empty(len(contour.nodes))
        arg_K = np.empty(len(contour.nodes))
        pre = contour.preimages if contour.preimages is not None else np.full(len(contour.nodes), np.nan)
        for j, (z, s) in enumerate(zip(contour.nodes, pre)):
            hint = None if np.isnan(s.real) else complex(s)
            result = ke.eval_K_complex(complex(z), saddle_hint=hint, quad=quad)
            log_K[j], arg_K[j] = result.log_magnitude, result.phase
        _CONTOUR_KERNELS[key] = (log_K, arg_K)
        logger.info(f"Kernel on {contour.role}: {len(contour.nodes)} nodes for {ke}")
    return _CONTOUR_KERNELS[key]


def regular_transform_pm(rep: EntireRep, ke: KernelEvaluator, contour: Contour, t: float,
                         quad: Optional[QuadratureSpec] = None) -> SummationResult:
    """
    R_L^{+-} F(t) = int over psi_{+-} of F(t z) K(z) dz.

    For t < 0 the conjugate contour is used (psi_plus and psi_minus swap roles on the
    negative axis). At t = 0 the zeroth-moment identity gives F(0) gamma(1) = a_0.

    Raises:
        PreconditionError: if the contour is not psi_plus or psi_minus, or rep and kernel differ.
    """
    _check_pair(rep, ke)
    if contour.role not in ("psi_plus", "psi_minus"):
        raise PreconditionError(f"R_L^+- integrates over psi_plus or psi_minus, got {contour.role}")
    t = float(t)
    trace: Dict = {"t": t, "contour": contour.role, "kernel_cache": ke.cache_id}
    if t == 0:
        value, err = _value_at_zero(rep, ke)
        trace["method"] = "moment-identity"
        return SummationResult(value_real=value.real, value_imag=value.imag, error_estimate=err, trace=trace)

    log_K, arg_K = kernel_on_contour(ke, contour, quad)
    nodes, weights = contour.nodes, contour.weights
    if t < 0:
        log_K, arg_K = log_K, -arg_K
        nodes, weights = np.conj(nodes), np.conj(weights)
        trace["contour"] = "psi_minus" if contour.role == "psi_plus" else "psi_plus"

    log_terms = np.empty(len(nodes))
    phases = np.empty(len(nodes))
    rel_err = np.zeros(len(nodes))
    for j, z in enumerate(nodes):
        log_F, arg_F, rel_err[j] = rep.log_eval(t * complex(z))
        log_terms[j] = log_F + log_K[j] + np.log(abs(weights[j])) if weights[j] != 0 else -np.inf
        phases[j] = arg_F + arg_K[j] + np.angle(weights[j])
    log_S, arg_S, l1 = log_abs_sum(log_terms, phases)
    value = cmath.exp(complex(log_S, arg_S)) if np.isfinite(log_S) else 0j
    error = float(np.exp(l1)) * (quad or ke.quad).rel_tol + float(np.exp(l1)) * float(np.max(rel_err))
    trace.update({"method": "contour", "nodes": int(len(nodes)), "r_max": contour.metadata.get("r_max")})
    return SummationResult(value_real=value.real, value_imag=value.imag, error_estimate=error, trace=trace)


############# (gamma)-summation #############

def moment_sum(series_terms: Jet, ke: KernelEvaluator, quad: Optional[QuadratureSpec] = None) -> SummationResult:
    """
    (gamma)-sum of sum_n a_n: b = int_0^inf A(t) K(t) dt with A(t) = sum_n a_n t^n / gamma(n+1).

    Equal to regular_transform of the same coefficients at x = 1. A zero series sums to 0.
    """
    if all(not np.isfinite(m) for m in series_terms.log_mag):
        return SummationResult(value_real=0.0, error_estimate=0.0,
                               trace={"method": "zero-series", "kernel_cache": ke.cache_id})
    rep = singular_transform(series_terms, ke.weight, (quad or ke.quad).rel_tol)
    result = regular_transform(rep, ke, 1.0, quad)
    result.trace["summation"] = "moment"
    return result


############# Probes #############

def stability_probe(ke: KernelEvaluator, stride: int = 4, tol: float = 1e-10) -> Dict:
    """
    Running integral of E(t) K(t) over the cached t >= 1; a stable method needs it to diverge.

    Returns:
        dict: t, running (log of the running integral) and growing (last decade still rising).
    """
    ke.ensure_cache()
    u = ke.log_t[ke.log_t >= 0][::stride]
    t = np.exp(u)
    log_K, _ = ke.kernel_values(t)
    log_E = np.array([log_E_real(ke.weight, float(x), tol) for x in t])
    h = float(u[1] - u[0])
    log_terms = u + log_E + log_K + np.log(h)
    running = np.logaddexp.accumulate(log_terms)
    growing = bool(running[-1] - running[max(0, len(running) - len(running) // 4 - 1)] > 1e-3)
    return {"t": t.tolist(), "running": running.tolist(), "growing": growing}


def regularity_probe(ke: KernelEvaluator, x_values=(0.0, 0.3, 0.7)) -> Dict:
    """int E(x t) K(t) dt against 1/(1 - x), which is R_L S_L of the geometric jet a_n = 1."""
    rep = singular_transform(geometric_jet(1.0, 1.0), ke.weight)
    errors = {}
    for x in x_values:
        result = regular_transform(rep, ke, x)
        errors[float(x)] = abs(result.value - 1.0 / (1.0 - x))
    return {"errors": errors, "max_error": max(errors.values())}


def coefficient_trace(rep: EntireRep) -> Dict:
    """Per-term diagnostics of a rep: indices, log|b_n| and log |b_n|^{1/n}."""
    n = rep.indices
    with np.errstate(divide="ignore", invalid="ignore"):
        root = np.where(n > 0, rep.log_b / np.maximum(n, 1.0), np.nan)
    if not len(n):
        raise ConfigError("empty rep")
    return {"n": n.tolist(), "log_b": rep.log_b.tolist(), "log_root": root.tolist(),
            "root_slope": rep.root_slope, "radius": rep.radius}
