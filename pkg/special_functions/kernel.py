import cmath
import logging
from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from config import LOG_K_FLOOR
from exceptions import ConfigError, DomainError, PreconditionError, QuadratureError
from models import EvalResult, QuadratureSpec
from utils import gauss_legendre, log_abs_sum
from weights.derived import derive_weight
from weights.weight import Weight

logger = logging.getLogger(__name__)

KERNEL_KINDS = ["K", "Kstar"]
T_LO = {"K": 1e-8, "Kstar": 1e-4}
MAX_MOMENT = 12

SADDLE_FLOOR = 0.02        # the line Re s = c stays this far right of the abscissa
LOG_NEGLIGIBLE = -40.0     # integrand dropped once e^-40 below its value at the start
PATH_LIMIT = 1e8           # in units of the saddle width
COARSE_POINTS = 257
PANEL_WIDTHS = 2.0         # panel width cap in saddle widths
PANEL_PHASE = 4.0          # panel width cap in radians of oscillation
ASYMPTOTIC_AGREEMENT = 0.05
MAX_CACHE_DECADES = 40
UPPER_DIRECTION_MIN = np.pi / 2 + 0.35
NEWTON_ITERATIONS = 60


############# Path integrals #############

def _ray_integral(f: Callable, fprime: Callable, s0: complex, direction: complex, scale: float,
                  quad: QuadratureSpec, r_end: Optional[float] = None, real_part: bool = False):
    """
    int_0^R exp(f(s0 + r d) - f(s0)) dr along a ray with unit direction d.

    R is r_end, or the first doubling of 8 * scale where the integrand has dropped below
    e^-40 of its starting value. Panels of 24-point Gauss-Legendre are checked against
    12-point estimates and halved up to quad.max_subdivisions times.

    Returns:
        tuple: (integral, error estimate, l1 size, whether r_end was reached).
    """
    d = complex(direction)
    f0 = complex(f(np.array([s0]))[0])
    T, reached_end = 8.0 * scale, False
    while True:
        if r_end is not None and T >= r_end:
            T, reached_end = float(r_end), True
            break
        probe = np.real(f(s0 + d * np.array([T, 1.5 * T]))) - f0.real
        if np.all(probe < LOG_NEGLIGIBLE):
            break
        T *= 2.0
        if T > PATH_LIMIT * scale:
            raise QuadratureError(f"integrand does not decay along the ray from {s0} in direction {d}")
    if T <= 0:
        return 0j, 0.0, 0.0, reached_end

    coarse = s0 + d * np.linspace(0.0, T, COARSE_POINTS)
    rate = float(np.max(np.abs(np.imag(fprime(coarse) * d))))
    h = min(PANEL_WIDTHS * scale, T / 4.0)
    if rate > 0:
        h = min(h, PANEL_PHASE / rate)

    x24, w24 = gauss_legendre(24)
    x12, w12 = gauss_legendre(12)
    for _ in range(quad.max_subdivisions + 1):
        n = max(1, int(np.ceil(T / h)))
        width = T / n
        left = width * np.arange(n)
        r24 = (left[:, None] + width * x24[None, :]).ravel()
        g24 = np.exp(f(s0 + d * r24) - f0)
        w24n = np.tile(width * w24, n)
        fine = (g24 * w24n).sum()
        l1 = float((np.abs(g24) * w24n).sum())
        r12 = (left[:, None] + width * x12[None, :]).ravel()
        coarse_value = (np.exp(f(s0 + d * r12) - f0) * np.tile(width * w12, n)).sum()
        a, b = (fine.real, coarse_value.real) if real_part else (fine, coarse_value)
        err = abs(a - b)
        if err <= quad.rel_tol * abs(a) + quad.abs_tol * l1:
            return complex(fine), float(err), l1, reached_end
        h = width / 2.0
    raise QuadratureError(f"ray integral from {s0} did not converge: error {err:.3g} against |I|={abs(a):.3g}")


############# Saddles #############

def kernel_saddle(w: Weight, log_t: float) -> Tuple[float, bool]:
    """
    Real c > abscissa with log L(c) + eps(c) = log t.

    Returns:
        tuple: (c, clamped). When the solution lies within 0.02 of the abscissa, or does
        not exist, c is clamped to abscissa + 0.02 and clamped is True.
    """
    floor = w.abscissa + SADDLE_FLOOR

    def gap(u):
        return float(w._saddle_function_real(np.array([floor + np.exp(u)]))[0]) - log_t

    if float(w._saddle_function_real(np.array([floor]))[0]) >= log_t:
        return floor, True
    lo, hi = np.log(1e-12), 700.0
    if gap(hi) < 0:
        raise DomainError(f"log t = {log_t:.6g} is beyond the double range of the saddle equation")
    return floor + float(np.exp(brentq(gap, lo, hi, xtol=1e-13, rtol=1e-15))), False


def _curvature(w: Weight, s: complex) -> complex:
    """phi'(s) for phi = log L + eps, by a central difference that stays right of the abscissa."""
    if s.imag == 0:
        h = 1e-4 * (s.real - w.abscissa)
        up, dn = w._saddle_function_real(np.array([s.real + h, s.real - h]))
        return complex((up - dn) / (2 * h))
    h = 1e-6 * (1.0 + abs(s))
    up, dn = w._saddle_function(np.array([s + h, s - h]))
    return complex((up - dn) / (2 * h))


def _in_domain(w: Weight, s: complex) -> bool:
    if abs(cmath.phase(s)) >= w.sector_half_angle - 0.05 and abs(s) > 1:
        return False
    return s.imag > 0 or s.real > w.abscissa


def complex_saddle(w: Weight, log_z: complex, hint: Optional[complex] = None) -> Tuple[complex, bool]:
    """
    Complex s with log L(s) + eps(s) = log z, for Im log z > 0, by damped Newton.

    Returns:
        tuple: (s, fallback). If Newton fails the real saddle of |z| is returned with
        fallback True.
    """
    c, _ = kernel_saddle(w, log_z.real)
    if hint is not None:
        s = complex(hint)
    elif c > 0:
        eps = float(w._epsilon_real(np.array([c]))[0])
        theta = min(log_z.imag / eps if eps > 0 else 0.0, w.sector_half_angle - 0.1)
        s = c * cmath.exp(1j * theta)
    else:
        s = complex(c, log_z.imag / max(_curvature(w, complex(c)).real, 1e-12))

    def residual(x):
        return complex(w._saddle_function(np.array([x]))[0]) - log_z

    if not _in_domain(w, s):
        return c, True
    r = residual(s)
    for _ in range(NEWTON_ITERATIONS):
        if abs(r) < 1e-12 * max(1.0, abs(log_z)):
            return s, False
        step = -r / _curvature(w, s)
        damping = 1.0
        while damping > 1e-6:
            trial = s + damping * step
            if _in_domain(w, trial):
                r_trial = residual(trial)
                if abs(r_trial) < abs(r):
                    break
            damping *= 0.5
        else:
            break
        s, r = trial, r_trial
    logger.debug(f"complex saddle for log z={log_z} did not converge; using the real saddle {c:.6g}")
    return c, True


############# Kernel evaluator #############

class KernelEvaluator:
    """
    The kernel K(t) = (1/2 pi i) int t^{-s} gamma(s) ds of a weight, or K_* for the pair
    (L / L~).

    Values are computed by quadrature along the vertical line through the real saddle and
    cached on a uniform log-t grid with `density` points per decade, from t_lo until
    log|K| falls below -300. Beyond the cache the saddle-point main term is used.

    Attributes:
        kind (str): K or Kstar.
        weight (Weight): the weight L.
        kernel_weight (Weight): L for K, L / L~ for K_*.
        quad (QuadratureSpec): tolerances and grid density.
        t_asym (float, optional): first cached t where quadrature and the asymptotic agree
            within 5% at two consecutive points.
    """

    def __init__(self, w: Weight, kind: str = "K", quad: Optional[QuadratureSpec] = None):
        if kind not in KERNEL_KINDS:
            raise ConfigError(f"Unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
        if hasattr(w, "check_kernel_support"):
            w.check_kernel_support()
        if not w.supports_complex:
            raise ConfigError(f"{w.canonical()} has no complex continuation: K cannot be computed")
        self.kind = kind
        self.weight = w
        self.kernel_weight = w if kind == "K" else derive_weight(w, "dual_quotient")
        self.quad = quad or QuadratureSpec()
        self.t_lo = T_LO[kind]
        self.log_t: Optional[np.ndarray] = None
        self.log_abs: Optional[np.ndarray] = None
        self.sign: Optional[np.ndarray] = None
        self.clamped: Optional[np.ndarray] = None
        self.t_asym: Optional[float] = None
        self._spline: Optional[CubicSpline] = None
        self._memo: Dict[Tuple[float, str], EvalResult] = {}

    def __repr__(self) -> str:
        return f"KernelEvaluator({self.kind}, {self.weight.canonical()})"

    @property
    def cache_id(self) -> str:
        return f"{self.weight.canonical()}|{self.kind}|{self.quad.spec_hash()}"

    ############# Direct evaluation #############

    def quadrature(self, t: float, quad: Optional[QuadratureSpec] = None) -> Tuple[float, float, float, bool, float]:
        """
        K(t) on the vertical line through the real saddle.

        Returns:
            tuple: (log|K|, sign, relative error, clamped, saddle c).
        """
        quad = quad or self.quad
        w = self.kernel_weight
        log_t = float(np.log(t))
        c, clamped = kernel_saddle(w, log_t)
        if clamped:
            logger.warning(f"{self}: saddle for t={t:.4g} clamped to c={c:.4g}")

        def f(s):
            return w._log_gamma(s) - s * log_t

        def fprime(s):
            return w._saddle_function(s) - log_t

        curvature = _curvature(w, complex(c)).real
        scale = 1.0 / np.sqrt(curvature) if curvature > 0 else 1.0
        integral, err, _, _ = _ray_integral(f, fprime, complex(c), 1j, scale, quad, real_part=True)
        value = integral.real / np.pi
        if value == 0:
            raise QuadratureError(f"{self}: K({t:.4g}) cancels to zero at double precision")
        f0 = float(np.real(f(np.array([complex(c)]))[0]))
        return f0 + float(np.log(abs(value))), float(np.sign(value)), err / abs(integral.real), clamped, c

    def asymptotic_log_K(self, t: float) -> float:
        """
        Saddle-point main term of log K(t): sqrt(s/(2 pi eps(s))) exp(-s eps(s)) for Denjoy
        and derived weights, the Laplace form exp(f(c)) / sqrt(2 pi f''(c)) otherwise.
        """
        w = self.kernel_weight
        log_t = float(np.log(t))
        c, _ = kernel_saddle(w, log_t)
        eps = float(w._epsilon_real(np.array([c]))[0])
        if w.kind in ("denjoy", "derived") and c > 0 and eps > 0:
            return float(0.5 * np.log(c / (2 * np.pi * eps)) - c * eps)
        f0 = float(w._log_gamma_real(np.array([c]))[0]) - c * log_t
        curvature = _curvature(w, complex(c)).real
        return float(f0 - 0.5 * np.log(2 * np.pi * curvature))

    ############# Cache #############

    def ensure_cache(self) -> "KernelEvaluator":
        if self.log_t is None:
            self.build_cache()
        return self

    def build_cache(self):
        step = np.log(10.0) / self.quad.density
        log_t, log_abs, sign, clamped = [], [], [], []
        k = 0
        while True:
            u = np.log(self.t_lo) + k * step
            la, sg, _, cl, _ = self.quadrature(float(np.exp(u)))
            log_t.append(u)
            log_abs.append(la)
            sign.append(sg)
            clamped.append(cl)
            if la <= LOG_K_FLOOR:
                break
            k += 1
            if k > MAX_CACHE_DECADES * self.quad.density:
                raise QuadratureError(f"{self}: log|K| stays above {LOG_K_FLOOR} over {MAX_CACHE_DECADES} decades")
        self._set_cache(np.array(log_t), np.array(log_abs), np.array(sign), np.array(clamped, dtype=bool))
        logger.info(f"Built {self} cache: {len(log_t)} points, t in [{self.t_lo:.3g}, {self.t_hi:.4g}], "
                    f"t_asym={self.t_asym}")

    def _set_cache(self, log_t, log_abs, sign, clamped):
        self.log_t, self.log_abs, self.sign, self.clamped = log_t, log_abs, sign, clamped
        if np.any(sign != sign[0]):
            logger.warning(f"{self}: K changes sign on the cached grid; interpolation uses log|K|")
        self._spline = CubicSpline(log_t, log_abs)
        self.t_asym = self._find_t_asym()

    def _find_t_asym(self) -> Optional[float]:
        agree = []
        for u, la in zip(self.log_t, self.log_abs):
            try:
                asym = self.asymptotic_log_K(float(np.exp(u)))
            except DomainError:
                agree.append(False)
                continue
            agree.append(abs(np.expm1(la - asym)) <= ASYMPTOTIC_AGREEMENT)
        for i in range(len(agree) - 1):
            if agree[i] and agree[i + 1]:
                return float(np.exp(self.log_t[i]))
        return None

    @property
    def t_hi(self) -> float:
        self.ensure_cache()
        return float(np.exp(self.log_t[-1]))

    def kernel_values(self, t) -> Tuple[np.ndarray, np.ndarray]:
        """
        (log|K|, sign) at many t: spline of the cache inside it, the asymptotic above,
        a power law fitted at t_lo below.
        """
        self.ensure_cache()
        u = np.log(np.asarray(t, dtype=float))
        log_abs = np.empty_like(u)
        sign = np.ones_like(u) * self.sign[-1]
        inside = (u >= self.log_t[0]) & (u <= self.log_t[-1])
        log_abs[inside] = self._spline(u[inside])
        idx = np.clip(np.searchsorted(self.log_t, u[inside]), 0, len(self.log_t) - 1)
        sign[inside] = self.sign[idx]
        below = u < self.log_t[0]
        slope = (self.log_abs[1] - self.log_abs[0]) / (self.log_t[1] - self.log_t[0])
        log_abs[below] = self.log_abs[0] + slope * (u[below] - self.log_t[0])
        sign[below] = self.sign[0]
        for i in np.flatnonzero(u > self.log_t[-1]):
            log_abs[i] = self.asymptotic_log_K(float(np.exp(u[i])))
        return log_abs, sign

    def to_dataframe(self) -> pd.DataFrame:
        self.ensure_cache()
        return pd.DataFrame({
            "log10_t": self.log_t / np.log(10.0),
            "log_absK": self.log_abs,
            "sign": self.sign.astype(int),
        })

    def export_csv(self, path, extra_header: Optional[Dict[str, str]] = None) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        frame = self.to_dataframe()
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# weight={self.weight.canonical()}\n")
            f.write(f"# kind={self.kind}\n")
            f.write(f"# quad={self.quad.spec_hash()}\n")
            for key, value in (extra_header or {}).items():
                f.write(f"# {key}={value}\n")
            frame.to_csv(f, index=False)
        logger.info(f"Wrote {self} cache to {path}")
        return path

    def load_csv(self, path) -> bool:
        """Load a cache file; False when its header belongs to another weight, kind or quadrature."""
        path = Path(path)
        header = {}
        with open(path, encoding="utf-8") as f:
            for line in f:
                if not line.startswith("#"):
                    break
                key, _, value = line[1:].strip().partition("=")
                header[key] = value
        expected = {"weight": self.weight.canonical(), "kind": self.kind, "quad": self.quad.spec_hash()}
        if any(header.get(k) != v for k, v in expected.items()):
            logger.info(f"Cache {path} does not match {self}; ignoring it")
            return False
        frame = pd.read_csv(path, comment="#")
        log_t = frame["log10_t"].to_numpy() * np.log(10.0)
        self._set_cache(log_t, frame["log_absK"].to_numpy(), frame["sign"].to_numpy().astype(float),
                        np.zeros(len(frame), dtype=bool))
        logger.info(f"Loaded {self} cache from {path} ({len(frame)} points)")
        return True

    ############# Evaluation #############

    def eval_K(self, t: float, quad: Optional[QuadratureSpec] = None, force_quadrature: bool = False) -> EvalResult:
        """
        K(t) for t > 0.

        Inside the cached range the value comes from direct quadrature (memoized); beyond it
        the saddle-point main term is returned unless force_quadrature is set. The switch sits
        at the cache end t_hi, not at t_asym: between the two the main term is only within 5%
        while quadrature holds the requested tolerance, and t_asym only certifies where the two
        agree.

        Raises:
            DomainError: if t <= 0.
            QuadratureError: if the line integral does not converge.
        """
        if not t > 0:
            raise DomainError(f"K is evaluated for t > 0, got {t}")
        quad = quad or self.quad
        t = float(t)
        if not force_quadrature and t > self.t_hi:
            log_K = self.asymptotic_log_K(t)
            return EvalResult(log_magnitude=log_K, phase=0.0, abs_error_estimate=ASYMPTOTIC_AGREEMENT,
                              method="asymptotic")
        key = (t, quad.spec_hash())
        if key not in self._memo:
            log_abs, sign, err, _, _ = self.quadrature(t, quad)
            self._memo[key] = EvalResult(log_magnitude=log_abs, phase=0.0 if sign > 0 else np.pi,
                                         abs_error_estimate=max(err, 1e-16), method="quadrature")
        return self._memo[key]

    def eval_K_complex(self, z: complex, saddle_hint: Optional[complex] = None,
                       quad: Optional[QuadratureSpec] = None) -> EvalResult:
        """
        K(z) off the positive ray along a path through the complex saddle.

        The path leaves the saddle upward along the steepest-descent direction, bent to at
        least pi/2 + 0.35 so that it ends in the left half-plane where gamma(s) z^{-s}
        decays; downward it follows the steepest-descent ray to the real axis and then the
        vertical line. For Im z < 0 the conjugate of K(conj z) is returned.
        """
        z = complex(z)
        quad = quad or self.quad
        if z.imag == 0 and z.real > 0:
            return self.eval_K(z.real, quad)
        if z == 0:
            return self.eval_K(self.t_lo, quad)
        if z.imag < 0:
            hint = None if saddle_hint is None else complex(saddle_hint).conjugate()
            upper = self.eval_K_complex(z.conjugate(), hint, quad)
            return upper.model_copy(update={"phase": -upper.phase})

        w = self.kernel_weight
        log_z = cmath.log(z)
        s_star, _ = complex_saddle(w, log_z, saddle_hint)

        def f(s):
            return w._log_gamma(s) - s * log_z

        def fprime(s):
            return w._saddle_function(s) - log_z

        curvature = _curvature(w, s_star)
        scale = 1.0 / np.sqrt(abs(curvature))
        up_raw = (np.pi - cmath.phase(curvature)) / 2.0
        up = min(max(up_raw, UPPER_DIRECTION_MIN), w.sector_half_angle - 0.05)
        f_star = complex(f(np.array([s_star]))[0])

        d_up = cmath.exp(1j * up)
        I_up, err_up, _, _ = _ray_integral(f, fprime, s_star, d_up, scale, quad)
        total = I_up * d_up
        error = err_up

        d_dn = cmath.exp(1j * (up_raw - np.pi))
        r1 = s_star.imag / np.sin(up_raw) if s_star.imag > 0 and np.sin(up_raw) > 1e-12 else 0.0
        reached = True
        if r1 > 0:
            I_ray, err_ray, _, reached = _ray_integral(f, fprime, s_star, d_dn, scale, quad, r_end=r1)
            total -= I_ray * d_dn
            error += err_ray
        if reached:
            x0 = (s_star + r1 * d_dn).real
            if x0 <= w.abscissa:
                raise QuadratureError(f"descent path for z={z} meets the real axis left of the abscissa")
            I_vert, err_vert, _, _ = _ray_integral(f, fprime, complex(x0), -1j, scale, quad)
            shift = cmath.exp(complex(f(np.array([complex(x0)]))[0]) - f_star)
            total -= I_vert * (-1j) * shift
            error += err_vert * abs(shift)
        if total == 0:
            raise QuadratureError(f"K({z}) cancels to zero at double precision")
        log_K = f_star + cmath.log(total) - cmath.log(2j * np.pi)
        phase = float(np.angle(cmath.exp(1j * log_K.imag)))
        return EvalResult(log_magnitude=log_K.real, phase=phase,
                          abs_error_estimate=max(error / abs(total), 1e-16), method="quadrature")

    ############# Moments #############

    def log_moment(self, n: int) -> float:
        """log int_0^inf t^n K(t) dt by the trapezoid rule in log t plus both tails."""
        self.ensure_cache()
        u = self.log_t
        h = u[1] - u[0]
        log_terms = [(n + 1) * u + self.log_abs + np.log(h)]
        signs = [self.sign.copy()]
        log_terms[0][[0, -1]] -= np.log(2.0)

        slope = (self.log_abs[1] - self.log_abs[0]) / h
        p = n + 1 + slope
        if p <= 0:
            raise QuadratureError(f"{self}: t^{n} K(t) is not integrable at 0 (local exponent {slope:.3g})")
        log_terms.append(np.array([self.log_abs[0] + (n + 1) * u[0] - np.log(p)]))
        signs.append(np.array([self.sign[0]]))

        if self.quad.tail_policy == "asymptotic-K":
            extra = u[-1] + h * np.arange(1, self.quad.density + 1)
            log_K = np.array([self.asymptotic_log_K(float(np.exp(x))) for x in extra])
            tail = (n + 1) * extra + log_K + np.log(h)
            tail[-1] -= np.log(2.0)
            log_terms.append(tail)
            signs.append(np.full(len(extra), self.sign[-1]))

        log_mag = np.concatenate(log_terms)
        phase = np.where(np.concatenate(signs) < 0, np.pi, 0.0)
        log_S, arg_S, _ = log_abs_sum(log_mag, phase)
        if abs(arg_S) > np.pi / 2:
            raise QuadratureError(f"{self}: moment {n} came out negative")
        return log_S

    def log_moment_target(self, n: int) -> float:
        """log gamma(n+1) for K, log(gamma(n+1) / gamma~(n+1)) for K_*."""
        return float(self.kernel_weight.log_gamma_int(np.array([n + 1.0]))[0])


############# Registry and operations #############

_KERNELS: Dict[str, KernelEvaluator] = {}


def kernel_evaluator(w: Weight, kind: str = "K", quad: Optional[QuadratureSpec] = None) -> KernelEvaluator:
    quad = quad or QuadratureSpec()
    key = f"{w.canonical()}|{kind}|{quad.spec_hash()}"
    if key not in _KERNELS:
        _KERNELS[key] = KernelEvaluator(w, kind, quad)
    return _KERNELS[key]


def eval_K(ke: KernelEvaluator, t: float, quad: Optional[QuadratureSpec] = None) -> EvalResult:
    return ke.eval_K(t, quad)


def moment_check(ke: KernelEvaluator, n: int, quad: Optional[QuadratureSpec] = None) -> float:
    """
    |int_0^inf t^n K(t) dt / gamma(n+1) - 1| from the cached kernel plus tails.

    Raises:
        PreconditionError: unless 0 <= n <= 12.
    """
    if int(n) != n or not 0 <= n <= MAX_MOMENT:
        raise PreconditionError(f"moment index must be an integer in [0, {MAX_MOMENT}], got {n}")
    if quad is not None and quad.spec_hash() != ke.quad.spec_hash():
        ke = kernel_evaluator(ke.weight, ke.kind, quad)
    n = int(n)
    error = float(abs(np.expm1(ke.log_moment(n) - ke.log_moment_target(n))))
    logger.info(f"{ke}: moment {n} relative error {error:.3g}")
    return error
