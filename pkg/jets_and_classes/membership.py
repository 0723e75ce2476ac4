import logging
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from evaluation.metrics import fit_constant
from exceptions import ConfigError, PrecisionExhaustedError, PreconditionError, TruncationFailureError
from jets_and_classes.star_domain import StarDomain
from models import MembershipDiagnostic
from saddle_geometry.h_profile import eval_H
from saddle_geometry.legendre import legendre_lambda
from special_functions.series import eval_series_function, log_E_real, series_evaluator
from transforms.jet import Jet
from transforms.transform import EntireRep
from utils import trend_slope
from weights.weight import Weight

logger = logging.getLogger(__name__)

CLASS_TAGS = ["F0", "A_interval", "A_omega", "A_plus", "A_minus", "A_omega_star", "poly"]

MIN_F0_INDEX = 16
MIN_SAMPLES = 50
# q_n must fall at least this fast against log L(n) to count as tending to -inf
F0_SLOPE = -0.5
C_GRID = [0.25, 0.5, 1.0, 2.0, 4.0]
DELTA_GRID = [0.1, 0.25, 0.5, 1.0]
B_GRID = [0.5, 1.0, 2.0, 4.0]
STAR_DELTAS = [0.05, 0.1, 0.25]
POLY_C_MAX = 10.0
EDGE_ANGLE = 0.15
LOGLOG_CAP = 700.0

DEFAULT_REGION = {"c_plus": None, "c_minus": None, "Y": 1.0, "u_max": 8.0, "r_min": 1.0,
                  "delta": 0.5, "Delta": None, "B": None, "domain": None, "deltas": STAR_DELTAS}


############# F0 #############

def membership_F0(jet: Jet, w: Weight) -> MembershipDiagnostic:
    """
    Trend test for |a_n|^{1/n} = o(L(n)).

    q_n = log|a_n|/n - log L(n) is taken over the upper half of the nonzero indices (all of
    them when fewer than 8 are nonzero). The jet is a member when q_n falls against log L(n)
    with slope below -0.5; score is the largest q_n.

    Raises:
        PreconditionError: if the largest index is below 16.
    """
    n = jet.index_array()
    if len(n) == 0 or n.max() < MIN_F0_INDEX:
        raise PreconditionError(f"F0 membership needs indices up to at least {MIN_F0_INDEX}")
    log_a = np.asarray(jet.log_mag, dtype=float)
    mask = (n >= 1) & np.isfinite(log_a)
    n, log_a = n[mask], log_a[mask]
    if len(n) == 0:
        return MembershipDiagnostic(class_tag="F0", score=float("-inf"), raw_score=float("-inf"),
                                    verdict="member", flags=["finite_support"])
    if len(n) >= 8:
        n, log_a = n[len(n) // 2:], log_a[len(n) // 2:]
    log_L = w.log_L_real(n)
    q = log_a / n - log_L
    slope = trend_slope(log_L, q)
    if not np.isfinite(slope):
        verdict = "inconclusive"
    else:
        verdict = "member" if slope < F0_SLOPE else "non_member"
    score = float(np.max(q))
    logger.info(f"F0 under {w.canonical()}: score={score:.4g} slope={slope:.3f} -> {verdict}")
    return MembershipDiagnostic(class_tag="F0", score=score, raw_score=score, verdict=verdict,
                                samples=[[float(k), 0.0] for k in n], fitted={"trend_slope": slope})


############# Growth classes of entire functions #############

class _Sampler:
    """log|F| on the sample points; points that exhaust the precision budget are dropped."""

    def __init__(self, rep: EntireRep):
        self.rep = rep
        self.clipped = 0

    def __call__(self, points: np.ndarray):
        kept, values = [], []
        for z in points:
            try:
                log_F, _, _ = self.rep.log_eval(complex(z))
            except (PrecisionExhaustedError, TruncationFailureError) as e:
                logger.debug(f"dropping sample {z}: {e}")
                self.clipped += 1
                continue
            kept.append(z)
            values.append(log_F)
        return np.asarray(kept, dtype=complex), np.asarray(values, dtype=float)


def _memo(f: Callable[[float], float]) -> Callable[[float], float]:
    cache: Dict[float, float] = {}

    def wrapped(x: float) -> float:
        key = round(float(x), 12)
        if key not in cache:
            cache[key] = f(key)
        return cache[key]

    return wrapped


def _strip_points(region: Dict[str, Any], samples: int) -> np.ndarray:
    n_v = 4
    n_u = int(np.ceil(samples / n_v))
    u = np.linspace(-region["u_max"], region["u_max"], n_u)
    v = np.linspace(-region["Y"], region["Y"], n_v)
    return (u[:, None] + 1j * v[None, :]).ravel()


def _half_plane_points(region: Dict[str, Any], samples: int, upper: bool) -> np.ndarray:
    n_psi = 8
    n_r = int(np.ceil(samples / n_psi))
    r = np.linspace(region["r_min"], region["u_max"], n_r)
    psi = np.linspace(EDGE_ANGLE, np.pi - EDGE_ANGLE, n_psi)
    if not upper:
        psi = -psi
    return (r[:, None] * np.exp(1j * psi[None, :])).ravel()


def _polar_points(region: Dict[str, Any], samples: int) -> np.ndarray:
    n_theta = 16
    n_r = int(np.ceil(samples / n_theta))
    r = np.linspace(region["u_max"] / n_r, region["u_max"], n_r)
    theta = np.linspace(-np.pi, np.pi, n_theta, endpoint=False)
    return (r[:, None] * np.exp(1j * theta[None, :])).ravel()


def _best(candidates: List[Dict[str, Any]]) -> Dict[str, Any]:
    """Candidate with the smallest validation score; ties go to the first."""
    return min(candidates, key=lambda c: (np.nan_to_num(c["fit"]["score"], nan=np.inf)))


def _diagnostic(tag: str, points: np.ndarray, fit: Dict[str, float], excess: np.ndarray, fitted: Dict[str, float],
                flags: List[str], verdict: Optional[str] = None) -> MembershipDiagnostic:
    if verdict is None:
        if not np.isfinite(fit["score"]):
            verdict = "inconclusive"
        else:
            verdict = "member" if fit["passed"] else "non_member"
    return MembershipDiagnostic(class_tag=tag, score=float(fit["score"]), raw_score=float(np.max(excess)),
                                verdict=verdict, samples=[[float(z.real), float(z.imag)] for z in points],
                                fitted=fitted, flags=flags)


def _interval_class(points, log_F, region, log_E, omega: bool):
    u, v = points.real, np.abs(points.imag)
    c_plus = [region["c_plus"]] if region["c_plus"] is not None else C_GRID
    c_minus = [region["c_minus"]] if region["c_minus"] is not None else C_GRID
    deltas = [0.0]
    if omega:
        deltas = [region["Delta"]] if region["Delta"] is not None else DELTA_GRID
    candidates = []
    for cp in c_plus:
        for cm in c_minus:
            for D in deltas:
                scale = np.where(u >= 0, 1.0 / cp, 1.0 / cm)
                arg = np.abs(u) * scale + D * v
                excess = log_F - np.array([log_E(a) for a in arg])
                candidates.append({"fit": fit_constant(np.abs(u), excess), "excess": excess,
                                   "fitted": {"c_plus": cp, "c_minus": cm, **({"Delta": D} if omega else {})}})
    return _best(candidates)


def _half_plane_class(points, log_F, region, log_E, w_major):
    # the lower half-plane is mirrored through H(-psi) = H(psi)
    r, psi = np.abs(points), np.abs(np.angle(points))
    c_plus = region["c_plus"] if region["c_plus"] is not None else 1.0
    c_minus = region["c_minus"] if region["c_minus"] is not None else 1.0
    Bs = [region["B"]] if region["B"] is not None else B_GRID
    deltas = [region["Delta"]] if region["Delta"] is not None else DELTA_GRID
    log_H = _memo(lambda p: float(np.exp(min(eval_H(w_major, p), LOGLOG_CAP))))
    c = np.where(np.cos(psi) >= 0, c_plus, c_minus)
    candidates = []
    for B in Bs:
        shifted = np.minimum(psi + 2.0 * B / r, np.pi - 1e-3)
        H_part = np.array([log_H(p) for p in shifted])
        for D in deltas:
            E_part = np.array([log_E(a) for a in r / c + D * r * np.sin(psi)])
            excess = log_F - np.logaddexp(H_part, E_part)
            candidates.append({"fit": fit_constant(r, excess), "excess": excess,
                               "fitted": {"c_plus": c_plus, "c_minus": c_minus, "B": B, "Delta": D}})
    return _best(candidates)


def _star_class(points, log_F, region, log_E):
    domain: StarDomain = region["domain"]
    if domain is None:
        raise ConfigError("A_omega_star needs region['domain'] (a StarDomain)")
    H = np.array([domain.minkowski(z) for z in points])
    r = np.abs(points)
    results = []
    for delta in region["deltas"]:
        excess = log_F - np.array([log_E(a) for a in H + delta * r])
        results.append({"fit": fit_constant(r, excess), "excess": excess, "delta": delta})
    # the class asks for every delta > 0: report the worst one
    worst = max(results, key=lambda c: np.nan_to_num(c["fit"]["score"], nan=np.inf))
    return {"fit": worst["fit"], "excess": worst["excess"],
            "fitted": {"delta_worst": worst["delta"]},
            "all_passed": all(c["fit"]["passed"] for c in results)}


def _poly_class(rep: EntireRep, points, log_F, region, log_E, w_major):
    n = rep.indices[np.isfinite(rep.log_b)]
    degree = float(np.max(n)) if len(n) else 0.0
    c_plus = region["c_plus"] if region["c_plus"] is not None else 1.0
    c_minus = region["c_minus"] if region["c_minus"] is not None else 1.0
    u = points.real
    arg = np.abs(u) / np.where(u >= 0, c_plus, c_minus)
    tilde = series_evaluator(w_major, "Etilde")
    log_tilde = _memo(lambda x: eval_series_function(tilde, x).log_magnitude)
    excess = log_F - np.array([log_E(a) for a in arg]) - np.array([log_tilde(region["delta"] * abs(x)) for x in u])
    lam = legendre_lambda(w_major, max(degree, 1.0))[0]
    C = float(max(np.max(excess), 0.0) / lam) if lam > 0 else float("inf")
    return {"fit": fit_constant(np.abs(u), excess), "excess": excess,
            "fitted": {"C": C, "Lambda_degree": lam, "degree": degree}, "C": C}


def growth_diagnostic(rep: EntireRep, class_tag: str, region: Optional[Dict[str, Any]] = None, samples: int = 64,
                      majorant_weight: Optional[Weight] = None) -> MembershipDiagnostic:
    """
    Sample |F| over the region of a growth class and compare with its majorant.

    Classes:
        A_interval:   max_{|v|<=Y} |F(u+iv)| <~ E(|u|/c_{+-})
        A_omega:      |F(u+iv)| <~ E(|u|/c_{+-} + Delta |v|)
        A_plus/minus: |F(r e^{i psi})| <~ H(psi + 2B/r) + E(r/|c_{+-}| + Delta r sin psi) on the half-plane
        A_omega_star: |F(w)| <~ E(H_domain(w) + delta |w|) for every delta in region['deltas']
        poly:         |S_L P| <= e^{C Lambda(deg P)} E(|u|/c_{+-}) Etilde(delta |u|), member when C <= 10

    Free constants missing from the region (c_plus, c_minus, Delta, B) are fitted by grid
    search minimizing the validation score of the constant-fitting protocol.

    Args:
        rep (EntireRep): the entire function.
        class_tag (str): one of CLASS_TAGS except F0.
        region (dict, optional): overrides for DEFAULT_REGION.
        samples (int): sample budget, at least 50.
        majorant_weight (Weight, optional): weight of E and H; defaults to rep.weight.

    Returns:
        MembershipDiagnostic: score is the validation excess over the fitted constant, raw_score
        the largest excess without it.

    Raises:
        PreconditionError: if fewer than 50 samples are requested.
        ConfigError: for an unknown class tag.
    """
    if class_tag not in CLASS_TAGS or class_tag == "F0":
        raise ConfigError(f"Unknown growth class {class_tag!r}")
    if samples < MIN_SAMPLES:
        raise PreconditionError(f"growth diagnostics need at least {MIN_SAMPLES} samples, got {samples}")
    region = {**DEFAULT_REGION, **(region or {})}
    w_major = majorant_weight if majorant_weight is not None else rep.weight
    log_E = _memo(lambda x: log_E_real(w_major, x))

    if class_tag in ("A_interval", "A_omega", "poly"):
        points = _strip_points(region, samples)
    elif class_tag in ("A_plus", "A_minus"):
        points = _half_plane_points(region, samples, upper=class_tag == "A_plus")
    else:
        points = _polar_points(region, samples)

    sampler = _Sampler(rep)
    points, log_F = sampler(points)
    flags = ["clipped"] if sampler.clipped else []
    if len(points) < MIN_SAMPLES:
        return MembershipDiagnostic(class_tag=class_tag, score=float("nan"), raw_score=float("nan"),
                                    verdict="inconclusive", flags=flags + ["too_few_samples"])

    verdict = None
    if class_tag in ("A_interval", "A_omega"):
        best = _interval_class(points, log_F, region, log_E, omega=class_tag == "A_omega")
    elif class_tag in ("A_plus", "A_minus"):
        best = _half_plane_class(points, log_F, region, log_E, w_major)
    elif class_tag == "A_omega_star":
        best = _star_class(points, log_F, region, log_E)
        verdict = "member" if best["all_passed"] else "non_member"
    else:
        best = _poly_class(rep, points, log_F, region, log_E, w_major)
        verdict = "member" if best["C"] <= POLY_C_MAX else "non_member"

    diagnostic = _diagnostic(class_tag, points, best["fit"], best["excess"], best["fitted"], flags, verdict)
    logger.info(f"{class_tag} under {w_major.canonical()}: score={diagnostic.score:.4g} "
                f"raw={diagnostic.raw_score:.4g} fitted={diagnostic.fitted} -> {diagnostic.verdict}")
    return diagnostic
