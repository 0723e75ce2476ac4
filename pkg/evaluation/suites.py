import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln

from evaluation.cache import attach_kernel
from evaluation.metrics import is_nonincreasing, pass_rate, within
from exceptions import DivergentIntegrandError, MissingCacheError, ResumError, UsageError
from jets_and_classes import (
    carleson_ehrenpreis_ratio,
    chebyshev_expand,
    coeff_decay_report,
    geometric_bound_check,
    lacunary_counterexample_jet,
    membership_F0,
    to_jet,
)
from models import CheckRecord, ExperimentConfig, MultiIndex
from saddle_geometry import build_contour, eval_H, h_profile, psi_radius
from saddle_geometry.legendre import scaled_point_ratio, subadditivity_violation
from special_functions import moment_check
from special_functions.kernel import KernelEvaluator
from special_functions.properties import kernel_asymptotic_ratio, matching_scan
from special_functions.series import asymptotic_ratio
from transforms import (
    Jet,
    geometric_jet,
    moment_sum,
    polynomial_jet,
    regular_transform,
    regular_transform_pm,
    singular_transform,
)
from weights import build_weight, derive_weight, make_denjoy_weight
from weights.raw import RawGammaWeight
from weights.regularity import check_regularity
from weights.weight import Weight

logger = logging.getLogger(__name__)

LOG_WEIGHT = MultiIndex(alphas=[(1, 1.0)])
LOG_SQUARED_WEIGHT = MultiIndex(alphas=[(1, 2.0)])
CUBE_ROOT_WEIGHT = MultiIndex(alpha0=1.0 / 3.0)


@dataclass
class SuiteContext:
    """Configuration plus the kernel evaluators shared by the checks of one run."""
    config: ExperimentConfig
    rng: np.random.Generator = field(init=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.config.seed)

    def kernel(self, w: Weight, kind: str = "K") -> KernelEvaluator:
        return attach_kernel(w, self.config.cache_dir, kind, self.config.quadrature, self.config.offline)

    def weight(self) -> Weight:
        return build_weight(self.config.weight)


@dataclass
class Check:
    """
    One acceptance check.

    `run` returns (measured, passed, detail); an exception inside it becomes a fail verdict.
    """
    name: str
    anchor: str
    tolerance: str
    run: Callable[[SuiteContext], Tuple[Optional[float], bool, str]]


def run_check(check: Check, ctx: SuiteContext) -> CheckRecord:
    try:
        measured, passed, detail = check.run(ctx)
    except MissingCacheError:
        raise
    except (ResumError, ArithmeticError, ValueError) as e:
        logger.warning(f"Check {check.name} raised {type(e).__name__}: {e}")
        return CheckRecord(name=check.name, anchor=check.anchor, tolerance=check.tolerance, verdict="fail",
                           detail=f"{type(e).__name__}: {e}")
    verdict = "pass" if passed else "fail"
    logger.info(f"{check.name}: {verdict} (measured={measured})")
    return CheckRecord(name=check.name, anchor=check.anchor, measured=measured, tolerance=check.tolerance,
                       verdict=verdict, detail=detail)


def _fmt(values) -> str:
    return ", ".join(f"{v:.6g}" for v in values)


############# Borel sanity #############

def _borel_kernel(ctx):
    ke = ctx.kernel(RawGammaWeight("borel"))
    errors = [abs(math.expm1(ke.eval_K(t).log_magnitude + t)) for t in [0.1, 1.0, 5.0, 10.0]]
    return max(errors), max(errors) < 1e-6, f"relative errors at t=0.1,1,5,10: {_fmt(errors)}"


def _grandi(ctx):
    result = moment_sum(geometric_jet(1.0, -1.0), ctx.kernel(RawGammaWeight("borel"))).value
    error = abs(result - 0.5)
    return error, error < 1e-8, f"sum = {result.real:.12g}"


############# Kernel moments #############

def _moments(ctx):
    ke = ctx.kernel(make_denjoy_weight(LOG_WEIGHT))
    errors = [moment_check(ke, n) for n in range(9)]
    return max(errors), max(errors) < 1e-3, f"n=0..8: {_fmt(errors)}"


############# Summation and recovery #############

def _star_summation(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    ke = ctx.kernel(w)
    rep = singular_transform(geometric_jet(1.0, 1.0), w)
    errors = [abs(regular_transform(rep, ke, z).value - 1 / (1 - z)) for z in [-1.0, -5.0, 2j]]
    return max(errors), max(errors) < 1e-3, f"z=-1,-5,2i: {_fmt(errors)}"


def _cut_diverges(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    rep = singular_transform(geometric_jet(1.0, 1.0), w)
    try:
        value = regular_transform(rep, ctx.kernel(w), 1.2).value
    except DivergentIntegrandError as e:
        return None, True, str(e)
    return None, False, f"returned {value} on the cut"


def _analytic_roundtrip(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    ke = ctx.kernel(w)
    jet = to_jet(chebyshev_expand(lambda x: 1.0 / (2.0 - x), n_max=64, source="1/(2-x)"))
    rep = singular_transform(jet, w)
    x = np.linspace(-1.0, 1.0, 11)
    errors = [abs(regular_transform(rep, ke, float(v)).value - 1 / (2 - v)) for v in x]
    return max(errors), max(errors) < 1e-4, f"{jet.n_terms} Taylor terms; errors: {_fmt(errors)}"


def _contour_consistency(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    ke = ctx.kernel(w)
    r_max = psi_radius(w, 1e5)
    plus = build_contour(w, "psi_plus", r_max)
    minus = build_contour(w, "psi_minus", r_max)
    polynomials = [[1.0, -0.5, 0.25, 0.3, -0.2, 0.1, 0.05], [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], [2.0, 1.0]]
    t = 0.5
    worst = 0.0
    for coefficients in polynomials:
        rep = singular_transform(polynomial_jet(coefficients), w)
        real_axis = regular_transform(rep, ke, t).value
        for contour in (plus, minus):
            worst = max(worst, abs(regular_transform_pm(rep, ke, contour, t).value - real_axis))
    return worst, worst < 1e-6, f"max |R^+- P - R P| over {len(polynomials)} polynomials at t={t}"


############# Asymptotics #############

RATIO_RHOS = [1e3, 1e4, 1e5]


def _ratio_verdict(ratios) -> bool:
    gaps = [abs(r - 1) for r in ratios]
    return all(within(r, 0.5, 2.0) for r in ratios) and is_nonincreasing(gaps)


def _e_ratio(ctx):
    ratios = [asymptotic_ratio(make_denjoy_weight(LOG_WEIGHT), rho) for rho in RATIO_RHOS]
    return ratios[-1], _ratio_verdict(ratios), f"rho=1e3,1e4,1e5: {_fmt(ratios)}"


def _k_ratio(ctx):
    ke = ctx.kernel(make_denjoy_weight(LOG_WEIGHT))
    ratios = [kernel_asymptotic_ratio(ke, rho) for rho in RATIO_RHOS]
    return ratios[-1], _ratio_verdict(ratios), f"rho=1e3,1e4,1e5: {_fmt(ratios)}"


def _matching_lemma(ctx):
    scan = matching_scan(ctx.kernel(make_denjoy_weight(LOG_WEIGHT)))
    passed = scan["delta1"] is not None and math.isfinite(scan["sup"])
    return scan["sup"], passed, f"delta1={scan['delta1']}, trend slope={scan['slope']:.4g}"


############# Duality #############

# closed-form leading terms of the dual weight: log^a -> log rho / (a - 1), exp(log^a) -> log^{1-a} rho / a
DUAL_TABLE = [
    ("log^3", MultiIndex(alphas=[(1, 3.0)]), lambda v: v / 2.0),
    ("exp(log^1/2)", MultiIndex(alpha0=0.5), lambda v: 2.0 * math.sqrt(v)),
]


def _dual_ratio(ctx):
    dual = derive_weight(make_denjoy_weight(LOG_SQUARED_WEIGHT), "dual")
    ratio = math.exp(dual.log_L_real(1e6)) / math.log(1e6)
    return ratio, within(ratio, 0.75, 1.25), "L~(1e6) / log(1e6) for L = log^2"


def _dual_table(ctx):
    ratios = []
    for _, alpha, leading in DUAL_TABLE:
        dual = derive_weight(make_denjoy_weight(alpha), "dual")
        ratios.append(math.exp(dual.log_L_real(1e6)) / leading(math.log(1e6)))
    detail = "; ".join(f"{name}: {r:.4g}" for (name, _, _), r in zip(DUAL_TABLE, ratios))
    worst = max(ratios, key=lambda r: abs(math.log(r)))
    return worst, all(within(r, 0.5, 2.0) for r in ratios), detail


def _carleson_ehrenpreis(ctx):
    result = carleson_ehrenpreis_ratio(make_denjoy_weight(LOG_SQUARED_WEIGHT))
    return result["spread"], result["spread"] <= 3.0, f"ratios at r=1e3..1e6: {_fmt(result['ratios'])}"


############# Legendre profile #############

def _scaled_point(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    ratios = [scaled_point_ratio(w, r) for r in [1e3, 1e4, 1e5, 1e6]]
    worst = max(ratios, key=lambda r: abs(r - 1))
    return worst, all(within(r, 0.9, 1.1) for r in ratios), f"r=1e3..1e6: {_fmt(ratios)}"


def _subadditivity(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    worst = subadditivity_violation(w, np.logspace(3.5, 8, 20), [1.5, 2.0, 5.0, 10.0, 100.0])
    return worst, worst <= 1.0 + 1e-9, "max Lambda(rt) / (t Lambda(r)) on a 20 x 5 grid"


############# Chebyshev decay #############

def _pole_expansion():
    return chebyshev_expand(lambda x: 1.0 / (2.0 - x), n_max=64, source="1/(2-x)")


def _chebyshev_geometric(ctx):
    check = geometric_bound_check(_pole_expansion(), 2.0, 2.0 + math.sqrt(3.0), n_max=30)
    return check["max_ratio"], check["passed"], f"{len(check['checked'])} indices above roundoff"


def _chebyshev_majorant(ctx):
    report = coeff_decay_report(_pole_expansion(), make_denjoy_weight(LOG_WEIGHT))
    entry = report["deltas"][1.0]
    return entry["C"], entry["passed"], f"validation score {entry['score']:.4g}"


############# H profile #############

def _h_small_angle(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    ratios = [eval_H(w, psi) / ((np.pi / 2) / psi) for psi in [0.01, 0.02]]
    worst = max(ratios, key=lambda r: abs(r - 1))
    return worst, all(within(r, 0.7, 1.3) for r in ratios), f"psi=0.01,0.02: {_fmt(ratios)}"


def _h_decrement(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    profile = h_profile(w)
    constants = []
    for r in [10.0, 100.0]:
        for psi in [0.05, 0.2]:
            A = profile.shift_constant(psi, r)
            if A is None or eval_H(w, psi + A / r) > eval_H(w, psi) - 3 / r:
                return None, False, f"no shift constant at r={r}, psi={psi}"
            constants.append(A)
    return max(constants), True, f"A at r=10,100 x psi=0.05,0.2: {_fmt(constants)}"


############# Membership #############

def _dense_jet(log_mag) -> Jet:
    return Jet(log_mag=list(np.asarray(log_mag, dtype=float)), phase=[0.0] * len(log_mag))


def f0_cases(w: Weight, rng: np.random.Generator) -> List[Tuple[str, Jet, str]]:
    """Six fixed F0 jets and four seeded variants with their known verdicts."""
    n = np.arange(64, dtype=float)
    n_log_n = np.where(n > 0, n * np.log(np.maximum(n, 1.0)), 0.0)
    lacunary, _ = lacunary_counterexample_jet(make_denjoy_weight(CUBE_ROOT_WEIGHT),
                                              make_denjoy_weight(CUBE_ROOT_WEIGHT), 3)
    cases = [
        ("2^n", _dense_jet(n * math.log(2.0)), "member"),
        ("1/n!", _dense_jet(-gammaln(n + 1)), "member"),
        ("lacunary", lacunary, "member"),
        ("n^n", _dense_jet(n_log_n), "non_member"),
        ("gamma(n+1)", _dense_jet(w.log_gamma_int(n + 1)), "non_member"),
        ("(2L(n))^n", _dense_jet(n * (math.log(2.0) + w.log_L_real(n))), "non_member"),
    ]
    c = rng.uniform(0.5, 3.0)
    cases.append(("c^n random phase", Jet(log_mag=list(n * math.log(c)), phase=list(rng.uniform(-np.pi, np.pi, len(n)))),
                  "member"))
    cases.append(("c^n / n!", _dense_jet(n * math.log(rng.uniform(0.5, 3.0)) - gammaln(n + 1)), "member"))
    kappa = rng.uniform(0.5, 2.0)
    cases.append(("(kappa n)^n", _dense_jet(np.where(n > 0, n * np.log(kappa * np.maximum(n, 1.0)), 0.0)),
                  "non_member"))
    cases.append(("(u L(n))^n", _dense_jet(n * (math.log(rng.uniform(0.5, 2.0)) + w.log_L_real(n))), "non_member"))
    return cases


def _membership(ctx):
    w = make_denjoy_weight(LOG_WEIGHT)
    cases = f0_cases(w, ctx.rng)
    wrong = [name for name, jet, expected in cases if membership_F0(jet, w).verdict != expected]
    agreement = pass_rate(len(cases) - len(wrong), len(cases))
    return agreement, not wrong, f"disagreements: {wrong}" if wrong else f"{len(cases)} jets agree"


############# Regularity #############

def regularity_checks(w: Weight) -> List[CheckRecord]:
    """One record per regularity assumption of w."""
    report = check_regularity(w)
    return [CheckRecord(name=f"regularity.{name}", anchor=entry.description, measured=entry.trend,
                        tolerance="log-log trend below -0.05", verdict="pass" if entry.verdict == "pass" else "fail",
                        detail=f"verdict {entry.verdict}")
            for name, entry in report.entries.items()]


############# Registry #############

SUITES: Dict[str, List[Check]] = {
    "borel-sanity": [
        Check("borel_kernel", "K(t)=e^{-t} and E(z)=e^{z}", "relative error < 1e-6", _borel_kernel),
        Check("grandi_sum", "1 - 1 + 1 - ... = 1/2 under gamma(n+1) = n!", "|b - 0.5| < 1e-8", _grandi),
    ],
    "moments": [
        Check("kernel_moments", "a moment sequence for a function", "max relative error < 1e-3, n <= 8", _moments),
    ],
    "star-summation": [
        Check("star_summation", "for 0<arg(z-1)<2pi", "|R S f - 1/(1-z)| < 1e-3", _star_summation),
        Check("cut_divergence", "for 0<arg(z-1)<2pi", "divergent integrand at z = 1.2", _cut_diverges),
    ],
    "analytic-roundtrip": [
        Check("analytic_roundtrip", "R_L S_L f = f", "|R S f - f| < 1e-4 at 11 points", _analytic_roundtrip),
    ],
    "asymptotic-ratios": [
        Check("E_ratio", "uniformly in Omega(pi/2+delta)", "in [0.5, 2], |r-1| nonincreasing", _e_ratio),
        Check("K_ratio", "K(z)=(1+o(1))...", "in [0.5, 2], |r-1| nonincreasing", _k_ratio),
    ],
    "duality": [
        Check("dual_log_squared", "L~(rho) = L(rho) int_rho^inf du/(u L(u))", "in [0.75, 1.25]", _dual_ratio),
        Check("dual_table", "L~(rho) = L(rho) int_rho^inf du/(u L(u))", "leading-term ratios in [0.5, 2]",
              _dual_table),
        Check("carleson_ehrenpreis", "int_0^inf r/(r^2+t^2) Lambda_L(t)dt ~ Lambda_{L/L~}(r)", "spread <= 3",
              _carleson_ehrenpreis),
    ],
    "legendre": [
        Check("scaled_point", "Lambda_L(e rL(r)) ~ r", "in [0.9, 1.1]", _scaled_point),
        Check("subadditivity", "Lambda_L(rt) <= t Lambda_L(r)", "<= 1", _subadditivity),
    ],
    "chebyshev-decay": [
        Check("chebyshev_geometric", "|c_n| <= 2 (2+sqrt 3)^{-n}", "max ratio <= 1 for n <= 30", _chebyshev_geometric),
        Check("chebyshev_majorant", "|c_n| <~ e^{-Lambda_L(n)/delta}", "constant validates at delta = 1",
              _chebyshev_majorant),
    ],
    "matching-lemma": [
        Check("matching_lemma", "E(x delta_1)E(x(1-delta))|K(x)| <~ 1", "finite sup with flat trend",
              _matching_lemma),
    ],
    "contour-consistency": [
        Check("contour_consistency", "R_L P = R_L^+ P = R_L^- P", "< 1e-6", _contour_consistency),
    ],
    "h-profile": [
        Check("h_small_angle", "log log H(psi) ~ (pi/2) a/psi", "in [0.7, 1.3]", _h_small_angle),
        Check("h_decrement", "log log H(psi + A/r) <= log log H(psi) - 3/r", "shift constant exists",
              _h_decrement),
    ],
    "membership": [
        Check("membership_F0", "|a_n|^{1/n}=o(L(n))", "100% agreement", _membership),
    ],
}

SELECTORS = list(SUITES) + ["regularity", "all"]


def expand_selectors(selectors: List[str]) -> List[str]:
    """Suite names in a fixed order; 'all' expands to every suite.

    Raises:
        UsageError: for an unknown selector.
    """
    unknown = [s for s in selectors if s not in SELECTORS]
    if unknown:
        raise UsageError(f"Unknown selector(s) {unknown}; expected some of {SELECTORS}")
    if "all" in selectors:
        return list(SUITES) + ["regularity"]
    return [s for s in list(SUITES) + ["regularity"] if s in selectors]


def run_suite(name: str, ctx: SuiteContext) -> List[CheckRecord]:
    """Run one suite. Failures and errors are returned as verdicts; a missing offline cache propagates."""
    if name == "regularity":
        try:
            return regularity_checks(ctx.weight())
        except ResumError as e:
            return [CheckRecord(name="regularity", anchor="plumbing", verdict="fail", detail=f"{type(e).__name__}: {e}")]
    return [run_check(check, ctx) for check in SUITES[name]]


def describe(records: List[CheckRecord]) -> Dict[str, Any]:
    passed = sum(r.verdict == "pass" for r in records)
    return {"checks": len(records), "passed": passed, "pass_rate": pass_rate(passed, len(records))}
