import hashlib
import json
import re
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from exceptions import ConfigError


def _fmt(x: float) -> str:
    return f"{float(x):g}"


############# Weight descriptions #############

class MultiIndex(BaseModel):
    """
    Exponents of a Denjoy weight.

    L(s) = exp(log^{alpha0}(s+1)) * prod_k log_k^{alpha_k}(s + exp_k(1)).

    Attributes:
        alpha0 (float): exponent of the leading exp(log^alpha0) factor, in [0, 1).
        alphas (List[Tuple[int, float]]): (k, alpha_k) pairs for the iterated-log factors, k >= 1.
    """
    alpha0: float = 0.0
    alphas: List[Tuple[int, float]] = []

    def active(self) -> List[Tuple[int, float]]:
        """Nonzero iterated-log exponents sorted by level."""
        merged: Dict[int, float] = {}
        for k, a in self.alphas:
            merged[int(k)] = merged.get(int(k), 0.0) + float(a)
        return [(k, merged[k]) for k in sorted(merged) if merged[k] != 0.0]


class WeightSpec(BaseModel):
    """
    Serializable description of a weight.

    Three shapes are accepted, matching the JSON forms
    {"type":"denjoy","alpha0":0.0,"alphas":[[1,1.0]]},
    {"type":"raw","family":"borel"} and
    {"type":"derived","base":{...},"derivation":"dual"}.

    Attributes:
        type (str): 'denjoy', 'raw' or 'derived'.
        alpha0 (float): Denjoy leading exponent.
        alphas (List[Tuple[int, float]]): Denjoy iterated-log exponents.
        family (str, optional): raw family: borel, mittag_leffler, constant, power or table.
        params (Dict[str, float]): raw family parameters (alpha, c, a).
        table (List[float], optional): tabulated log gamma(n), n = 0, 1, ... for the table family.
        base (WeightSpec, optional): base weight for derived kinds.
        derivation (str, optional): dual, harmonic_mean, family or dual_quotient.
        a (float, optional): family exponent for derivation='family'.
    """
    type: str = "denjoy"
    alpha0: float = 0.0
    alphas: List[Tuple[int, float]] = []
    family: Optional[str] = None
    params: Dict[str, float] = {}
    table: Optional[List[float]] = None
    base: Optional["WeightSpec"] = None
    derivation: Optional[str] = None
    a: Optional[float] = None

    def multi_index(self) -> MultiIndex:
        return MultiIndex(alpha0=self.alpha0, alphas=self.alphas)

    def canonical(self) -> str:
        """
        Stable string form used as cache key, e.g. 'denjoy:a0=0;1:1'.

        Returns:
            str: canonical representation; parse_weight_spec() inverts it.
        """
        if self.type == "denjoy":
            parts = [f"a0={_fmt(self.alpha0)}"]
            parts += [f"{k}:{_fmt(a)}" for k, a in self.multi_index().active()]
            return "denjoy:" + ";".join(parts)
        if self.type == "raw":
            if self.family == "table":
                digest = hashlib.sha256(json.dumps(self.table).encode("utf-8")).hexdigest()[:12]
                return f"raw:table({digest})"
            if self.params:
                inner = ",".join(f"{k}={_fmt(v)}" for k, v in sorted(self.params.items()))
                return f"raw:{self.family}({inner})"
            return f"raw:{self.family}"
        if self.type == "derived":
            tag = self.derivation
            if self.derivation == "family":
                tag = f"family(a={_fmt(self.a)})"
            return f"derived:{tag}<{self.base.canonical()}>"
        raise ConfigError(f"Unknown weight type {self.type!r}")


WeightSpec.model_rebuild()


def parse_weight_spec(text: Any) -> WeightSpec:
    """
    Parse a weight given as a dict, a JSON string or a canonical string.

    Args:
        text (Any): dict, JSON text or canonical form such as 'denjoy:a0=0;1:2'.

    Returns:
        WeightSpec: the parsed description.

    Raises:
        ConfigError: if the text matches none of the accepted forms.
    """
    if isinstance(text, WeightSpec):
        return text
    if isinstance(text, dict):
        return WeightSpec(**text)
    text = str(text).strip()
    if text.startswith("{"):
        return WeightSpec(**json.loads(text))
    if text.startswith("denjoy:"):
        alpha0 = 0.0
        alphas = []
        for part in filter(None, text[len("denjoy:"):].split(";")):
            if part.startswith("a0="):
                alpha0 = float(part[3:])
            else:
                k, a = part.split(":")
                alphas.append((int(k), float(a)))
        return WeightSpec(type="denjoy", alpha0=alpha0, alphas=alphas)
    if text.startswith("raw:"):
        m = re.fullmatch(r"raw:(\w+)(?:\((.*)\))?", text)
        if not m or m.group(1) == "table":
            raise ConfigError(f"Cannot parse raw weight {text!r} (tables need the JSON form)")
        params = {}
        if m.group(2):
            for item in m.group(2).split(","):
                k, v = item.split("=")
                params[k.strip()] = float(v)
        return WeightSpec(type="raw", family=m.group(1), params=params)
    if text.startswith("derived:"):
        m = re.fullmatch(r"derived:(\w+)(?:\(a=([^)]*)\))?<(.*)>", text)
        if not m:
            raise ConfigError(f"Cannot parse derived weight {text!r}")
        a = float(m.group(2)) if m.group(2) else None
        return WeightSpec(type="derived", derivation=m.group(1), a=a, base=parse_weight_spec(m.group(3)))
    raise ConfigError(f"Unrecognised weight description {text!r}")


############# Numerical plumbing #############

class QuadratureSpec(BaseModel):
    """
    Tolerances and policies shared by the kernel, contour and transform quadratures.

    Attributes:
        rel_tol (float): relative tolerance of panel quadratures.
        abs_tol (float): absolute floor, measured against the L1 size of the integrand.
        max_subdivisions (int): number of panel halvings before a QuadratureError.
        tail_policy (str): 'asymptotic-K' adds the asymptotic kernel tail, 'hard-cutoff' drops it.
        density (int): kernel cache points per decade.
    """
    rel_tol: float = Field(default=1e-10, gt=0)
    abs_tol: float = Field(default=1e-14, gt=0)
    max_subdivisions: int = Field(default=4, ge=0)
    tail_policy: str = "asymptotic-K"
    density: int = Field(default=64, ge=8)

    def spec_hash(self) -> str:
        payload = json.dumps(self.model_dump(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class EvalResult(BaseModel):
    """
    A value reported as (log|F|, arg F).

    abs_error_estimate is the absolute error of log_magnitude, i.e. a relative error of |F|.
    """
    log_magnitude: float
    phase: float = 0.0
    abs_error_estimate: float = 1e-16
    method: str = "series"

    @property
    def value(self) -> complex:
        import cmath
        return cmath.exp(complex(self.log_magnitude, self.phase))


class SaddlePoint(BaseModel):
    """
    Solution s of log L(s) + eps(s) = log z.

    Attributes:
        z_real, z_imag (float): the target point z.
        s_real, s_imag (float): the solution s = rho e^{i theta}.
        residual (float): |log L(s) + eps(s) - log z|.
        newton_iterations (int): iterations used by the damped Newton solver.
    """
    z_real: float
    z_imag: float
    s_real: float
    s_imag: float
    residual: float
    newton_iterations: int

    @property
    def s(self) -> complex:
        return complex(self.s_real, self.s_imag)

    @property
    def z(self) -> complex:
        return complex(self.z_real, self.z_imag)

    @property
    def rho(self) -> float:
        return abs(self.s)

    @property
    def theta(self) -> float:
        import cmath
        return cmath.phase(self.s)


class SummationResult(BaseModel):
    """
    Value produced by a regular transform or a moment summation.

    Attributes:
        value_real, value_imag (float): the summed value b.
        error_estimate (float): absolute error estimate.
        trace (Dict[str, Any]): truncation radius, kernel cache id and other diagnostics.
    """
    value_real: float
    value_imag: float = 0.0
    error_estimate: float
    trace: Dict[str, Any] = {}

    @property
    def value(self) -> complex:
        return complex(self.value_real, self.value_imag)


############# Diagnostics #############

class RegularityEntry(BaseModel):
    """One regularity assumption evaluated on a grid."""
    name: str
    description: str
    verdict: str
    t_values: List[float]
    measured: List[float]
    trend: float


class RegularityReport(BaseModel):
    """
    Per-assumption verdicts for a weight.

    Attributes:
        weight (str): canonical weight string.
        entries (Dict[str, RegularityEntry]): keyed by assumption name, in the fixed order
            derivative_vanishes, eventually_concave, curvature_small, curvature_times_level,
            third_derivative_small, curvature_log, derivative_times_level,
            sector_epsilon, sector_epsilon_derivative.
    """
    weight: str
    entries: Dict[str, RegularityEntry]

    def verdict(self, name: str) -> str:
        return self.entries[name].verdict


class MembershipDiagnostic(BaseModel):
    """
    Result of a class-membership diagnostic.

    Attributes:
        class_tag (str): F0, A_interval, A_omega, A_plus, A_minus, A_omega_star or poly.
        score (float): worst-case excess of log|F| over the log-majorant after fitting the
            implied constant on the lower half of the samples.
        raw_score (float): worst-case excess without the fitted constant.
        verdict (str): member / non_member / inconclusive.
        samples (List[List[float]]): sample points as [re, im].
        fitted (Dict[str, float]): fitted free constants.
        flags (List[str]): e.g. 'clipped' when far samples exhausted precision.
    """
    class_tag: str
    score: float
    raw_score: float = 0.0
    verdict: str = "inconclusive"
    samples: List[List[float]] = []
    fitted: Dict[str, float] = {}
    flags: List[str] = []


############# Experiment / report #############

class CheckRecord(BaseModel):
    """
    One verified statement inside a report.

    Attributes:
        name (str): check identifier.
        anchor (str): quoted statement the check refers to, or 'plumbing'.
        measured (float, optional): the measured quantity.
        tolerance (str): the acceptance rule as text.
        verdict (str): pass, fail or inconclusive.
        detail (str): free-form detail (error text when the check raised).
    """
    name: str
    anchor: str
    measured: Optional[float] = None
    tolerance: str = ""
    verdict: str
    detail: str = ""


class ExperimentConfig(BaseModel):
    """
    Everything needed to reproduce a report.

    Attributes:
        weight (WeightSpec): weight under test.
        quadrature (QuadratureSpec): tolerances.
        selectors (List[str]): suites to run; empty means an empty report.
        output_dir (str): where reports are written.
        cache_dir (str, optional): kernel cache directory.
        seed (int): random seed, recorded in every report.
        offline (bool): refuse to build kernel caches that are not on disk.
    """
    weight: WeightSpec = WeightSpec(type="denjoy", alpha0=0.0, alphas=[(1, 1.0)])
    quadrature: QuadratureSpec = QuadratureSpec()
    selectors: List[str] = []
    output_dir: str = "output/reports"
    cache_dir: Optional[str] = None
    seed: int = 0
    offline: bool = False

    def config_hash(self) -> str:
        payload = {
            "weight": self.weight.canonical(),
            "quadrature": self.quadrature.model_dump(),
            "selectors": list(self.selectors),
            "seed": self.seed,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()[:16]


class ReportDocument(BaseModel):
    """
    Output of run_experiment.

    Attributes:
        tool_version (str): version string from config.
        config_hash (str): hash of the experiment configuration.
        seed (int): random seed used.
        weight (str): canonical weight string.
        records (List[CheckRecord]): per-check verdicts.
        timing (Dict[str, float]): wall-clock seconds per suite; excluded from JSON export.
    """
    tool_version: str
    config_hash: str
    seed: int
    weight: str = ""
    records: List[CheckRecord] = []
    timing: Dict[str, float] = {}

    def all_passed(self) -> bool:
        return all(r.verdict == "pass" for r in self.records)
