import json
import logging
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, field_validator, model_validator

from exceptions import ConfigError

logger = logging.getLogger(__name__)

PROVENANCES = ["sampled", "analytic", "synthetic"]


class Jet(BaseModel):
    """
    Taylor coefficients a_n of a function at the origin, stored as (log|a_n|, arg a_n).

    A zero coefficient has log_mag = -inf. Sparse jets list the (float) index of every
    stored coefficient in `indices`; dense jets leave it unset and cover n = 0..N.
    Analytic geometric jets a_n = c q^n also carry (c, Re q, Im q) in `geometric` so that
    transforms can use the closed form instead of the truncated coefficients.

    Attributes:
        log_mag (List[float]): log-magnitudes of the coefficients.
        phase (List[float]): arguments of the coefficients.
        indices (List[float], optional): coefficient indices for sparse jets.
        geometric (Tuple[float, float, float], optional): (c, Re q, Im q) for a_n = c q^n.
        provenance (str): sampled, analytic or synthetic.
    """
    log_mag: List[float]
    phase: List[float]
    indices: Optional[List[float]] = None
    geometric: Optional[Tuple[float, float, float]] = None
    provenance: str = "synthetic"

    @field_validator("log_mag", mode="before")
    @classmethod
    def _none_is_zero(cls, v):
        return [-np.inf if x is None else x for x in v]

    @model_validator(mode="after")
    def _check(self):
        if len(self.log_mag) == 0:
            raise ConfigError("a jet needs at least one coefficient")
        if len(self.phase) != len(self.log_mag):
            raise ConfigError("log_mag and phase must have the same length")
        if self.indices is not None and len(self.indices) != len(self.log_mag):
            raise ConfigError("indices must match the coefficients")
        mags = np.asarray(self.log_mag, dtype=float)
        if np.any(np.isnan(mags)) or np.any(mags == np.inf) or not np.all(np.isfinite(self.phase)):
            raise ConfigError("jet coefficients must be finite")
        if self.provenance not in PROVENANCES:
            raise ConfigError(f"Unknown provenance {self.provenance!r}; expected one of {PROVENANCES}")
        return self

    @property
    def n_terms(self) -> int:
        return len(self.log_mag)

    def index_array(self) -> np.ndarray:
        if self.indices is None:
            return np.arange(self.n_terms, dtype=float)
        return np.asarray(self.indices, dtype=float)

    def values(self) -> np.ndarray:
        """Coefficients as complex numbers (overflows to inf for huge sparse entries)."""
        with np.errstate(over="ignore"):
            return np.exp(np.asarray(self.log_mag)) * np.exp(1j * np.asarray(self.phase))

    def ratio(self) -> Optional[complex]:
        if self.geometric is None:
            return None
        return complex(self.geometric[1], self.geometric[2])

    @classmethod
    def from_values(cls, values, provenance: str = "synthetic", indices=None) -> "Jet":
        values = np.asarray(values, dtype=complex)
        with np.errstate(divide="ignore"):
            log_mag = np.log(np.abs(values))
        phase = np.where(values == 0, 0.0, np.angle(values))
        return cls(log_mag=log_mag.tolist(), phase=phase.tolist(),
                   indices=None if indices is None else [float(n) for n in indices], provenance=provenance)

    ############# JSON #############

    def to_json(self) -> str:
        """The jet file form {"coeffs": [{"log_mag", "phase"}, ...], "provenance": ...}."""
        payload = {
            "coeffs": [{"log_mag": m if np.isfinite(m) else None, "phase": p}
                       for m, p in zip(self.log_mag, self.phase)],
            "provenance": self.provenance,
        }
        if self.indices is not None:
            payload["indices"] = self.indices
        if self.geometric is not None:
            payload["geometric"] = list(self.geometric)
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> "Jet":
        try:
            payload = json.loads(text)
            coeffs = payload["coeffs"]
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise ConfigError(f"Malformed jet file: {e}")
        return cls(log_mag=[c.get("log_mag") for c in coeffs], phase=[c.get("phase", 0.0) for c in coeffs],
                   indices=payload.get("indices"), geometric=payload.get("geometric"),
                   provenance=payload.get("provenance", "synthetic"))


def save_jet(jet: Jet, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(jet.to_json(), encoding="utf-8")
    logger.info(f"Saved {jet.n_terms}-term jet to {path}")
    return path


def load_jet(path) -> Jet:
    return Jet.from_json(Path(path).read_text(encoding="utf-8"))


############# Common jets #############

def geometric_jet(c: float = 1.0, q: complex = 1.0, n_terms: int = 64) -> Jet:
    """a_n = c q^n, n < n_terms, with the closed form attached."""
    q = complex(q)
    n = np.arange(n_terms, dtype=float)
    log_mag = np.log(abs(c)) + n * np.log(abs(q)) if q != 0 else np.where(n == 0, np.log(abs(c)), -np.inf)
    phase = (np.pi if c < 0 else 0.0) + n * np.angle(q)
    phase = np.angle(np.exp(1j * phase))
    return Jet(log_mag=list(log_mag), phase=list(phase), geometric=(float(c), q.real, q.imag),
               provenance="analytic")


def pole_jet(pole: float, n_terms: int = 64) -> Jet:
    """Jet of 1/(pole - x): a_n = pole^{-(n+1)}."""
    return geometric_jet(1.0 / pole, 1.0 / pole, n_terms)


def polynomial_jet(coefficients, provenance: str = "synthetic") -> Jet:
    return Jet.from_values(coefficients, provenance=provenance)


def sparse_jet(indices, log_mag, phase=None) -> Jet:
    log_mag = list(map(float, log_mag))
    phase = [0.0] * len(log_mag) if phase is None else list(map(float, phase))
    if len(log_mag) == 0:
        return Jet(log_mag=[-np.inf], phase=[0.0], indices=[0.0], provenance="synthetic")
    return Jet(log_mag=log_mag, phase=phase, indices=list(map(float, indices)), provenance="synthetic")


def log_gamma_ratio_jet(numerator, denominator, n_terms: int = 64, theta: float = 0.0) -> Tuple[Jet, np.ndarray]:
    """
    Jet a_n = e^{i n theta} gamma_num(n+1) / gamma_den(n+1) for two weights.

    Returns the jet and the indices used.
    """
    n = np.arange(n_terms, dtype=float)
    log_mag = numerator.log_gamma_int(n + 1) - denominator.log_gamma_int(n + 1)
    phase = np.angle(np.exp(1j * n * theta))
    return Jet(log_mag=list(log_mag), phase=list(phase), provenance="analytic"), n
