import logging
from pathlib import Path
from typing import Dict, Optional

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from config import CONTOUR_DENSITY
from exceptions import ConfigError, DomainError
from weights.weight import Weight

logger = logging.getLogger(__name__)

RHO_MIN = 10.0
RHO_MAX = 1e12
DELTA_CAP = 0.3


class HProfile:
    """
    Boundary growth function H(psi) of a weight.

    On the solved branch psi = Im(log L(i rho) + eps(i rho)) is inverted for rho and
    log H = Re(i rho eps(i rho)). On [delta, pi/2] the branch is continued by a fixed C^1
    strictly decreasing extension in log H ending at log H(delta) - 1, so H(pi/2) = H(delta)/e;
    below the tabulated range log log H follows c / psi; and H(pi - psi) = H(psi).

    Attributes:
        delta (float): end of the solved branch.
        psi_min (float): smallest tabulated psi (at rho = 1e12).
    """

    def __init__(self, w: Weight, density: int = CONTOUR_DENSITY):
        self.weight = w
        rho = np.logspace(np.log10(RHO_MIN), np.log10(RHO_MAX), int(np.log10(RHO_MAX / RHO_MIN) * density) + 1)
        psi, loglog = self._branch(rho)
        if np.any(np.diff(psi) >= 0) or np.any(~np.isfinite(loglog)):
            raise ConfigError(f"psi(rho) is not decreasing for {w.canonical()}: H is not defined")
        self.rho_table = rho
        self.psi_table = psi
        self.loglog_table = loglog
        self.psi_min = float(psi[-1])
        self.delta = float(min(DELTA_CAP, 0.9 * psi[0]))
        self.tail_constant = float(loglog[-1] * psi[-1])

        self.v0 = float(self._solved(self.delta))
        h = 1e-5 * self.delta
        self.m0 = float((self._solved(self.delta + h) - self._solved(self.delta - h)) / (2 * h))
        self.u0 = float(np.exp(self.v0))
        self.u1 = self.u0 - 1.0
        if self.u1 <= 0:
            raise ConfigError(f"log H(delta) = {self.u0:.4g} leaves no room for H(pi/2) = H(delta)/e")
        self.v1 = float(np.log(self.u1))
        self.k = max(-self.u0 * self.m0 * (np.pi / 2 - self.delta) / (self.u0 - self.u1), 1e-6)
        self.theta = min(0.5, self.k / 2)
        self.beta = (self.k - 1.0) / (1.0 - self.theta)
        logger.info(f"H-profile for {w.canonical()}: delta={self.delta:.4f}, psi_min={self.psi_min:.4g}, "
                    f"extension slope k={self.k:.3f}")

    def _branch(self, rho):
        s = 1j * np.asarray(rho, dtype=float)
        eps = self.weight._epsilon(s)
        psi = np.imag(self.weight._log_L(s) + eps)
        log_H = np.real(s * eps)
        with np.errstate(invalid="ignore", divide="ignore"):
            return psi, np.log(log_H)

    def rho_of_psi(self, psi: float) -> float:
        """Invert psi(rho) by bisection in log rho."""
        if not self.psi_min <= psi <= self.psi_table[0]:
            raise DomainError(f"psi={psi} outside the solved range [{self.psi_min:.4g}, {self.psi_table[0]:.4g}]")

        def gap(v):
            return float(self._branch(np.array([np.exp(v)]))[0][0]) - psi

        return float(np.exp(brentq(gap, np.log(RHO_MIN), np.log(RHO_MAX), xtol=1e-13)))

    def _solved(self, psi: float) -> float:
        rho = self.rho_of_psi(psi)
        return float(self._branch(np.array([rho]))[1][0])

    def _extension(self, psi: float) -> float:
        # log H = u1 + (u0 - u1) g(x), g(x) = (1 - x)(theta + (1 - theta) e^{-beta x}) with g'(0) = -k, g' <= -theta
        x = (psi - self.delta) / (np.pi / 2 - self.delta)
        g = (1.0 - x) * (self.theta + (1.0 - self.theta) * np.exp(-self.beta * x))
        return float(np.log(self.u1 + (self.u0 - self.u1) * g))

    def loglog_H(self, psi: float) -> float:
        """log log H(psi) for psi in (0, pi)."""
        if not 0 < psi < np.pi:
            raise DomainError(f"H is defined on (0, pi), got psi={psi}")
        if psi > np.pi / 2:
            psi = np.pi - psi
        if psi >= self.delta:
            return self._extension(psi)
        if psi < self.psi_min:
            return self.tail_constant / psi
        return self._solved(psi)

    def log_H(self, psi: float) -> float:
        return float(np.exp(self.loglog_H(psi)))

    def shift_constant(self, psi: float, r: float, drop: float = 3.0) -> Optional[float]:
        """
        Smallest A on a geometric grid with log log H(psi + A/r) <= log log H(psi) - drop/r
        and psi + A/r <= pi/2; None when no grid value works.
        """
        base = self.loglog_H(psi)
        for A in np.logspace(-3, 3, 121):
            target = psi + A / r
            if target > np.pi / 2:
                break
            if self.loglog_H(target) <= base - drop / r:
                return float(A)
        return None

    def to_dataframe(self, points: int = 200) -> pd.DataFrame:
        psi = np.linspace(1e-3, np.pi - 1e-3, points)
        return pd.DataFrame({"psi": psi, "loglogH": [self.loglog_H(p) for p in psi]})

    def export_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_dataframe().to_csv(path, index=False)
        return path


_PROFILES: Dict[str, HProfile] = {}


def h_profile(w: Weight) -> HProfile:
    key = w.canonical()
    if key not in _PROFILES:
        _PROFILES[key] = HProfile(w)
    return _PROFILES[key]


def eval_H(w: Weight, psi: float) -> float:
    """log log H(psi) of the weight."""
    return h_profile(w).loglog_H(psi)
