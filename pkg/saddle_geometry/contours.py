import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.optimize import brentq

from config import CONTOUR_DENSITY
from exceptions import ConfigError
from saddle_geometry.saddle import saddle_image
from utils import clenshaw_curtis
from weights.weight import Weight

logger = logging.getLogger(__name__)

# the segment from 0 to z(i rho0) is split at 2^-6, ..., 1/2
SEGMENT_GRADING = 6
MELLIN_TAU_START = 1.0
MELLIN_TAU_LIMIT = 1e6
GAMMA_R_CONSTANT = 8.0


class Contour(BaseModel):
    """
    An integration path given by quadrature nodes.

    Attributes:
        role (str): psi_plus, psi_minus, mellin_line or gamma_R.
        nodes (np.ndarray): complex points, ordered along the path.
        weights (np.ndarray): complex weights w_j so that sum_j w_j f(z_j) approximates the path integral of f(z) dz.
        segment_ids (np.ndarray): piece index of each node.
        preimages (np.ndarray, optional): saddle points s_j with z_j = L(s_j) e^{eps(s_j)} on the curved part.
        metadata (Dict[str, Any]): truncation radius and reason, parameters of the role.
    """
    role: str
    nodes: Any
    weights: Any
    segment_ids: Any
    preimages: Optional[Any] = None
    metadata: Dict[str, Any] = {}

    class Config:
        arbitrary_types_allowed = True

    def integrate(self, values) -> complex:
        return complex(np.sum(self.weights * np.asarray(values)))

    def conjugate(self, role: str) -> "Contour":
        pre = None if self.preimages is None else np.conj(self.preimages)
        return Contour(role=role, nodes=np.conj(self.nodes), weights=np.conj(self.weights),
                       segment_ids=self.segment_ids.copy(), preimages=pre, metadata=dict(self.metadata))

    def to_dataframe(self) -> pd.DataFrame:
        return pd.DataFrame({
            "re": self.nodes.real,
            "im": self.nodes.imag,
            "weight_re": self.weights.real,
            "weight_im": self.weights.imag,
            "segment_id": self.segment_ids,
        })

    def export_csv(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_dataframe().to_csv(path, index=False)
        logger.info(f"Exported {self.role} contour with {len(self.nodes)} nodes to {path}")
        return path


class _PieceAccumulator:
    """Concatenates Clenshaw-Curtis pieces, merging the shared endpoint of consecutive pieces."""

    def __init__(self):
        self.nodes: List[complex] = []
        self.weights: List[complex] = []
        self.ids: List[int] = []
        self.pre: List[complex] = []

    def add(self, nodes, weights, seg_id, pre=None):
        nodes, weights = list(nodes), list(weights)
        pre = list(pre) if pre is not None else [np.nan] * len(nodes)
        if self.nodes and abs(self.nodes[-1] - nodes[0]) <= 1e-12 * max(1.0, abs(nodes[0])):
            self.weights[-1] += weights[0]
            nodes, weights, pre = nodes[1:], weights[1:], pre[1:]
        self.nodes += nodes
        self.weights += weights
        self.ids += [seg_id] * len(nodes)
        self.pre += pre

    def arrays(self):
        return (np.array(self.nodes, dtype=complex), np.array(self.weights, dtype=complex),
                np.array(self.ids, dtype=int), np.array(self.pre, dtype=complex))


def psi_radius(w: Weight, rho: float) -> float:
    """|z| on the upper boundary curve at the saddle s = i rho."""
    return float(np.abs(saddle_image(w, 1j * rho)))


def _boundary_curve(w: Weight, v):
    return saddle_image(w, 1j * np.exp(np.asarray(v, dtype=float)))


def build_psi_plus(w: Weight, r_max: float, density: int = CONTOUR_DENSITY) -> Contour:
    """
    Upper boundary contour: a straight graded segment from 0 to z(i rho0), then the curve
    z(i rho) = L(i rho) e^{eps(i rho)} for rho from rho0 up to the preimage of r_max.

    Raises:
        ConfigError: if r_max does not exceed r0 = |z(i rho0)|.
    """
    v0 = float(np.log(w.rho0))
    z0 = complex(_boundary_curve(w, v0))
    r0 = abs(z0)
    if r_max <= r0:
        raise ConfigError(f"r_max={r_max:g} must exceed r0={r0:.6g}")
    x, cw = clenshaw_curtis(density)
    acc = _PieceAccumulator()

    cuts = [0.0] + [2.0 ** (-k) for k in range(SEGMENT_GRADING, -1, -1)]
    for a, b in zip(cuts[:-1], cuts[1:]):
        u = a + 0.5 * (b - a) * (x + 1.0)
        acc.add(z0 * u, z0 * 0.5 * (b - a) * cw, 0)

    def gap(v):
        return float(np.log(np.abs(_boundary_curve(w, v)))) - np.log(r_max)

    v_max = brentq(gap, v0, 700.0, xtol=1e-12)
    n_pieces = max(1, int(np.ceil((v_max - v0) / np.log(10.0))))
    edges = np.linspace(v0, v_max, n_pieces + 1)
    h = 1e-4
    for seg, (a, b) in enumerate(zip(edges[:-1], edges[1:]), start=1):
        v = a + 0.5 * (b - a) * (x + 1.0)
        z = _boundary_curve(w, v)
        dz = (-_boundary_curve(w, v + 2 * h) + 8 * _boundary_curve(w, v + h)
              - 8 * _boundary_curve(w, v - h) + _boundary_curve(w, v - 2 * h)) / (12 * h)
        acc.add(z, dz * 0.5 * (b - a) * cw, seg, pre=1j * np.exp(v))

    nodes, weights, ids, pre = acc.arrays()
    meta = {"r0": r0, "r_max": float(r_max), "rho_max": float(np.exp(v_max)), "density": density,
            "truncation": "preimage of r_max"}
    logger.info(f"Built psi_plus for {w.canonical()}: {len(nodes)} nodes up to rho={np.exp(v_max):.4g}")
    return Contour(role="psi_plus", nodes=nodes, weights=weights, segment_ids=ids, preimages=pre, metadata=meta)


def build_mellin_line(w: Weight, c: float, t_range=(1e-2, 1e2), tol: float = 1e-12,
                      density: int = CONTOUR_DENSITY) -> Contour:
    """
    Vertical line s = c + i tau, truncated where |gamma(c + i tau)| / gamma(c) < tol.

    Weights approximate ds, so (1/2 pi i) sum_j w_j gamma(s_j) t^{-s_j} gives K(t).
    Since |t^{-s}| = t^{-c} on the line, the truncation holds uniformly over t_range.
    """
    if c <= w.abscissa:
        raise ConfigError(f"Mellin line Re s = {c} must lie right of the abscissa {w.abscissa:.4g}")
    ref = float(np.real(w._log_gamma(np.array([complex(c)]))[0]))

    def log_ratio(tau):
        return float(np.real(w._log_gamma(np.array([complex(c, tau)]))[0])) - ref

    tau = MELLIN_TAU_START
    while log_ratio(tau) > np.log(tol):
        tau *= 2.0
        if tau > MELLIN_TAU_LIMIT:
            raise ConfigError(f"gamma(c + i tau) does not decay along Re s = {c}")
    x, cw = clenshaw_curtis(density)
    n_panels = int(np.ceil(2 * tau))
    edges = np.linspace(-tau, tau, n_panels + 1)
    acc = _PieceAccumulator()
    for seg, (a, b) in enumerate(zip(edges[:-1], edges[1:])):
        t = a + 0.5 * (b - a) * (x + 1.0)
        acc.add(c + 1j * t, 1j * 0.5 * (b - a) * cw, seg)
    nodes, weights, ids, _ = acc.arrays()
    meta = {"c": c, "tau_max": tau, "t_range": list(t_range), "tol": tol,
            "truncation": "|gamma(s)| / gamma(c) below tol"}
    return Contour(role="mellin_line", nodes=nodes, weights=weights, segment_ids=ids, metadata=meta)


def gamma_R_angle(w: Weight, R: float) -> float:
    """theta_R = 8 eps(L^{-1}(R)), kept inside the sector."""
    theta = GAMMA_R_CONSTANT * w.epsilon_real(w.L_inverse(R))
    return float(min(theta, w.sector_half_angle - 0.05))


def build_gamma_R(w: Weight, R: float, density: int = CONTOUR_DENSITY) -> Contour:
    """
    Closed path around the sector |arg z| <= theta_R between |z| = R and |z| = R^2:
    radial out at -theta_R, arc at R^2, radial in at +theta_R, arc at R back to the start.
    """
    if R <= 1:
        raise ConfigError("gamma_R needs R > 1")
    theta = gamma_R_angle(w, R)
    x, cw = clenshaw_curtis(density)
    acc = _PieceAccumulator()

    log_R = np.log(R)
    # radial pieces are parametrized by log|z|
    v = log_R + 0.5 * log_R * (x + 1.0)
    z = np.exp(v - 1j * theta)
    acc.add(z, z * 0.5 * log_R * cw, 0)
    phi = theta * x
    z = R ** 2 * np.exp(1j * phi)
    acc.add(z, 1j * z * theta * cw, 1)
    v = 2 * log_R - 0.5 * log_R * (x + 1.0)
    z = np.exp(v + 1j * theta)
    acc.add(z, -z * 0.5 * log_R * cw, 2)
    phi = -theta * x
    z = R * np.exp(1j * phi)
    acc.add(z, -1j * z * theta * cw, 3)

    nodes, weights, ids, _ = acc.arrays()
    meta = {"R": R, "theta_R": theta, "closed": True}
    return Contour(role="gamma_R", nodes=nodes, weights=weights, segment_ids=ids, metadata=meta)


def build_contour(w: Weight, role: str, r_max: float = None, density: int = CONTOUR_DENSITY, **kwargs) -> Contour:
    """
    Build a contour by role.

    Args:
        w (Weight): the weight.
        role (str): psi_plus, psi_minus, mellin_line or gamma_R.
        r_max (float): outer radius for psi roles, R for gamma_R.
        density (int): Clenshaw-Curtis nodes per piece.
        **kwargs: c and t_range for mellin_line.

    Returns:
        Contour: nodes and weights.
    """
    if role == "psi_plus":
        return build_psi_plus(w, r_max, density)
    if role == "psi_minus":
        return build_psi_plus(w, r_max, density).conjugate("psi_minus")
    if role == "mellin_line":
        return build_mellin_line(w, kwargs.get("c", 1.0), kwargs.get("t_range", (1e-2, 1e2)), density=density)
    if role == "gamma_R":
        return build_gamma_R(w, r_max, density)
    raise ConfigError(f"Unknown contour role {role!r}")
