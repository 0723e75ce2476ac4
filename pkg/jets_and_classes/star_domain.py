from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, model_validator


class StarDomain(BaseModel):
    """
    A region star-shaped with respect to 0: a polygon given by its vertices in
    counter-clockwise order, or the disk |w| < radius.

    Attributes:
        vertices (List[Tuple[float, float]], optional): polygon vertices (x, y).
        radius (float, optional): disk radius when no vertices are given.
        name (str): label used in reports.
    """
    vertices: Optional[List[Tuple[float, float]]] = None
    radius: Optional[float] = None
    name: str = "domain"

    @model_validator(mode="after")
    def _check_shape(self):
        if (self.vertices is None) == (self.radius is None):
            raise ValueError("give either polygon vertices or a disk radius")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("disk radius must be positive")
        if self.vertices is not None and len(self.vertices) < 3:
            raise ValueError("a polygon needs at least three vertices")
        return self

    def boundary_distance(self, theta: float) -> float:
        """Distance from 0 to the boundary along the ray arg w = theta."""
        if self.radius is not None:
            return float(self.radius)
        d = np.array([np.cos(theta), np.sin(theta)])
        p = np.asarray(self.vertices, dtype=float)
        q = np.roll(p, -1, axis=0)
        e = q - p
        # solve s d = p + lam e for (s, lam) on every edge at once
        det = d[0] * (-e[:, 1]) - d[1] * (-e[:, 0])
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (p[:, 0] * (-e[:, 1]) - p[:, 1] * (-e[:, 0])) / det
            lam = (d[0] * p[:, 1] - d[1] * p[:, 0]) / det
        hit = (np.abs(det) > 1e-300) & (s > 0) & (lam >= -1e-12) & (lam <= 1 + 1e-12)
        if not np.any(hit):
            return float("inf")
        return float(np.min(s[hit]))

    def minkowski(self, w: complex) -> float:
        """H(w) = inf{lambda > 0 : w in lambda * domain}."""
        w = complex(w)
        if w == 0:
            return 0.0
        return abs(w) / self.boundary_distance(np.angle(w))

    def contains(self, w: complex) -> bool:
        return self.minkowski(w) < 1.0

    def homogeneity_defect(self, samples: int = 32, seed: int = 0) -> float:
        """max |H(lam w) - lam H(w)| over random w and lam > 0."""
        rng = np.random.default_rng(seed)
        w = rng.normal(size=samples) + 1j * rng.normal(size=samples)
        lam = rng.uniform(0.1, 10.0, size=samples)
        return float(max(abs(self.minkowski(l * z) - l * self.minkowski(z)) for l, z in zip(lam, w)))


def disk_domain(radius: float = 1.0) -> StarDomain:
    return StarDomain(radius=radius, name=f"disk(r={radius:g})")


def slit_plane_domain(cut: float = 1.0, R: float = 1e3, opening: float = 1e-3, sides: int = 256) -> StarDomain:
    """
    Polygonal approximation of {|w| < R} minus the cut [cut, R): the Mittag-Leffler star of 1/(cut - z).
    """
    theta = np.linspace(opening, 2 * np.pi - opening, sides)
    ring = [(R * np.cos(t), R * np.sin(t)) for t in theta]
    return StarDomain(vertices=[(cut, 0.0)] + ring, name=f"slit(cut={cut:g})")
