"""Beta-skeleton templates.

A template is an open region in the canonical frame where the pair of
cities sits at v- = (-1/2, 0) and v+ = (1/2, 0). For a real pair (x, y)
the region is carried over by the translation, rotation and scaling that
maps (v-, v+) onto (x, y).
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from geometry import GEOM_TOL, Point, lens_area
from road_errors import InvalidParameterError


class TemplateRegime(str, Enum):
    """Which pair of discs defines the template."""
    LENS_SMALL_BETA = "lens-small-beta"  # beta < 1: discs through v- and v+
    LENS_LARGE_BETA = "lens-large-beta"  # beta >= 1: discs centered on the axis


@dataclass(frozen=True)
class Template:
    """An open beta-skeleton template with its area c."""

    beta: float
    regime: TemplateRegime
    area: float

    @property
    def disc_radius(self) -> float:
        if self.regime == TemplateRegime.LENS_LARGE_BETA:
            return self.beta / 2.0
        return 1.0 / (2.0 * self.beta)

    @property
    def center_offset(self) -> float:
        """Distance of each disc center from the origin along its axis."""
        if self.regime == TemplateRegime.LENS_LARGE_BETA:
            return (self.beta - 1.0) / 2.0
        r = self.disc_radius
        return math.sqrt(max(r * r - 0.25, 0.0))

    @property
    def half_height(self) -> float:
        """Half extent of the template along the canonical y axis."""
        if self.regime == TemplateRegime.LENS_LARGE_BETA:
            return math.sqrt(2.0 * self.beta - 1.0) / 2.0
        return self.disc_radius - self.center_offset

    @property
    def inner_radius(self) -> float:
        """Radius of the largest disc about the origin inside the template."""
        if self.regime == TemplateRegime.LENS_LARGE_BETA:
            return 0.5
        return self.disc_radius - self.center_offset

    def contains_canonical(self, a, b) -> np.ndarray:
        """Strict membership of canonical coordinates (a, b); vectorized."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        r2 = self.disc_radius ** 2 - GEOM_TOL
        off = self.center_offset
        if self.regime == TemplateRegime.LENS_LARGE_BETA:
            return ((a - off) ** 2 + b * b < r2) & ((a + off) ** 2 + b * b < r2)
        return (a * a + (b - off) ** 2 < r2) & (a * a + (b + off) ** 2 < r2)

    def to_dict(self) -> dict:
        return {"beta": self.beta, "regime": self.regime.value, "area": self.area}


def _check_beta(beta: float) -> float:
    if not (0.0 < beta <= 2.0):
        raise InvalidParameterError("beta", f"must lie in (0, 2], got {beta}")
    return float(beta)


def template_area(beta: float) -> float:
    """Area c of the beta-skeleton template."""
    beta = _check_beta(beta)
    if beta >= 1.0:
        return lens_area(beta / 2.0, beta / 2.0, beta - 1.0)
    r = 1.0 / (2.0 * beta)
    return lens_area(r, r, 2.0 * math.sqrt(r * r - 0.25))


def beta_template(beta: float) -> Template:
    """Build the beta-skeleton template (beta=1 Gabriel disc, beta=2 lune)."""
    beta = _check_beta(beta)
    regime = TemplateRegime.LENS_LARGE_BETA if beta >= 1.0 else TemplateRegime.LENS_SMALL_BETA
    return Template(beta=beta, regime=regime, area=template_area(beta))


def canonical_coords(x, y, z) -> tuple[np.ndarray, np.ndarray]:
    """Coordinates of z in the frame that maps x to v- and y to v+.

    z may be a single point or an (m, 2) array.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    d = y - x
    length = math.hypot(d[0], d[1])
    if length <= GEOM_TOL:
        raise InvalidParameterError("x", "the two endpoints must be distinct")
    ux, uy = d[0] / length, d[1] / length
    rel = z - (x + y) / 2.0
    a = (rel[..., 0] * ux + rel[..., 1] * uy) / length
    b = (rel[..., 1] * ux - rel[..., 0] * uy) / length
    return a, b


def template_contains(t: Template, x: Point, y: Point, z: Point) -> bool:
    """True iff z lies in the open region A(x, y)."""
    a, b = canonical_coords(x, y, z)
    return bool(t.contains_canonical(a, b))
