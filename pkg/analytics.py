"""Closed-form and quadrature constants that Monte Carlo results are checked against."""

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable

from scipy import integrate

from hammersley import hammersley_mean_edge, hammersley_mean_edge_closed_form
from road_errors import InvalidParameterError
from templates import beta_template, template_area

# Radial integrals are truncated where the integrand drops below this.
TAIL_TOLERANCE = 1e-12
QUADRATURE_TOLERANCE = 1e-6
# Monte Carlo value cited for the MST (reference only, not derived here).
MST_L_REFERENCE = 0.633


class Provenance(str, Enum):
    CLOSED_FORM = "closed-form"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class AnalyticValue:
    """A named constant and how it was obtained."""
    name: str
    value: float
    provenance: Provenance
    tolerance: float = 0.0

    def to_dict(self) -> dict:
        data = asdict(self)
        data["provenance"] = self.provenance.value
        return data


@dataclass(frozen=True)
class BetaPoint:
    beta: float
    area: float
    L: float
    degree: float


def skeleton_limits(c: float) -> tuple[float, float]:
    """Limit length and degree of a proximity graph whose template has area c.

    Returns:
        (L, degree) = (pi^(3/2) / (4 c^(3/2)), pi / c)
    """
    if not c > 0:
        raise InvalidParameterError("c", f"template area must be positive, got {c}")
    return math.pi ** 1.5 / (4.0 * c ** 1.5), math.pi / c


lemma1 = skeleton_limits


def _tail_cutoff(c: float, power: int) -> float:
    """Radius beyond which 2 pi s^power exp(-c s^2) stays below TAIL_TOLERANCE."""
    s = 1.0 / math.sqrt(c)
    while 2.0 * math.pi * s ** power * math.exp(-c * s * s) >= TAIL_TOLERANCE:
        s *= 1.25
    return s


def skeleton_limits_by_quadrature(c: float) -> tuple[float, float]:
    """Evaluate the length and degree kernels of exp(-c s^2) numerically.

    degree = int 2 pi s exp(-c s^2) ds, L = 1/2 int s * 2 pi s exp(-c s^2) ds.
    """
    if not c > 0:
        raise InvalidParameterError("c", f"template area must be positive, got {c}")
    degree, _ = integrate.quad(lambda s: 2.0 * math.pi * s * math.exp(-c * s * s),
                               0.0, _tail_cutoff(c, 1), epsabs=1e-12, epsrel=1e-12, limit=200)
    length, _ = integrate.quad(lambda s: math.pi * s * s * math.exp(-c * s * s),
                               0.0, _tail_cutoff(c, 2), epsabs=1e-12, epsrel=1e-12, limit=200)
    return length, degree


def template_area_by_quadrature(beta: float) -> float:
    """Template area as the integral of its height over the canonical axis."""
    t = beta_template(beta)
    r, off = t.disc_radius, t.center_offset

    if beta >= 1.0:
        def height(a):
            return math.sqrt(max(r * r - (abs(a) + off) ** 2, 0.0))
    else:
        def height(a):
            return max(math.sqrt(max(r * r - a * a, 0.0)) - off, 0.0)

    area, _ = integrate.quad(lambda a: 2.0 * height(a), -0.5, 0.5, epsabs=1e-12, epsrel=1e-12, limit=200)
    return area


def delaunay_L() -> float:
    """Mean cell perimeter 32/(3 pi), each edge counted once."""
    return 32.0 / (3.0 * math.pi)


def hammersley_L() -> float:
    """Twice the mean edge length: every city carries four half-edges."""
    return 2.0 * hammersley_mean_edge()


def beta_curve_analytic(beta_grid: Iterable[float]) -> list[BetaPoint]:
    """Length and degree limits from the template area at each beta."""
    points = []
    for beta in beta_grid:
        c = template_area(beta)
        L, degree = skeleton_limits(c)
        points.append(BetaPoint(beta=float(beta), area=c, L=L, degree=degree))
    return points


def efficient_network_length(area: float, n: int, L: float = 2.0) -> float:
    """Rule-of-thumb total length L * sqrt(area * n) of an efficient network on n cities."""
    if area <= 0 or n < 1:
        raise InvalidParameterError("area", "area must be positive and n at least 1")
    return L * math.sqrt(area * n)


def analytics_dump(beta_grid: Iterable[float] = ()) -> list[AnalyticValue]:
    """Every named constant, in a fixed order."""
    closed, quad = Provenance.CLOSED_FORM, Provenance.QUADRATURE
    gabriel_c = template_area(1.0)
    rng_c = template_area(2.0)
    g_L, g_deg = skeleton_limits(gabriel_c)
    r_L, r_deg = skeleton_limits(rng_c)
    qg_L, qg_deg = skeleton_limits_by_quadrature(gabriel_c)
    mean_edge = hammersley_mean_edge()

    values = [
        AnalyticValue("gabriel_c", gabriel_c, closed),
        AnalyticValue("gabriel_L", g_L, closed),
        AnalyticValue("gabriel_degree", g_deg, closed),
        AnalyticValue("gabriel_L_quadrature", qg_L, quad, QUADRATURE_TOLERANCE),
        AnalyticValue("gabriel_degree_quadrature", qg_deg, quad, QUADRATURE_TOLERANCE),
        AnalyticValue("rng_c", rng_c, closed),
        AnalyticValue("rng_c_quadrature", template_area_by_quadrature(2.0), quad, QUADRATURE_TOLERANCE),
        AnalyticValue("rng_L", r_L, closed),
        AnalyticValue("rng_degree", r_deg, closed),
        AnalyticValue("delaunay_L", delaunay_L(), closed),
        AnalyticValue("hammersley_mean_edge", mean_edge, quad, QUADRATURE_TOLERANCE),
        AnalyticValue("hammersley_mean_edge_exact", hammersley_mean_edge_closed_form(), closed),
        AnalyticValue("hammersley_L", 2.0 * mean_edge, quad, QUADRATURE_TOLERANCE),
    ]
    for point in beta_curve_analytic(beta_grid):
        values.append(AnalyticValue(f"beta_{point.beta:g}_L", point.L, closed))
        values.append(AnalyticValue(f"beta_{point.beta:g}_degree", point.degree, closed))
    return values
