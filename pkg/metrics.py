"""Network statistics - length, degree, route lengths and route-length ratio profiles.

For a city pair (i, j) the relative route excess is
r(i, j) = route_length(i, j) / d(i, j) - 1. Pairs are measured when both
cities lie in the inner window; the binned profile additionally keeps
only pairs with d(i, j) <= d_max.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.sparse.csgraph import connected_components as _csgraph_components
from scipy.sparse.csgraph import dijkstra

from analytics import efficient_network_length
from network import Network
from road_errors import InvalidParameterError

logger = logging.getLogger(__name__)

SOURCE_BLOCK = 256
# Growth test for an unbounded profile: bins from this center on, at least
# this many per half, and the late route-length slope exceeding the early
# one by this fraction.
UNBOUNDED_MIN_CENTER = 1.0
UNBOUNDED_MIN_BINS = 4
UNBOUNDED_GROWTH = 0.05


class ProfileParams(BaseModel):
    """Discretization of the route-length ratio profile."""

    model_config = ConfigDict(frozen=True)

    bin_width: float = Field(default=0.25, gt=0)
    d_max: float = Field(default=10.0, gt=0)
    inner_margin: float = Field(default=0.1, ge=0, lt=0.5)
    min_count: int = Field(default=100, ge=1)
    planarized: bool = False

    @classmethod
    def from_settings(cls, inner_margin: Optional[float] = None) -> "ProfileParams":
        from road_settings import get_settings
        s = get_settings()
        return cls(
            bin_width=s.bin_width,
            d_max=s.d_max,
            inner_margin=s.inner_margin if inner_margin is None else inner_margin,
            min_count=s.min_count,
        )

    @field_validator("d_max")
    @classmethod
    def _finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("d_max must be finite")
        return value


def _route_slope(bins) -> float:
    d = np.array([b.center for b in bins])
    route = d * (1.0 + np.array([b.mean_ratio for b in bins]))
    return float(np.polyfit(d, route, 1)[0])


def _json_float(value: float):
    if value is None or math.isnan(value):
        return None
    if math.isinf(value):
        return "inf"
    return value


@dataclass
class RhoBin:
    """One distance bin of the ratio profile."""
    center: float
    count: int
    mean_ratio: Optional[float]  # None when count < min_count
    max_ratio: float

    def to_dict(self) -> dict:
        return {
            "d_center": self.center,
            "count": self.count,
            "mean_ratio": _json_float(self.mean_ratio),
            "max_ratio": _json_float(self.max_ratio),
        }


@dataclass
class RhoProfile:
    """Binned mean of r(i, j) against Euclidean distance."""
    bin_width: float
    d_max: float
    inner_margin: float
    min_count: int
    bins: list[RhoBin] = field(default_factory=list)
    unreachable_fraction: float = 0.0

    def qualifying(self) -> list[RhoBin]:
        return [b for b in self.bins if b.mean_ratio is not None]

    @property
    def r_tilde(self) -> float:
        """Max of the qualifying bin means (NaN when no bin qualifies)."""
        if self.unreachable_fraction > 0:
            return math.inf
        means = [b.mean_ratio for b in self.qualifying()]
        return max(means) if means else math.nan

    @property
    def argmax_center(self) -> Optional[float]:
        best = None
        for b in self.qualifying():
            if best is None or b.mean_ratio > best.mean_ratio:
                best = b
        return None if best is None else best.center

    def full_bins(self) -> list[RhoBin]:
        """Qualifying bins whose whole interval lies below d_max."""
        top = self.d_max + 1e-12
        return [b for b in self.qualifying() if b.center + 0.5 * self.bin_width <= top]

    @property
    def unbounded_suspected(self) -> bool:
        """True when the mean route length d * (1 + rho) grows faster than linearly.

        The far bins are split into an early and a late half and a line is
        fitted to the mean route length in each; a bounded profile gives a
        late slope no steeper than the early one.
        """
        bins = [b for b in self.full_bins()
                if b.center >= UNBOUNDED_MIN_CENTER and math.isfinite(b.mean_ratio)]
        half = len(bins) // 2
        if half < UNBOUNDED_MIN_BINS:
            return False
        return _route_slope(bins[-half:]) > (1.0 + UNBOUNDED_GROWTH) * _route_slope(bins[:half])

    def value_at(self, d: float) -> Optional[float]:
        """Mean ratio of the bin containing distance d."""
        k = int(math.floor(d / self.bin_width + 0.5))
        if 0 <= k < len(self.bins):
            return self.bins[k].mean_ratio
        return None

    def to_dict(self) -> dict:
        return {
            "bin_width": self.bin_width,
            "d_max": self.d_max,
            "inner_margin": self.inner_margin,
            "min_count": self.min_count,
            "unreachable_fraction": self.unreachable_fraction,
            "bins": [b.to_dict() for b in self.bins],
        }


@dataclass
class NetSummary:
    """Headline statistics of one network."""
    family: str
    n_cities: int
    L: float
    avg_degree: float
    r_tilde: float
    r_max: float
    r_ave: float
    r_ave_local: float
    unreachable_fraction: float
    components: int
    degree_var: float
    unbounded_suspected: bool
    argmax_center: Optional[float] = None
    planarized: bool = False
    length_rule_ratio: float = math.nan

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "n_cities": self.n_cities,
            "L": _json_float(self.L),
            "avg_degree": _json_float(self.avg_degree),
            "r_tilde": _json_float(self.r_tilde),
            "r_max": _json_float(self.r_max),
            "r_ave": _json_float(self.r_ave),
            "r_ave_local": _json_float(self.r_ave_local),
            "unreachable_fraction": self.unreachable_fraction,
            "components": self.components,
            "degree_var": _json_float(self.degree_var),
            "unbounded_suspected": self.unbounded_suspected,
            "argmax_center": self.argmax_center,
            "planarized": self.planarized,
            "length_rule_ratio": _json_float(self.length_rule_ratio),
        }


# ==================== Length and degree ====================

def normalized_length(net: Network, inner_margin: float = 0.0) -> float:
    """Network length per unit area.

    With a margin, only edges whose midpoint lies in the inner window count,
    divided by the inner-window area.
    """
    window = net.config.window
    if inner_margin == 0.0:
        return net.total_length / window.area
    if net.n_edges == 0:
        window.inner_bounds(inner_margin)
        return 0.0
    mid = (net.positions[net.edges[:, 0]] + net.positions[net.edges[:, 1]]) / 2.0
    mask = window.inner_mask(mid, inner_margin)
    return float(np.sum(net.lengths[mask])) / window.inner_area(inner_margin)


def inner_cities(net: Network, inner_margin: float) -> np.ndarray:
    return np.nonzero(net.config.window.inner_mask(net.config.points, inner_margin))[0]


def avg_degree(net: Network, inner_margin: float = 0.0) -> float:
    """Mean number of incident edges over cities in the inner window."""
    cities = inner_cities(net, inner_margin)
    if len(cities) == 0:
        return math.nan
    return float(np.mean(net.degrees[cities]))


def degree_histogram(net: Network, inner_margin: float = 0.0) -> dict[int, int]:
    cities = inner_cities(net, inner_margin)
    counts = np.bincount(net.degrees[cities]) if len(cities) else np.zeros(0, dtype=int)
    return {k: int(c) for k, c in enumerate(counts) if c}


def connected_components(net: Network) -> tuple[int, np.ndarray]:
    """Number of components containing cities, and a component label per city."""
    if net.n_cities == 0:
        return 0, np.zeros(0, dtype=np.int64)
    _, labels = _csgraph_components(net.adjacency, directed=False)
    city_labels = labels[:net.n_cities]
    _, relabeled = np.unique(city_labels, return_inverse=True)
    return int(relabeled.max()) + 1, relabeled.astype(np.int64)


# ==================== Routes ====================

def route_lengths(net: Network, source: int) -> np.ndarray:
    """Shortest route length from a city to every city (inf when unreachable)."""
    if not 0 <= source < net.n_cities:
        raise InvalidParameterError("source", f"city id out of range: {source}")
    dist = dijkstra(net.adjacency, directed=False, indices=source)
    return dist[:net.n_cities]


@dataclass
class _PairAccumulator:
    """Running totals over measured pairs; merged block by block in source order."""
    n_bins: int
    bin_width: float
    d_max: float
    pairs: int = 0
    unreachable: int = 0
    ratio_sum: float = 0.0
    ratio_max: float = 0.0
    local_pairs: int = 0
    local_sum: float = 0.0
    counts: np.ndarray = None
    sums: np.ndarray = None
    maxes: np.ndarray = None
    blocked: np.ndarray = None

    def __post_init__(self):
        self.counts = np.zeros(self.n_bins, dtype=np.int64)
        self.sums = np.zeros(self.n_bins)
        self.maxes = np.zeros(self.n_bins)
        self.blocked = np.zeros(self.n_bins, dtype=np.int64)

    def add(self, d: np.ndarray, route: np.ndarray) -> None:
        reach = np.isfinite(route)
        ratio = np.full(len(d), math.inf)
        ratio[reach] = np.maximum(route[reach] / d[reach] - 1.0, 0.0)

        self.pairs += len(d)
        self.unreachable += int(np.count_nonzero(~reach))
        self.ratio_sum += float(np.sum(ratio[reach]))
        if len(ratio):
            self.ratio_max = max(self.ratio_max, float(np.max(ratio)))

        near = d <= self.d_max
        self.local_pairs += int(np.count_nonzero(near & reach))
        self.local_sum += float(np.sum(ratio[near & reach]))

        k = np.floor(d[near] / self.bin_width + 0.5).astype(np.int64)
        k = np.minimum(k, self.n_bins - 1)
        r = ratio[near]
        ok = np.isfinite(r)
        self.counts += np.bincount(k, minlength=self.n_bins)
        self.sums += np.bincount(k[ok], weights=r[ok], minlength=self.n_bins)
        self.blocked += np.bincount(k[~ok], minlength=self.n_bins)
        np.maximum.at(self.maxes, k, r)


def _accumulate_pairs(net: Network, params: ProfileParams) -> _PairAccumulator:
    if params.planarized:
        from builders import planarize
        net = planarize(net)
    n_bins = int(round(params.d_max / params.bin_width)) + 1
    acc = _PairAccumulator(n_bins=n_bins, bin_width=params.bin_width, d_max=params.d_max)
    cities = inner_cities(net, params.inner_margin)
    xy = net.config.points
    for lo in range(0, len(cities), SOURCE_BLOCK):
        block = cities[lo:lo + SOURCE_BLOCK]
        dist = dijkstra(net.adjacency, directed=False, indices=block)
        for row, src in enumerate(block):
            targets = cities[lo + row + 1:]
            if len(targets) == 0:
                continue
            d = np.hypot(*(xy[targets] - xy[src]).T)
            acc.add(d, dist[row, targets])
    return acc


def _profile_from(acc: _PairAccumulator, params: ProfileParams) -> RhoProfile:
    bins = []
    for k in range(acc.n_bins):
        count = int(acc.counts[k])
        mean = None
        if count >= params.min_count:
            mean = math.inf if acc.blocked[k] else float(acc.sums[k] / count)
        bins.append(RhoBin(center=k * params.bin_width, count=count, mean_ratio=mean,
                           max_ratio=float(acc.maxes[k])))
    frac = acc.unreachable / acc.pairs if acc.pairs else 0.0
    return RhoProfile(
        bin_width=params.bin_width,
        d_max=params.d_max,
        inner_margin=params.inner_margin,
        min_count=params.min_count,
        bins=bins,
        unreachable_fraction=frac,
    )


def rho_profile(
    net: Network,
    bin_width: float = 0.25,
    d_max: float = 10.0,
    inner_margin: float = 0.1,
    min_count: int = 100,
    planarized: bool = False,
) -> RhoProfile:
    """Binned route-length ratio profile over inner-window pairs with d <= d_max."""
    try:
        params = ProfileParams(bin_width=bin_width, d_max=d_max, inner_margin=inner_margin,
                               min_count=min_count, planarized=planarized)
    except ValueError as exc:
        raise InvalidParameterError("profile", str(exc).splitlines()[0]) from exc
    return _profile_from(_accumulate_pairs(net, params), params)


def summarize_with_profile(net: Network, params: Optional[ProfileParams] = None) -> tuple[NetSummary, RhoProfile]:
    """Summary and ratio profile from a single pass over the measured pairs."""
    params = params or ProfileParams()
    acc = _accumulate_pairs(net, params)
    profile = _profile_from(acc, params)
    reachable = acc.pairs - acc.unreachable
    r_ave = acc.ratio_sum / reachable if reachable else math.nan
    r_ave_local = acc.local_sum / acc.local_pairs if acc.local_pairs else math.nan
    r_max = math.inf if acc.unreachable else acc.ratio_max

    cities = inner_cities(net, params.inner_margin)
    degrees = net.degrees[cities].astype(float)
    components, _ = connected_components(net)
    if acc.unreachable:
        logger.warning("%s: %d of %d measured pairs unreachable", net.family.describe(), acc.unreachable, acc.pairs)
    rule_ratio = (net.total_length / efficient_network_length(net.config.window.area, net.n_cities)
                  if net.n_cities else math.nan)

    summary = NetSummary(
        family=net.family.describe(),
        n_cities=net.n_cities,
        L=normalized_length(net, params.inner_margin),
        avg_degree=float(np.mean(degrees)) if len(degrees) else math.nan,
        r_tilde=profile.r_tilde,
        r_max=r_max if acc.pairs else math.nan,
        r_ave=r_ave,
        r_ave_local=r_ave_local,
        unreachable_fraction=profile.unreachable_fraction,
        components=components,
        degree_var=float(np.var(degrees)) if len(degrees) else math.nan,
        unbounded_suspected=profile.unbounded_suspected,
        argmax_center=profile.argmax_center,
        planarized=params.planarized,
        length_rule_ratio=rule_ratio,
    )
    return summary, profile


def summarize(net: Network, params: Optional[ProfileParams] = None) -> NetSummary:
    """L, average degree, R-tilde, R_max and R_ave of a network."""
    return summarize_with_profile(net, params)[0]
