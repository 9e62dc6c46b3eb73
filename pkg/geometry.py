"""Geometry module - point configurations, seeded sampling and predicates.

Cities live in a square window [0, side]^2 with density one per unit
area, so the finite model with n cities uses side = sqrt(n).
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterator, NamedTuple, Optional

import numpy as np
from scipy.spatial import cKDTree

from road_errors import GeneralPositionError, InvalidParameterError

logger = logging.getLogger(__name__)

GEOM_TOL = 1e-12
# Pairwise distance ties are only checked among pairs this close.
TIE_CHECK_RADIUS = 4.0
MAX_REDRAW_ROUNDS = 64

# Shewchuk's first-stage error bounds (double precision).
_EPSILON = 2.0 ** -53
_CCW_ERRBOUND_A = (3.0 + 16.0 * _EPSILON) * _EPSILON
_ICC_ERRBOUND_A = (10.0 + 96.0 * _EPSILON) * _EPSILON


class Point(NamedTuple):
    """A city position in normalized units."""

    x: float
    y: float


class SamplingModel(str, Enum):
    """How a point configuration was drawn."""
    FINITE_UNIFORM = "finite-uniform"
    POISSON = "poisson"


@dataclass(frozen=True)
class Window:
    """Square window with its lower-left corner at the origin."""

    side: float

    def __post_init__(self):
        if not (self.side > 0 and math.isfinite(self.side)):
            raise InvalidParameterError("side", f"window side must be positive, got {self.side}")

    @property
    def area(self) -> float:
        return self.side * self.side

    @property
    def diameter(self) -> float:
        return self.side * math.sqrt(2.0)

    @property
    def center(self) -> tuple[float, float]:
        return (self.side / 2.0, self.side / 2.0)

    def inner_bounds(self, margin: float) -> tuple[float, float]:
        """Lower and upper coordinate of the inner window for a margin fraction."""
        if not 0.0 <= margin < 0.5:
            raise InvalidParameterError("inner_margin", f"must lie in [0, 0.5), got {margin}")
        return margin * self.side, (1.0 - margin) * self.side

    def inner_area(self, margin: float) -> float:
        lo, hi = self.inner_bounds(margin)
        return (hi - lo) ** 2

    def inner_mask(self, xy: np.ndarray, margin: float) -> np.ndarray:
        """Boolean mask of positions inside the inner window (closed)."""
        lo, hi = self.inner_bounds(margin)
        xy = np.asarray(xy, dtype=float).reshape(-1, 2)
        return (xy[:, 0] >= lo) & (xy[:, 0] <= hi) & (xy[:, 1] >= lo) & (xy[:, 1] <= hi)

    def contains(self, xy: np.ndarray) -> np.ndarray:
        return self.inner_mask(xy, 0.0)


@dataclass(frozen=True, eq=False)
class PointConfig:
    """A seeded configuration of city positions in a square window."""

    window: Window
    points: np.ndarray  # shape (n, 2), read-only
    seed: int
    model: SamplingModel

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise InvalidParameterError("points", "coordinates must be finite")
        if len(pts) and not np.all(self.window.contains(pts)):
            raise InvalidParameterError("points", "every point must lie inside the window")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return len(self.points)

    def point(self, i: int) -> Point:
        return Point(float(self.points[i, 0]), float(self.points[i, 1]))

    def iter_points(self) -> Iterator[Point]:
        for i in range(self.n):
            yield self.point(i)

    def config_hash(self) -> str:
        """SHA-256 over the window, model, seed and exact coordinates."""
        h = hashlib.sha256()
        h.update(f"{self.model.value}|{self.window.side!r}|{self.seed}|{self.n}|".encode())
        h.update(self.points.astype("<f8").tobytes())
        return h.hexdigest()

    def sidecar(self) -> dict:
        """The JSON sidecar written next to the points CSV."""
        return {
            "model": self.model.value,
            "n": self.n,
            "side": self.window.side,
            "seed": self.seed,
        }


# ==================== Seeded random streams ====================

def derive_seed(master_seed: int, replicate: int = 0, purpose: str = "") -> int:
    """Derive a 64-bit sub-seed as blake2b(master seed, replicate, purpose)."""
    payload = f"{int(master_seed) & 0xFFFFFFFFFFFFFFFF}:{int(replicate)}:{purpose}".encode()
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")


def make_rng(seed: int, purpose: str = "", replicate: int = 0) -> np.random.Generator:
    """Counter-based Philox generator keyed by (seed, replicate, purpose).

    The key is 128 bits: two independent blake2b-derived words, so streams
    for different purposes never share a key.
    """
    lo = derive_seed(seed, replicate, purpose + "#0")
    hi = derive_seed(seed, replicate, purpose + "#1")
    return np.random.Generator(np.random.Philox(key=(hi << 64) | lo))


# ==================== Sampling ====================

def sample_finite_model(n: int, seed: int) -> PointConfig:
    """Draw n i.i.d. uniform cities in the square of area n.

    Args:
        n: Number of cities (>= 1)
        seed: 64-bit unsigned seed

    Returns:
        PointConfig with exactly n points in [0, sqrt(n)]^2
    """
    if int(n) != n or n < 1:
        raise InvalidParameterError("n", f"must be a positive integer, got {n}")
    n = int(n)
    window = Window(math.sqrt(n))
    rng = make_rng(seed, "points")
    pts = rng.uniform(0.0, window.side, size=(n, 2))
    pts = enforce_general_position(pts, window, rng)
    return PointConfig(window=window, points=pts, seed=int(seed), model=SamplingModel.FINITE_UNIFORM)


def sample_poisson(window: Window, rate: float, seed: int) -> PointConfig:
    """Draw a homogeneous Poisson point process of the given rate in a window."""
    if not rate > 0:
        raise InvalidParameterError("rate", f"must be positive, got {rate}")
    rng = make_rng(seed, "poisson")
    count = int(rng.poisson(rate * window.area))
    pts = rng.uniform(0.0, window.side, size=(count, 2))
    pts = enforce_general_position(pts, window, rng)
    return PointConfig(window=window, points=pts, seed=int(seed), model=SamplingModel.POISSON)


def _tie_offenders(values: np.ndarray) -> set[int]:
    """Indices (the later of each tied pair) whose values tie within GEOM_TOL."""
    order = np.argsort(values, kind="stable")
    gaps = np.diff(values[order])
    hits = np.nonzero(gaps < GEOM_TOL)[0]
    return {int(max(order[k], order[k + 1])) for k in hits}


def find_general_position_violations(pts: np.ndarray) -> set[int]:
    """Points to re-draw: coordinate ties and local pairwise distance ties."""
    if len(pts) < 2:
        return set()
    bad = _tie_offenders(pts[:, 0]) | _tie_offenders(pts[:, 1])
    pairs = cKDTree(pts).query_pairs(TIE_CHECK_RADIUS, output_type="ndarray")
    if len(pairs) > 1:
        dist = np.hypot(*(pts[pairs[:, 0]] - pts[pairs[:, 1]]).T)
        order = np.argsort(dist, kind="stable")
        hits = np.nonzero(np.diff(dist[order]) < GEOM_TOL)[0]
        for k in hits:
            first, second = pairs[order[k]], pairs[order[k + 1]]
            # a tie through a point already being re-drawn clears on its own
            if bad.isdisjoint(first.tolist() + second.tolist()):
                bad.add(int(second.max()))
    return bad


def enforce_general_position(pts: np.ndarray, window: Window, rng: np.random.Generator) -> np.ndarray:
    """Re-draw offending points from the seeded stream until none remain."""
    pts = np.array(pts, dtype=np.float64).reshape(-1, 2)
    for _ in range(MAX_REDRAW_ROUNDS):
        bad = find_general_position_violations(pts)
        if not bad:
            return pts
        logger.debug("re-drawing %d points for general position", len(bad))
        for i in sorted(bad):
            pts[i] = rng.uniform(0.0, window.side, size=2)
    raise GeneralPositionError(f"could not reach general position after {MAX_REDRAW_ROUNDS} rounds")


# ==================== Disc geometry ====================

def lens_area(r1: float, r2: float, center_dist: float) -> float:
    """Area of the intersection of two discs.

    Args:
        r1: Radius of the first disc (> 0)
        r2: Radius of the second disc (> 0)
        center_dist: Distance between the centers (>= 0)
    """
    if not (r1 > 0 and r2 > 0):
        raise InvalidParameterError("radius", f"radii must be positive, got {r1}, {r2}")
    if center_dist < 0:
        raise InvalidParameterError("center_dist", f"must be non-negative, got {center_dist}")
    d = float(center_dist)
    if d >= r1 + r2:
        return 0.0
    if d <= abs(r1 - r2):
        return math.pi * min(r1, r2) ** 2
    c1 = min(1.0, max(-1.0, (d * d + r1 * r1 - r2 * r2) / (2.0 * d * r1)))
    c2 = min(1.0, max(-1.0, (d * d + r2 * r2 - r1 * r1) / (2.0 * d * r2)))
    kite = (-d + r1 + r2) * (d + r1 - r2) * (d - r1 + r2) * (d + r1 + r2)
    return r1 * r1 * math.acos(c1) + r2 * r2 * math.acos(c2) - 0.5 * math.sqrt(max(kite, 0.0))


# ==================== Predicates ====================

def orient2d(a, b, c) -> int:
    """Sign of the signed area of (a, b, c): +1 counterclockwise, -1 clockwise, 0 collinear.

    Floating-point filter first; exact rational arithmetic when the filter
    cannot certify the sign.
    """
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    errbound = _CCW_ERRBOUND_A * (abs(detleft) + abs(detright))
    if det > errbound:
        return 1
    if -det > errbound:
        return -1
    ax, ay, bx, by, cx, cy = (Fraction(float(v)) for v in (a[0], a[1], b[0], b[1], c[0], c[1]))
    exact = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (exact > 0) - (exact < 0)


def incircle(a, b, c, d) -> int:
    """+1 if d lies strictly inside the circle through a, b, c (counterclockwise), -1 outside, 0 on it."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - cdx * bdy)
           + blift * (cdx * ady - adx * cdy)
           + clift * (adx * bdy - bdx * ady))
    permanent = ((abs(bdx * cdy) + abs(cdx * bdy)) * alift
                 + (abs(cdx * ady) + abs(adx * cdy)) * blift
                 + (abs(adx * bdy) + abs(bdx * ady)) * clift)
    errbound = _ICC_ERRBOUND_A * permanent
    if det > errbound:
        return 1
    if -det > errbound:
        return -1
    fa = [Fraction(float(v)) for v in (a[0], a[1])]
    fb = [Fraction(float(v)) for v in (b[0], b[1])]
    fc = [Fraction(float(v)) for v in (c[0], c[1])]
    fd = [Fraction(float(v)) for v in (d[0], d[1])]
    adx, ady = fa[0] - fd[0], fa[1] - fd[1]
    bdx, bdy = fb[0] - fd[0], fb[1] - fd[1]
    cdx, cdy = fc[0] - fd[0], fc[1] - fd[1]
    exact = ((adx * adx + ady * ady) * (bdx * cdy - cdx * bdy)
             + (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy)
             + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady))
    return (exact > 0) - (exact < 0)


def segments_cross(p1, p2, p3, p4) -> bool:
    """True iff segments p1p2 and p3p4 cross at a point interior to both."""
    o1 = orient2d(p1, p2, p3)
    o2 = orient2d(p1, p2, p4)
    o3 = orient2d(p3, p4, p1)
    o4 = orient2d(p3, p4, p2)
    return o1 * o2 < 0 and o3 * o4 < 0


def crossing_params(p1, p2, p3, p4) -> tuple[float, float]:
    """Parameters (t, u) of the intersection p1 + t(p2-p1) = p3 + u(p4-p3) of two crossing segments."""
    rx, ry = p2[0] - p1[0], p2[1] - p1[1]
    sx, sy = p4[0] - p3[0], p4[1] - p3[1]
    denom = rx * sy - ry * sx
    qx, qy = p3[0] - p1[0], p3[1] - p1[1]
    t = (qx * sy - qy * sx) / denom
    u = (qx * ry - qy * rx) / denom
    return t, u


# ==================== Spatial index ====================

class GridIndex:
    """Uniform bucket grid over a point set; immutable after construction."""

    def __init__(self, points: np.ndarray, side: float, cell_side: float):
        if not cell_side > 0:
            raise InvalidParameterError("cell_side", f"must be positive, got {cell_side}")
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        self.side = float(side)
        self.cell_side = float(cell_side)
        self.cells_per_row = max(1, int(math.ceil(self.side / self.cell_side)))

        cx, cy = self._cell_of(self.points[:, 0]), self._cell_of(self.points[:, 1])
        keys = cy * self.cells_per_row + cx
        self._order = np.argsort(keys, kind="stable")
        counts = np.bincount(keys, minlength=self.cells_per_row ** 2)
        self._starts = np.concatenate(([0], np.cumsum(counts)))
        self._order.setflags(write=False)

    def _cell_of(self, coord) -> np.ndarray:
        cell = np.floor(np.asarray(coord, dtype=float) / self.cell_side).astype(np.int64)
        return np.clip(cell, 0, self.cells_per_row - 1)

    def query(self, xmin: float, ymin: float, xmax: float, ymax: float) -> np.ndarray:
        """Indices (ascending) of points inside the closed rectangle."""
        if xmax < xmin or ymax < ymin or xmax < 0 or ymax < 0 or xmin > self.side or ymin > self.side:
            return np.empty(0, dtype=np.int64)
        x0, x1 = self._cell_of(xmin), self._cell_of(xmax)
        y0, y1 = self._cell_of(ymin), self._cell_of(ymax)
        chunks = []
        for row in range(int(y0), int(y1) + 1):
            first = row * self.cells_per_row + int(x0)
            last = row * self.cells_per_row + int(x1)
            chunks.append(self._order[self._starts[first]:self._starts[last + 1]])
        if not chunks:
            return np.empty(0, dtype=np.int64)
        cand = np.concatenate(chunks)
        pts = self.points[cand]
        keep = (pts[:, 0] >= xmin) & (pts[:, 0] <= xmax) & (pts[:, 1] >= ymin) & (pts[:, 1] <= ymax)
        return np.sort(cand[keep])

    def query_disc(self, cx: float, cy: float, radius: float, strict: bool = True) -> np.ndarray:
        """Indices of points inside the disc (open when strict, with GEOM_TOL slack)."""
        cand = self.query(cx - radius, cy - radius, cx + radius, cy + radius)
        if len(cand) == 0:
            return cand
        d2 = np.sum((self.points[cand] - (cx, cy)) ** 2, axis=1)
        limit = radius * radius
        keep = d2 < limit * (1.0 - GEOM_TOL) if strict else d2 <= limit
        return cand[keep]


def grid_index(config: PointConfig, cell_side: Optional[float] = None) -> GridIndex:
    """Build a grid index over a configuration (cell side 1 by default)."""
    return GridIndex(config.points, config.window.side, 1.0 if cell_side is None else cell_side)
