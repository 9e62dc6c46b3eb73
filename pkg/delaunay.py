"""Incremental Delaunay triangulation (Bowyer-Watson).

Points are inserted in Hilbert-curve order into a triangulation seeded
with a very large super-triangle. Each insertion locates the containing
triangle by a visibility walk, grows the cavity of triangles whose
circumcircle strictly contains the new point and re-triangulates the
cavity as a fan. Orientation and in-circle signs come from the filtered
exact predicates in ``geometry``.
"""

import logging

import numpy as np

from geometry import incircle, orient2d
from road_errors import DegenerateConfigurationError, InvalidParameterError

logger = logging.getLogger(__name__)

SUPER_TRIANGLE_SCALE = 1e12
HILBERT_BITS = 16
METHODS = ("bowyer-watson", "scipy")


def hilbert_order(xy: np.ndarray, bits: int = HILBERT_BITS) -> np.ndarray:
    """Permutation sorting points along a Hilbert curve over their bounding box."""
    xy = np.asarray(xy, dtype=float)
    side = 1 << bits
    lo = xy.min(axis=0)
    span = max(float(np.max(xy.max(axis=0) - lo)), 1e-300)
    grid = np.clip(((xy - lo) / span * (side - 1)).astype(np.int64), 0, side - 1)
    x, y = grid[:, 0].copy(), grid[:, 1].copy()
    d = np.zeros(len(xy), dtype=np.int64)
    s = side >> 1
    while s > 0:
        rx = ((x & s) > 0).astype(np.int64)
        ry = ((y & s) > 0).astype(np.int64)
        d += s * s * ((3 * rx) ^ ry)
        flip = (ry == 0) & (rx == 1)
        x = np.where(flip, side - 1 - x, x)
        y = np.where(flip, side - 1 - y, y)
        swap = ry == 0
        x, y = np.where(swap, y, x), np.where(swap, x, y)
        s >>= 1
    return np.argsort(d, kind="stable")


def check_not_collinear(xy: np.ndarray) -> None:
    """Raise DegenerateConfigurationError when every point lies on one line."""
    a = xy[0]
    far = int(np.argmax(np.sum((xy - a) ** 2, axis=1)))
    b = xy[far]
    if far == 0:
        raise DegenerateConfigurationError("all points coincide")
    cross = (b[0] - a[0]) * (xy[:, 1] - a[1]) - (b[1] - a[1]) * (xy[:, 0] - a[0])
    order = np.argsort(-np.abs(cross), kind="stable")
    for k in order:
        if orient2d(a, b, xy[k]) != 0:
            return
    raise DegenerateConfigurationError("all points are collinear")


class _Triangulation:
    """Mutable triangle mesh used during insertion.

    Triangle t has counterclockwise vertices verts[t] and neighbors
    nbrs[t], where nbrs[t][k] lies across the edge opposite verts[t][k]
    (-1 on the outer boundary).
    """

    def __init__(self, pts: list):
        self.pts = pts
        self.verts: list[list[int]] = []
        self.nbrs: list[list[int]] = []
        self.alive: list[bool] = []
        self.last = 0

    def add(self, a: int, b: int, c: int) -> int:
        self.verts.append([a, b, c])
        self.nbrs.append([-1, -1, -1])
        self.alive.append(True)
        return len(self.verts) - 1

    def locate(self, p) -> int:
        """Visibility walk from the last created triangle to one containing p."""
        t = self.last if self.alive[self.last] else self.alive.index(True)
        pts = self.pts
        rot = 0
        for _ in range(4 * len(self.verts) + 16):
            v = self.verts[t]
            moved = False
            for j in range(3):
                k = (j + rot) % 3
                a, b = pts[v[(k + 1) % 3]], pts[v[(k + 2) % 3]]
                if orient2d(a, b, p) < 0:
                    nxt = self.nbrs[t][k]
                    if nxt >= 0:
                        t = nxt
                        moved = True
                        break
            if not moved:
                return t
            rot = (rot + 1) % 3
        return self._locate_linear(p)

    def _locate_linear(self, p) -> int:
        logger.debug("visibility walk did not converge, scanning")
        pts = self.pts
        for t, v in enumerate(self.verts):
            if not self.alive[t]:
                continue
            if all(orient2d(pts[v[(k + 1) % 3]], pts[v[(k + 2) % 3]], p) >= 0 for k in range(3)):
                return t
        raise DegenerateConfigurationError("point outside the super-triangle")

    def insert(self, idx: int) -> None:
        pts = self.pts
        p = pts[idx]
        start = self.locate(p)

        bad = {start}
        stack = [start]
        while stack:
            t = stack.pop()
            for nb in self.nbrs[t]:
                if nb < 0 or nb in bad:
                    continue
                a, b, c = self.verts[nb]
                if incircle(pts[a], pts[b], pts[c], p) > 0:
                    bad.add(nb)
                    stack.append(nb)

        starts: dict[int, int] = {}
        ends: dict[int, int] = {}
        created = []
        for t in sorted(bad):
            v = self.verts[t]
            for k in range(3):
                outside = self.nbrs[t][k]
                if outside in bad:
                    continue
                a, b = v[(k + 1) % 3], v[(k + 2) % 3]
                new = self.add(a, b, idx)
                self.nbrs[new][2] = outside
                if outside >= 0:
                    back = self.nbrs[outside]
                    back[back.index(t)] = new
                starts[a] = new
                ends[b] = new
                created.append((new, a, b))
        for new, a, b in created:
            self.nbrs[new][0] = starts[b]
            self.nbrs[new][1] = ends[a]
        for t in bad:
            self.alive[t] = False
        self.last = created[-1][0]

    def triangles(self, n_real: int) -> np.ndarray:
        out = [v for t, v in enumerate(self.verts) if self.alive[t] and max(v) < n_real]
        return np.array(out, dtype=np.int64).reshape(-1, 3)


def _bowyer_watson(xy: np.ndarray) -> np.ndarray:
    n = len(xy)
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    cx, cy = (lo + hi) / 2.0
    m = SUPER_TRIANGLE_SCALE * max(float(np.max(hi - lo)), 1.0)
    pts = [(float(x), float(y)) for x, y in xy]
    pts += [(cx - m, cy - m), (cx + m, cy - m), (cx, cy + m)]

    mesh = _Triangulation(pts)
    mesh.add(n, n + 1, n + 2)
    for idx in hilbert_order(xy):
        mesh.insert(int(idx))
    return mesh.triangles(n)


def _scipy_triangles(xy: np.ndarray) -> np.ndarray:
    from scipy.spatial import Delaunay, QhullError

    try:
        return np.asarray(Delaunay(xy).simplices, dtype=np.int64)
    except QhullError as exc:
        raise DegenerateConfigurationError(str(exc).splitlines()[0]) from exc


def delaunay_triangles(xy: np.ndarray, method: str = "bowyer-watson") -> np.ndarray:
    """Triangles (index triples) of the Delaunay triangulation of xy.

    Args:
        xy: (n, 2) array of distinct points, n >= 3
        method: "bowyer-watson" (default) or "scipy" (Qhull cross-check)

    Raises:
        DegenerateConfigurationError: when all points are collinear
    """
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    if method not in METHODS:
        raise InvalidParameterError("method", f"expected one of {METHODS}, got {method!r}")
    if len(xy) < 3:
        raise InvalidParameterError("n", f"Delaunay triangulation needs at least 3 points, got {len(xy)}")
    check_not_collinear(xy)
    if method == "scipy":
        return _scipy_triangles(xy)
    return _bowyer_watson(xy)


def triangle_edges(triangles: np.ndarray) -> np.ndarray:
    """Undirected edges (u < v, unique, sorted) of a triangle list."""
    if len(triangles) == 0:
        return np.empty((0, 2), dtype=np.int64)
    e = np.vstack([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def delaunay_edges(xy: np.ndarray, method: str = "bowyer-watson") -> np.ndarray:
    return triangle_edges(delaunay_triangles(xy, method))
