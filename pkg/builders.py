"""Network builders - every family over a PointConfig, plus planarization and line overlays.

All builders are pure functions of their inputs and return an immutable
``Network`` whose vertices 0..n-1 are the configuration's cities.
"""

import logging
import math
from collections import defaultdict
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra, floyd_warshall, minimum_spanning_tree
from scipy.spatial import cKDTree

from delaunay import delaunay_edges
from geometry import (
    GEOM_TOL,
    GridIndex,
    PointConfig,
    crossing_params,
    grid_index,
    make_rng,
    segments_cross,
)
from network import FamilyTag, Network, VertexKind, normalize_edges
from road_errors import DegenerateConfigurationError, GeneralPositionError, InvalidParameterError
from templates import Template, beta_template, canonical_coords

logger = logging.getLogger(__name__)

# Pair sources handled per vectorized block in the small-beta scan.
PAIR_SCAN_BLOCK = 256
# Sources per block when comparing G_p costs against shortest paths.
GP_SOURCE_BLOCK = 512
SHORTEST_PATH_RTOL = 1e-12


def complete_edges(n: int) -> np.ndarray:
    if n < 2:
        return np.empty((0, 2), dtype=np.int64)
    i, j = np.triu_indices(n, k=1)
    return np.column_stack([i, j]).astype(np.int64)


def _edge_lengths(xy: np.ndarray, edges: np.ndarray) -> np.ndarray:
    diff = xy[edges[:, 1]] - xy[edges[:, 0]]
    return np.hypot(diff[:, 0], diff[:, 1])


def _delaunay_or_complete(config: PointConfig) -> np.ndarray:
    """Delaunay edges, or every pair when there is no triangulation (n < 3 or collinear)."""
    if config.n < 3:
        return complete_edges(config.n)
    try:
        return delaunay_edges(config.points)
    except DegenerateConfigurationError:
        return complete_edges(config.n)


# ==================== Neighborhood families ====================

def build_geometric(config: PointConfig, c: float) -> Network:
    """Geometric graph: edge iff d(i, j) <= c."""
    if not c > 0:
        raise InvalidParameterError("c", f"must be positive, got {c}")
    if config.n < 2:
        edges = np.empty((0, 2), dtype=np.int64)
    else:
        edges = cKDTree(config.points).query_pairs(c, output_type="ndarray")
    return Network(config, edges, FamilyTag("geometric", {"c": float(c)}))


def build_k_neighbor(config: PointConfig, k: int) -> Network:
    """Symmetrized K-nearest-neighbor graph."""
    if int(k) != k or k < 1:
        raise InvalidParameterError("K", f"must be a positive integer, got {k}")
    if k >= config.n:
        raise InvalidParameterError("K", f"must be smaller than n={config.n}, got {k}")
    k = int(k)
    _, idx = cKDTree(config.points).query(config.points, k=k + 1)
    src = np.repeat(np.arange(config.n), k)
    edges = np.column_stack([src, idx[:, 1:].ravel()])
    return Network(config, edges, FamilyTag("k-neighbor", {"K": k}))


# ==================== Nested families ====================

def build_mst(config: PointConfig) -> Network:
    """Euclidean minimum spanning tree over the Delaunay edges."""
    if config.n < 1:
        raise InvalidParameterError("n", "MST needs at least one city")
    candidates = _delaunay_or_complete(config)
    tree = []
    if len(candidates):
        lengths = _edge_lengths(config.points, candidates)
        sorted_lengths = np.sort(lengths)
        ties = np.nonzero(np.diff(sorted_lengths) <= GEOM_TOL * np.maximum(sorted_lengths[1:], 1.0))[0]
        if len(ties):
            raise GeneralPositionError(f"{len(ties)} tied edge lengths among MST candidates")
        if sorted_lengths[0] <= 0.0:
            raise GeneralPositionError("coincident cities among MST candidates")
        graph = csr_matrix((lengths, (candidates[:, 0], candidates[:, 1])), shape=(config.n, config.n))
        tree = np.column_stack(minimum_spanning_tree(graph).nonzero())
    return Network(config, tree, FamilyTag("mst"))


def build_delaunay(config: PointConfig, method: str = "bowyer-watson") -> Network:
    """Delaunay triangulation edges.

    Raises:
        DegenerateConfigurationError: all cities collinear
    """
    edges = delaunay_edges(config.points, method=method)
    return Network(config, edges, FamilyTag("delaunay"))


def _template_box(t: Template, x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """World-frame bounding box of A(x, y)."""
    d = y - x
    length = math.hypot(d[0], d[1])
    ux, uy = abs(d[0]) / length, abs(d[1]) / length
    hx = (0.5 * ux + t.half_height * uy) * length
    hy = (0.5 * uy + t.half_height * ux) * length
    mx, my = (x + y) / 2.0
    return mx - hx, my - hy, mx + hx, my + hy


def _is_empty(t: Template, index: GridIndex, xy: np.ndarray, i: int, j: int) -> bool:
    """True iff A(x_i, x_j) contains no city other than i and j."""
    cand = index.query(*_template_box(t, xy[i], xy[j]))
    cand = cand[(cand != i) & (cand != j)]
    if len(cand) == 0:
        return True
    a, b = canonical_coords(xy[i], xy[j], xy[cand])
    return not bool(np.any(t.contains_canonical(a, b)))


def _proximity_edges_large_beta(config: PointConfig, t: Template) -> list:
    # A_beta contains the Gabriel disc for beta >= 1, so candidates are Delaunay edges.
    xy = config.points
    index = grid_index(config)
    return [(int(i), int(j)) for i, j in _delaunay_or_complete(config) if _is_empty(t, index, xy, i, j)]


def _proximity_edges_small_beta(config: PointConfig, t: Template) -> list:
    """Full pair scan. A disc of radius inner_radius*d about the midpoint lies
    inside A(x, y), so a city there blocks the pair without the full test.
    """
    xy = config.points
    n = config.n
    tree = cKDTree(xy)
    edges = []
    for lo in range(0, n - 1, PAIR_SCAN_BLOCK):
        src_parts, dst_parts = [], []
        for i in range(lo, min(lo + PAIR_SCAN_BLOCK, n - 1)):
            dst = np.arange(i + 1, n)
            src_parts.append(np.full(len(dst), i))
            dst_parts.append(dst)
        src = np.concatenate(src_parts)
        dst = np.concatenate(dst_parts)
        mid = (xy[src] + xy[dst]) / 2.0
        dist = np.hypot(*(xy[dst] - xy[src]).T)
        nearest, _ = tree.query(mid, k=1)
        open_pairs = np.nonzero(nearest >= t.inner_radius * dist * (1.0 - GEOM_TOL))[0]
        if len(open_pairs) == 0:
            continue
        balls = tree.query_ball_point(mid[open_pairs], dist[open_pairs] / 2.0)
        for k, cand in zip(open_pairs, balls):
            i, j = int(src[k]), int(dst[k])
            cand = np.asarray([c for c in cand if c != i and c != j], dtype=np.int64)
            if len(cand):
                a, b = canonical_coords(xy[i], xy[j], xy[cand])
                if np.any(t.contains_canonical(a, b)):
                    continue
            edges.append((i, j))
    return edges


def build_proximity(config: PointConfig, t: Template) -> Network:
    """Proximity graph: edge (x, y) iff A(x, y) contains no other city.

    beta=1 gives the Gabriel graph and beta=2 the relative neighborhood graph.
    """
    if config.n < 2:
        edges = []
    elif t.beta >= 1.0:
        edges = _proximity_edges_large_beta(config, t)
    else:
        edges = _proximity_edges_small_beta(config, t)
    return Network(config, edges, FamilyTag("beta-skeleton", {"beta": t.beta}))


def build_gabriel(config: PointConfig) -> Network:
    return build_proximity(config, beta_template(1.0))


def build_relative_neighborhood(config: PointConfig) -> Network:
    return build_proximity(config, beta_template(2.0))


# ==================== Powers of edge lengths ====================

def build_gp(config: PointConfig, p: float) -> Network:
    """G_p: edge (i, j) iff the one-step cost d^p is a cheapest route under costs d^p.

    For p >= 2 every cheapest route uses Gabriel (hence Delaunay) edges only,
    so shortest paths run on the Delaunay graph; otherwise on the complete graph.
    """
    if not p >= 1:
        raise InvalidParameterError("p", f"must be >= 1, got {p}")
    p = float(p)
    n = config.n
    xy = config.points
    tag = FamilyTag("gp", {"p": p})
    if n < 2:
        return Network(config, [], tag)

    candidates = _delaunay_or_complete(config) if p >= 2.0 else complete_edges(n)
    if p < 2.0 or len(candidates) == n * (n - 1) // 2:
        diff = xy[:, None, :] - xy[None, :, :]
        cost = np.hypot(diff[..., 0], diff[..., 1]) ** p
        best = floyd_warshall(cost, directed=False)
        cu, cv = candidates[:, 0], candidates[:, 1]
        keep = cost[cu, cv] <= best[cu, cv] * (1.0 + SHORTEST_PATH_RTOL)
        return Network(config, candidates[keep], tag)

    weights = _edge_lengths(xy, candidates) ** p
    graph = csr_matrix((weights, (candidates[:, 0], candidates[:, 1])), shape=(n, n))
    keep = np.zeros(len(candidates), dtype=bool)
    for lo in range(0, n, GP_SOURCE_BLOCK):
        hi = min(lo + GP_SOURCE_BLOCK, n)
        rows = np.nonzero((candidates[:, 0] >= lo) & (candidates[:, 0] < hi))[0]
        if len(rows) == 0:
            continue
        best = dijkstra(graph, directed=False, indices=np.arange(lo, hi))
        sp = best[candidates[rows, 0] - lo, candidates[rows, 1]]
        keep[rows] = weights[rows] <= sp * (1.0 + SHORTEST_PATH_RTOL)
    return Network(config, candidates[keep], tag)


# ==================== Crossings ====================

def _candidate_crossing_pairs(seg_a: np.ndarray, seg_b: np.ndarray, cell: float) -> set[tuple[int, int]]:
    """Edge pairs whose bounding boxes share a grid cell."""
    lo = np.minimum(seg_a, seg_b)
    hi = np.maximum(seg_a, seg_b)
    buckets = defaultdict(list)
    c0 = np.floor(lo / cell).astype(np.int64)
    c1 = np.floor(hi / cell).astype(np.int64)
    for e in range(len(seg_a)):
        for cx in range(c0[e, 0], c1[e, 0] + 1):
            for cy in range(c0[e, 1], c1[e, 1] + 1):
                buckets[(cx, cy)].append(e)
    pairs = set()
    for members in buckets.values():
        for a in range(len(members)):
            ea = members[a]
            for b in range(a + 1, len(members)):
                eb = members[b]
                if (lo[ea, 0] <= hi[eb, 0] and lo[eb, 0] <= hi[ea, 0]
                        and lo[ea, 1] <= hi[eb, 1] and lo[eb, 1] <= hi[ea, 1]):
                    pairs.add((ea, eb) if ea < eb else (eb, ea))
    return pairs


def _split_crossings(
    positions: np.ndarray,
    edges: np.ndarray,
    movable: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Insert a junction at every proper crossing and split the edges there.

    Args:
        positions: Vertex positions
        edges: Edge endpoints
        movable: Optional mask; only crossings involving at least one flagged edge are split

    Returns:
        (new junction positions, new edge array)
    """
    if len(edges) < 2:
        return np.zeros((0, 2)), edges
    seg_a = positions[edges[:, 0]]
    seg_b = positions[edges[:, 1]]
    lengths = np.hypot(*(seg_b - seg_a).T)
    cell = max(float(np.median(lengths)), 1e-9)
    pairs = _candidate_crossing_pairs(seg_a, seg_b, cell)

    cuts = defaultdict(list)
    junctions = []
    base = len(positions)
    for ea, eb in sorted(pairs):
        if movable is not None and not (movable[ea] or movable[eb]):
            continue
        if len({*edges[ea], *edges[eb]}) < 4:
            continue
        p1, p2, p3, p4 = seg_a[ea], seg_b[ea], seg_a[eb], seg_b[eb]
        if not segments_cross(p1, p2, p3, p4):
            continue
        t, u = crossing_params(p1, p2, p3, p4)
        if not (GEOM_TOL < t < 1.0 - GEOM_TOL and GEOM_TOL < u < 1.0 - GEOM_TOL):
            continue
        vid = base + len(junctions)
        junctions.append(p1 + t * (p2 - p1))
        cuts[ea].append((t, vid))
        cuts[eb].append((u, vid))

    if not junctions:
        return np.zeros((0, 2)), edges
    out = []
    for e, (u, v) in enumerate(edges):
        chain = [int(u)] + [vid for _, vid in sorted(cuts.get(e, []))] + [int(v)]
        out.extend(zip(chain[:-1], chain[1:]))
    logger.debug("split %d crossings", len(junctions))
    return np.array(junctions), np.array(out, dtype=np.int64)


def planarize(net: Network) -> Network:
    """Replace every interior edge crossing by a junction splitting both edges."""
    junctions, edges = _split_crossings(net.positions, net.edges)
    if len(junctions) == 0:
        return net
    extras = net.positions[net.n_cities:]
    family = FamilyTag(net.family.label, {**net.family.params, "planarized": True})
    return Network(
        net.config,
        edges,
        family,
        extra_positions=np.vstack([extras, junctions]),
        extra_kinds=list(net.kinds[net.n_cities:]) + [VertexKind.JUNCTION] * len(junctions),
    )


# ==================== Line process overlay ====================

def clip_line_to_window(theta: float, offset: float, side: float) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Chord of the line {q : q.(cos t, sin t) = offset + c.(cos t, sin t)} inside [0, side]^2.

    The offset is measured from the window centre c. Returns None when the
    line misses the window.
    """
    normal = np.array([math.cos(theta), math.sin(theta)])
    direction = np.array([-normal[1], normal[0]])
    foot = np.array([side / 2.0, side / 2.0]) + offset * normal
    lo, hi = -math.inf, math.inf
    for axis in range(2):
        if abs(direction[axis]) < 1e-15:
            if not 0.0 <= foot[axis] <= side:
                return None
            continue
        t0 = (0.0 - foot[axis]) / direction[axis]
        t1 = (side - foot[axis]) / direction[axis]
        lo, hi = max(lo, min(t0, t1)), min(hi, max(t0, t1))
    if hi - lo <= GEOM_TOL:
        return None
    return foot + lo * direction, foot + hi * direction


def sample_line_chords(side: float, intensity: float, seed: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Isotropic Poisson line process clipped to the window.

    Line count ~ Poisson(intensity * 2D) with D the half diagonal; angle
    uniform on [0, pi), signed offset uniform on [-D, D].
    """
    if intensity < 0:
        raise InvalidParameterError("line_intensity", f"must be >= 0, got {intensity}")
    rng = make_rng(seed, "lines")
    half_diag = side * math.sqrt(2.0) / 2.0
    count = int(rng.poisson(intensity * 2.0 * half_diag))
    thetas = rng.uniform(0.0, math.pi, size=count)
    offsets = rng.uniform(-half_diag, half_diag, size=count)
    chords = []
    for theta, offset in zip(thetas, offsets):
        chord = clip_line_to_window(float(theta), float(offset), side)
        if chord is not None:
            chords.append(chord)
    return chords


def overlay_line_process(base: Network, line_intensity: float, seed: int) -> Network:
    """Superimpose a Poisson line process on a network.

    Chord endpoints become boundary anchors. Junctions are inserted where a
    chord crosses a base edge or another chord; crossings between base
    edges are left alone.
    """
    chords = sample_line_chords(base.config.window.side, line_intensity, seed)
    if line_intensity == 0 or not chords:
        return base

    start = base.n_vertices
    anchors = np.array([pt for chord in chords for pt in chord])
    chord_edges = np.array([(start + 2 * k, start + 2 * k + 1) for k in range(len(chords))], dtype=np.int64)
    positions = np.vstack([base.positions, anchors])
    edges = np.vstack([base.edges, chord_edges])
    movable = np.concatenate([np.zeros(base.n_edges, dtype=bool), np.ones(len(chords), dtype=bool)])
    junctions, edges = _split_crossings(positions, edges, movable)

    extra_positions = np.vstack([positions[base.n_cities:], junctions]) if len(junctions) else positions[base.n_cities:]
    extra_kinds = (list(base.kinds[base.n_cities:])
                   + [VertexKind.BOUNDARY_ANCHOR] * len(anchors)
                   + [VertexKind.JUNCTION] * len(junctions))
    family = FamilyTag(f"{base.family.label}+lines",
                       {**base.family.params, "line_intensity": float(line_intensity), "line_seed": int(seed)})
    logger.debug("overlaid %d chords with %d junctions", len(chords), len(junctions))
    return Network(base.config, edges, family, extra_positions=extra_positions, extra_kinds=extra_kinds)


# ==================== Dispatch ====================

FAMILIES = ("geometric", "k-neighbor", "mst", "delaunay", "beta", "gabriel", "rng", "gp", "hammersley")


def build_family(config: PointConfig, family: str, params: Optional[dict] = None, seed: Optional[int] = None) -> Network:
    """Build a network by family name.

    Args:
        config: Point configuration
        family: One of FAMILIES
        params: Family parameters (c, K, beta, p, method)
        seed: Seed for randomized families (Hammersley)
    """
    params = params or {}
    if family == "geometric":
        return build_geometric(config, params["c"])
    if family == "k-neighbor":
        return build_k_neighbor(config, params["K"])
    if family == "mst":
        return build_mst(config)
    if family == "delaunay":
        return build_delaunay(config, params.get("method", "bowyer-watson"))
    if family == "beta":
        return build_proximity(config, beta_template(params["beta"]))
    if family == "gabriel":
        return build_gabriel(config)
    if family == "rng":
        return build_relative_neighborhood(config)
    if family == "gp":
        return build_gp(config, params["p"])
    if family == "hammersley":
        from hammersley import build_hammersley
        if seed is None:
            raise InvalidParameterError("seed", "the Hammersley network needs a seed")
        return build_hammersley(config, seed)
    raise InvalidParameterError("family", f"unknown family {family!r}; expected one of {FAMILIES}")
