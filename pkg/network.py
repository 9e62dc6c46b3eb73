"""Network model - vertices with positions and kinds, undirected edges with lengths."""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix

from geometry import PointConfig
from road_errors import InvalidParameterError

logger = logging.getLogger(__name__)


class VertexKind(str, Enum):
    """Role of a vertex in a network."""
    CITY = "city"
    JUNCTION = "junction"
    BOUNDARY_ANCHOR = "boundary-anchor"


@dataclass(frozen=True)
class FamilyTag:
    """Network family label with its parameters."""
    label: str
    params: dict = field(default_factory=dict)

    def describe(self) -> str:
        if not self.params:
            return self.label
        inner = ",".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.label}({inner})"

    def to_dict(self) -> dict:
        return {"label": self.label, "params": dict(sorted(self.params.items()))}


def normalize_edges(pairs) -> np.ndarray:
    """Canonical edge array: u < v, no self-loops, no duplicates, lexicographic order."""
    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if len(arr) == 0:
        return np.empty((0, 2), dtype=np.int64)
    arr = np.sort(arr, axis=1)
    arr = arr[arr[:, 0] != arr[:, 1]]
    return np.unique(arr, axis=0)


class Network:
    """Immutable geometric graph over a point configuration.

    Vertices 0..n-1 are the cities in configuration order; junctions and
    boundary anchors added by planarization or line overlays follow.
    """

    def __init__(
        self,
        config: PointConfig,
        edges,
        family: FamilyTag,
        extra_positions: Optional[np.ndarray] = None,
        extra_kinds: Optional[Iterable[VertexKind]] = None,
    ):
        self.config = config
        self.family = family

        extra = np.zeros((0, 2)) if extra_positions is None else np.asarray(extra_positions, dtype=float).reshape(-1, 2)
        kinds = [VertexKind.CITY] * config.n + list(extra_kinds or [])
        if len(kinds) != config.n + len(extra):
            raise InvalidParameterError("extra_kinds", "one kind per extra vertex is required")
        if any(k == VertexKind.CITY for k in kinds[config.n:]):
            raise InvalidParameterError("extra_kinds", "extra vertices cannot be cities")

        positions = np.vstack([config.points, extra]) if len(extra) else np.array(config.points)
        positions.setflags(write=False)
        self.positions = positions
        self.kinds = tuple(kinds)

        edges = normalize_edges(edges)
        if len(edges) and (edges.min() < 0 or edges.max() >= len(positions)):
            raise InvalidParameterError("edges", "edge endpoint out of range")
        edges.setflags(write=False)
        self.edges = edges
        diff = positions[edges[:, 1]] - positions[edges[:, 0]] if len(edges) else np.zeros((0, 2))
        lengths = np.hypot(diff[:, 0], diff[:, 1])
        lengths.setflags(write=False)
        self.lengths = lengths

    # ---- sizes ----

    @property
    def n_cities(self) -> int:
        return self.config.n

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_length(self) -> float:
        return float(np.sum(self.lengths))

    def city_id(self, vertex: int) -> Optional[int]:
        return vertex if vertex < self.config.n else None

    # ---- adjacency ----

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.bincount(self.edges.ravel(), minlength=self.n_vertices)
        deg.setflags(write=False)
        return deg

    @cached_property
    def adjacency(self) -> csr_matrix:
        """Symmetric sparse matrix of edge lengths."""
        nv = self.n_vertices
        if self.n_edges == 0:
            return csr_matrix((nv, nv))
        rows = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        cols = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        data = np.concatenate([self.lengths, self.lengths])
        return csr_matrix((data, (rows, cols)), shape=(nv, nv))

    def neighbors(self, vertex: int) -> np.ndarray:
        adj = self.adjacency
        return adj.indices[adj.indptr[vertex]:adj.indptr[vertex + 1]]

    def city_edge_set(self) -> set[tuple[int, int]]:
        """Edges joining two cities, as (i, j) city-id pairs with i < j."""
        n = self.config.n
        mask = (self.edges[:, 0] < n) & (self.edges[:, 1] < n)
        return {(int(u), int(v)) for u, v in self.edges[mask]}

    def has_edge(self, u: int, v: int) -> bool:
        a, b = (u, v) if u < v else (v, u)
        return (a, b) in self._edge_lookup

    @cached_property
    def _edge_lookup(self) -> frozenset:
        return frozenset((int(u), int(v)) for u, v in self.edges)

    def to_dict(self) -> dict:
        """Manifest entry describing this network."""
        return {
            "family": self.family.to_dict(),
            "seed": self.config.seed,
            "source_config_hash": self.config.config_hash(),
            "n_cities": self.n_cities,
            "n_vertices": self.n_vertices,
            "n_edges": self.n_edges,
        }

    def __repr__(self) -> str:
        return f"Network({self.family.describe()}, cities={self.n_cities}, edges={self.n_edges})"
