"""Hammersley network - edges traced by frogs of Hammersley's process.

Cities are read as a space-time point process: x is space, y is time.
Sweeping upward in time, each city calls the nearest frog on one side,
which jumps onto the city. An edge joins the city to the frog's previous
landing city. One pass uses leftward-jumping frogs, the other
rightward-jumping frogs; the network is the union of both edge sets.

Inside the window each pass is the stationary process with sources and
sinks: rate-1 Poisson frogs on the bottom edge at time 0, and rate-1
Poisson sink times on the edge the frogs drift towards. At a sink time
the frog nearest that edge leaves the window. A city with no frog on the
calling side receives a frog entering through the opposite edge.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate

from geometry import GEOM_TOL, PointConfig, make_rng
from network import FamilyTag, Network
from road_errors import GeneralPositionError

logger = logging.getLogger(__name__)

INITIAL_MARKER = -1
# Truncation of the positive quadrant for the mean edge integral.
QUADRATURE_CUTOFF = 60.0


class FrogDirection(str, Enum):
    LEFTWARD = "leftward"
    RIGHTWARD = "rightward"


@dataclass
class FrogTape:
    """Ordered frogs of one pass.

    Frogs are stored by sweep key: the position for leftward frogs and the
    negated position for rightward frogs, so in both passes the responsible
    frog is the one with the smallest key above the city's key, and the
    frog nearest the exit edge is the one with the smallest key.
    """

    direction: FrogDirection
    keys: list[float] = field(default_factory=list)
    last: list[int] = field(default_factory=list)

    @classmethod
    def initial(cls, direction: FrogDirection, positions: np.ndarray) -> "FrogTape":
        sign = 1.0 if direction == FrogDirection.LEFTWARD else -1.0
        keys = sorted(float(sign * p) for p in positions)
        return cls(direction, keys, [INITIAL_MARKER] * len(keys))

    def _key(self, x: float) -> float:
        return x if self.direction == FrogDirection.LEFTWARD else -x

    def positions(self) -> np.ndarray:
        sign = 1.0 if self.direction == FrogDirection.LEFTWARD else -1.0
        return sign * np.array(self.keys)

    def jump(self, x: float, city: int) -> int:
        """Move the responsible frog onto the city at x.

        Returns the frog's previous landing city, or INITIAL_MARKER when the
        frog had not landed yet or entered through the window edge.
        """
        key = self._key(x)
        k = bisect.bisect_right(self.keys, key)
        if k == len(self.keys):
            # no frog on that side: one enters from the window edge
            self.keys.append(key)
            self.last.append(city)
            return INITIAL_MARKER
        previous = self.last[k]
        self.keys[k] = key
        self.last[k] = city
        return previous

    def exit(self) -> Optional[int]:
        """Remove the frog nearest the exit edge; returns its last city, None if the tape is empty."""
        if not self.keys:
            return None
        self.keys.pop(0)
        return self.last.pop(0)

    def __len__(self) -> int:
        return len(self.keys)


def _sweep_order(config: PointConfig) -> np.ndarray:
    order = np.argsort(config.points[:, 1], kind="stable")
    times = config.points[order, 1]
    if len(times) > 1 and np.any(np.diff(times) <= GEOM_TOL):
        raise GeneralPositionError("two cities share a sweep time (y coordinate)")
    return order


def sweep_tape(config: PointConfig, tape: FrogTape, sinks: Optional[np.ndarray] = None) -> list[tuple[int, int]]:
    """Sweep the cities upward in time through tape; the tape holds the final frogs afterwards.

    Args:
        config: Cities; y is time and x is space
        tape: Frogs at time 0
        sinks: Times at which the frog nearest the exit edge leaves (none if omitted)
    """
    exits = np.sort(np.asarray([] if sinks is None else sinks, dtype=float))
    next_exit = 0
    edges = []
    for city in _sweep_order(config):
        x, t = config.points[city]
        while next_exit < len(exits) and exits[next_exit] < t:
            tape.exit()
            next_exit += 1
        previous = tape.jump(float(x), int(city))
        if previous != INITIAL_MARKER:
            edges.append((previous, int(city)))
    return edges


def run_frog_pass(config: PointConfig, direction: FrogDirection, initial: np.ndarray,
                  sinks: Optional[np.ndarray] = None) -> list[tuple[int, int]]:
    """Run one frog pass from initial frog positions and return its edges (city pairs)."""
    return sweep_tape(config, FrogTape.initial(direction, initial), sinks)


def initial_frogs(side: float, seed: int, sub_seed: int) -> np.ndarray:
    """Rate-1 Poisson frog positions on [0, side] at time 0."""
    rng = make_rng(seed, "hammersley-frogs", replicate=sub_seed)
    count = int(rng.poisson(side))
    return np.sort(rng.uniform(0.0, side, size=count))


def sink_times(side: float, seed: int, sub_seed: int) -> np.ndarray:
    """Rate-1 Poisson exit times on [0, side] for the edge the frogs drift towards."""
    rng = make_rng(seed, "hammersley-sinks", replicate=sub_seed)
    count = int(rng.poisson(side))
    return np.sort(rng.uniform(0.0, side, size=count))


def build_hammersley(config: PointConfig, seed: int) -> Network:
    """Hammersley network from leftward (sub-seed 1) and rightward (sub-seed 2) passes."""
    side = config.window.side
    left = run_frog_pass(config, FrogDirection.LEFTWARD, initial_frogs(side, seed, 1), sink_times(side, seed, 1))
    right = run_frog_pass(config, FrogDirection.RIGHTWARD, initial_frogs(side, seed, 2), sink_times(side, seed, 2))
    logger.debug("hammersley passes: %d leftward edges, %d rightward edges", len(left), len(right))
    return Network(config, left + right, FamilyTag("hammersley", {"frog_seed": int(seed)}))


def hammersley_mean_edge() -> float:
    """Mean edge length: integral of sqrt(x^2+y^2) e^(-x-y) over the positive quadrant."""
    value, _ = integrate.dblquad(
        lambda y, x: math.hypot(x, y) * math.exp(-x - y),
        0.0, QUADRATURE_CUTOFF, 0.0, QUADRATURE_CUTOFF,
        epsabs=1e-10, epsrel=1e-10,
    )
    return value


def hammersley_mean_edge_closed_form() -> float:
    """1 + ln(1 + sqrt 2) / sqrt 2, the exact value of the mean edge integral."""
    return 1.0 + math.log(1.0 + math.sqrt(2.0)) / math.sqrt(2.0)


def quadrant_counts(net: Network, city: int) -> dict[str, int]:
    """Number of edges of a city falling in each open quadrant (NE, NW, SE, SW)."""
    counts = {"NE": 0, "NW": 0, "SE": 0, "SW": 0}
    x, y = net.positions[city]
    for other in net.neighbors(city):
        dx, dy = net.positions[other] - (x, y)
        counts[("N" if dy > 0 else "S") + ("E" if dx > 0 else "W")] += 1
    return counts
