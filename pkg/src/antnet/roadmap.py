"""City roadmaps: construction, generation, I/O, exact shortest paths and
environment features.

A roadmap is an undirected planar graph whose edge costs are the Euclidean
distances between the endpoint cities.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

# Features are reported as cities per this many square units.
DENSITY_AREA = 200.0


class RoadmapError(ValueError):
    """Raised for invalid roadmap data or queries."""


class UnreachableError(RoadmapError):
    """Raised when no path joins the requested cities."""


@dataclass(frozen=True)
class City:
    id: int
    x: float
    y: float


@dataclass(frozen=True)
class EnvFeatures:
    node_density: float
    smallest_arc_stddev: float


@dataclass(frozen=True)
class Roadmap:
    """Immutable weighted undirected graph of cities.

    Edges are stored normalised as ``(u, v)`` with ``u < v`` and sorted, so
    edge ids are stable for a given edge set regardless of input order.
    """

    cities: tuple[City, ...]
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        n = len(self.cities)
        if n < 2:
            raise RoadmapError("cities: a roadmap needs at least 2 cities")
        for i, c in enumerate(self.cities):
            if c.id != i:
                raise RoadmapError(f"cities[{i}].id: expected {i}, got {c.id}")
            if not (math.isfinite(c.x) and math.isfinite(c.y)):
                raise RoadmapError(f"cities[{i}]: coordinates must be finite")
        seen = set()
        normalised = []
        for k, (u, v) in enumerate(self.edges):
            if not (0 <= u < n and 0 <= v < n):
                raise RoadmapError(f"edges[{k}]: city id out of range in ({u}, {v})")
            if u == v:
                raise RoadmapError(f"edges[{k}]: self-loop on city {u}")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise RoadmapError(f"edges[{k}]: duplicate edge {key}")
            seen.add(key)
            normalised.append(key)
        normalised.sort()
        object.__setattr__(self, "edges", tuple(normalised))
        for k, length in enumerate(self.lengths):
            if not length > 0:
                raise RoadmapError(f"edges[{k}]: edge {self.edges[k]} has zero length")
        if not _is_connected(n, self.edges):
            raise RoadmapError("edges: roadmap is not connected")

    @property
    def n_cities(self) -> int:
        return len(self.cities)

    @cached_property
    def coords(self) -> np.ndarray:
        return np.array([(c.x, c.y) for c in self.cities], dtype=float)

    @cached_property
    def lengths(self) -> tuple[float, ...]:
        cs = self.cities
        return tuple(math.hypot(cs[u].x - cs[v].x, cs[u].y - cs[v].y) for u, v in self.edges)

    @cached_property
    def edge_ids(self) -> dict[tuple[int, int], int]:
        return {e: k for k, e in enumerate(self.edges)}

    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per city, ``(neighbour, edge_id)`` pairs sorted by neighbour id."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.cities]
        for k, (u, v) in enumerate(self.edges):
            adj[u].append((v, k))
            adj[v].append((u, k))
        return tuple(tuple(sorted(a)) for a in adj)

    def edge_id(self, u: int, v: int) -> int:
        try:
            return self.edge_ids[(min(u, v), max(u, v))]
        except KeyError:
            raise RoadmapError(f"no edge between {u} and {v}") from None

    def edge_length(self, u: int, v: int) -> float:
        return self.lengths[self.edge_id(u, v)]

    def distance(self, i: int, j: int) -> float:
        """Straight-line distance between two cities (not necessarily adjacent)."""
        a, b = self.cities[i], self.cities[j]
        return math.hypot(a.x - b.x, a.y - b.y)

    def path_length(self, nodes) -> float:
        return sum(self.edge_length(a, b) for a, b in zip(nodes, nodes[1:]))

    def degree(self, i: int) -> int:
        return len(self.adjacency[i])

    def to_dict(self) -> dict:
        return {
            "cities": [{"id": c.id, "x": c.x, "y": c.y} for c in self.cities],
            "edges": [list(e) for e in self.edges],
        }

    @classmethod
    def from_dict(cls, data) -> Roadmap:
        if not isinstance(data, dict):
            raise RoadmapError("top level: expected an object with 'cities' and 'edges'")
        for key in ("cities", "edges"):
            if not isinstance(data.get(key), list):
                raise RoadmapError(f"{key}: expected a list")
        cities = []
        for i, c in enumerate(data["cities"]):
            if not isinstance(c, dict):
                raise RoadmapError(f"cities[{i}]: expected an object")
            for f in ("id", "x", "y"):
                if f not in c:
                    raise RoadmapError(f"cities[{i}].{f}: missing")
            if not isinstance(c["id"], int) or isinstance(c["id"], bool):
                raise RoadmapError(f"cities[{i}].id: expected an integer")
            for f in ("x", "y"):
                if not isinstance(c[f], (int, float)) or isinstance(c[f], bool):
                    raise RoadmapError(f"cities[{i}].{f}: expected a number")
            cities.append(City(c["id"], float(c["x"]), float(c["y"])))
        cities.sort(key=lambda c: c.id)
        ids = [c.id for c in cities]
        if ids != list(range(len(cities))):
            raise RoadmapError("cities: ids must be unique and dense 0..N-1")
        edges = []
        for k, e in enumerate(data["edges"]):
            if (
                not isinstance(e, list)
                or len(e) != 2
                or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)
            ):
                raise RoadmapError(f"edges[{k}]: expected a pair of integer city ids")
            edges.append((e[0], e[1]))
        return cls(tuple(cities), tuple(edges))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path) -> Roadmap:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise RoadmapError(f"line {exc.lineno}: invalid JSON ({exc.msg})") from None
        return cls.from_dict(data)


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def _is_connected(n, edges) -> bool:
    uf = _UnionFind(n)
    components = n
    for u, v in edges:
        if uf.union(u, v):
            components -= 1
    return components == 1


def generate_roadmap(
    n_cities: int,
    area: tuple[float, float] = (200.0, 200.0),
    connectivity_degree: int = 4,
    seed: int | None = 0,
) -> Roadmap:
    """Random connected roadmap.

    Cities are uniform in ``[0, width] x [0, height]``. Each city is linked to
    its ``connectivity_degree`` nearest neighbours (capped at ``n - 1``), then
    the shortest edge between two distinct components is added repeatedly
    until the graph is connected.
    """
    if n_cities < 2:
        raise RoadmapError(f"n_cities must be >= 2, got {n_cities}")
    width, height = area
    if not (width > 0 and height > 0):
        raise RoadmapError(f"area dimensions must be positive, got {area}")
    if connectivity_degree < 1:
        raise RoadmapError(f"connectivity_degree must be >= 1, got {connectivity_degree}")

    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, size=(n_cities, 2)) * np.array([width, height])
    diff = pts[:, None, :] - pts[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)

    k = min(connectivity_degree, n_cities - 1)
    # stable sort keeps ties deterministic
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    edges = set()
    for i in range(n_cities):
        for j in nearest[i]:
            j = int(j)
            edges.add((min(i, j), max(i, j)))

    uf = _UnionFind(n_cities)
    for u, v in edges:
        uf.union(u, v)
    while True:
        roots = np.array([uf.find(i) for i in range(n_cities)])
        if np.all(roots == roots[0]):
            break
        cross = roots[:, None] != roots[None, :]
        masked = np.where(cross, dist, np.inf)
        flat = int(np.argmin(masked))
        u, v = divmod(flat, n_cities)
        edges.add((min(u, v), max(u, v)))
        uf.union(u, v)

    cities = tuple(City(i, float(x), float(y)) for i, (x, y) in enumerate(pts))
    return Roadmap(cities, tuple(sorted(edges)))


def corner_endpoints(roadmap: Roadmap) -> tuple[int, int]:
    """Default source/destination: the cities nearest the lower-left and
    upper-right corners (minimum and maximum of ``x + y``)."""
    s = roadmap.coords.sum(axis=1)
    source, dest = int(np.argmin(s)), int(np.argmax(s))
    if source == dest:
        dest = (source + 1) % roadmap.n_cities
    return source, dest


def dijkstra(roadmap: Roadmap, source: int, dest: int) -> tuple[list[int], float]:
    """Exact minimum-length path from ``source`` to ``dest``."""
    n = roadmap.n_cities
    for name, v in (("source", source), ("dest", dest)):
        if not 0 <= v < n:
            raise RoadmapError(f"{name} {v} is not a valid city id")
    if source == dest:
        raise RoadmapError("source and dest must differ")

    lengths = roadmap.lengths
    best = [math.inf] * n
    prev = [-1] * n
    best[source] = 0.0
    heap = [(0.0, source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > best[u]:
            continue
        if u == dest:
            break
        for v, e in roadmap.adjacency[u]:
            nd = d + lengths[e]
            if nd < best[v]:
                best[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if math.isinf(best[dest]):
        raise UnreachableError(f"city {dest} is unreachable from {source}")
    path = [dest]
    while path[-1] != source:
        path.append(prev[path[-1]])
    path.reverse()
    return path, best[dest]


def extract_features(roadmap: Roadmap) -> EnvFeatures:
    """Node density (per 200 square units of bounding box) and the population
    standard deviation of each city's shortest incident edge."""
    xy = roadmap.coords
    w, h = np.ptp(xy[:, 0]), np.ptp(xy[:, 1])
    bbox = w * h
    if not bbox > 0:
        raise RoadmapError("degenerate bounding box: cities are collinear or coincident")
    density = roadmap.n_cities * DENSITY_AREA / bbox
    lengths = roadmap.lengths
    smallest = [min(lengths[e] for _, e in adj) for adj in roadmap.adjacency]
    return EnvFeatures(float(density), float(np.std(smallest)))
