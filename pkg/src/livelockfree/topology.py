"""Allowed networks: directed multigraphs with balanced in/out degree.

Edges carry dense integer ids; self-loops model one unit of router
buffering and parallel edges model wider links.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

#: Sentinel for "no directed path".  Deliberately not a number.
UNREACHABLE = None


class TopologyError(ValueError):
    """Raised when a network does not satisfy an operation's precondition."""


@dataclass(frozen=True)
class Edge:
    id: int
    src: int
    dst: int

    @property
    def is_loop(self) -> bool:
        return self.src == self.dst


@dataclass(frozen=True)
class Multigraph:
    vertex_count: int
    edges: tuple[Edge, ...]

    def __post_init__(self):
        if self.vertex_count < 0:
            raise TopologyError("vertex_count must be non-negative")
        for i, e in enumerate(self.edges):
            if e.id != i:
                raise TopologyError(f"edge ids must be dense and ordered, got {e.id} at {i}")
            for end in (e.src, e.dst):
                if not 0 <= end < self.vertex_count:
                    raise TopologyError(f"edge {e.id} endpoint {end} out of range")

    @classmethod
    def from_pairs(cls, vertex_count: int, pairs: Iterable[tuple[int, int]]) -> "Multigraph":
        return cls(vertex_count, tuple(Edge(i, s, d) for i, (s, d) in enumerate(pairs)))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def out_edges(self, v: int) -> list[int]:
        return [e.id for e in self.edges if e.src == v]

    def in_edges(self, v: int) -> list[int]:
        return [e.id for e in self.edges if e.dst == v]

    def out_degree(self, v: int) -> int:
        return sum(1 for e in self.edges if e.src == v)

    def in_degree(self, v: int) -> int:
        return sum(1 for e in self.edges if e.dst == v)

    def active_vertices(self) -> list[int]:
        """Vertices touched by at least one edge."""
        seen = {e.src for e in self.edges} | {e.dst for e in self.edges}
        return sorted(seen)

    def pairs(self) -> list[tuple[int, int]]:
        return [(e.src, e.dst) for e in self.edges]


@dataclass
class ValidationResult:
    ok: bool
    degree_violations: list[tuple[int, int, int]] = field(default_factory=list)
    unreachable_pairs: list[tuple[int, int]] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok

    def describe(self) -> list[str]:
        lines = [f"vertex {v}: in-degree {i} != out-degree {o}" for v, i, o in self.degree_violations]
        lines += [f"vertex {d} unreachable from vertex {s}" for s, d in self.unreachable_pairs]
        return lines


def _adjacency(g: Multigraph) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(g.vertex_count)]
    for e in g.edges:
        if not e.is_loop:
            adj[e.src].append(e.dst)
    return adj


def _bfs(adj: Sequence[Sequence[int]], source: int) -> list[Optional[int]]:
    dist: list[Optional[int]] = [UNREACHABLE] * len(adj)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if dist[w] is UNREACHABLE:
                dist[w] = du
                queue.append(w)
    return dist


def validate_network(g: Multigraph) -> ValidationResult:
    """Check degree balance at every vertex and strong connectivity of the
    non-isolated part of the graph."""
    indeg = [0] * g.vertex_count
    outdeg = [0] * g.vertex_count
    for e in g.edges:
        outdeg[e.src] += 1
        indeg[e.dst] += 1
    degree_violations = [
        (v, indeg[v], outdeg[v]) for v in range(g.vertex_count) if indeg[v] != outdeg[v]
    ]

    active = g.active_vertices()
    adj = _adjacency(g)
    unreachable = []
    for s in active:
        reach = _bfs(adj, s)
        unreachable.extend((s, d) for d in active if reach[d] is UNREACHABLE)

    ok = not degree_violations and not unreachable
    return ValidationResult(ok, degree_violations, unreachable)


@dataclass(frozen=True)
class DistanceTable:
    """All-pairs hop counts; ``dist[u][v]`` is ``UNREACHABLE`` when no path exists."""

    dist: tuple[tuple[Optional[int], ...], ...]

    def __call__(self, u: int, v: int) -> Optional[int]:
        return self.dist[u][v]

    def __len__(self) -> int:
        return len(self.dist)


def shortest_distances(g: Multigraph) -> DistanceTable:
    adj = _adjacency(g)
    return DistanceTable(tuple(tuple(_bfs(adj, s)) for s in range(g.vertex_count)))


def diameter(g: Multigraph, dist: Optional[DistanceTable] = None) -> int:
    """Largest hop count between active vertices.

    Raises TopologyError if some pair of active vertices is disconnected.
    """
    dist = dist or shortest_distances(g)
    active = g.active_vertices()
    k = 0
    for u in active:
        for v in active:
            d = dist.dist[u][v]
            if d is UNREACHABLE:
                raise TopologyError(f"vertex {v} unreachable from {u}")
            k = max(k, d)
    return k


def eulerian_circuit(g: Multigraph) -> list[int]:
    """Closed walk using every edge exactly once, as a list of edge ids.

    Hierholzer's algorithm.  Starts at the lowest vertex with an edge and
    consumes out-edges in ascending id order so the result is reproducible.
    """
    check = validate_network(g)
    if not check:
        raise TopologyError("no Eulerian circuit: " + "; ".join(check.describe()))
    if not g.edges:
        return []

    pending = [g.out_edges(v) for v in range(g.vertex_count)]
    cursor = [0] * g.vertex_count
    start = min(e.src for e in g.edges)

    circuit: list[int] = []
    # stack of (vertex, edge used to get there)
    stack: list[tuple[int, Optional[int]]] = [(start, None)]
    while stack:
        v, via = stack[-1]
        if cursor[v] < len(pending[v]):
            eid = pending[v][cursor[v]]
            cursor[v] += 1
            stack.append((g.edges[eid].dst, eid))
        else:
            stack.pop()
            if via is not None:
                circuit.append(via)
    circuit.reverse()
    return circuit


def is_eulerian_circuit(g: Multigraph, circuit: Sequence[int]) -> bool:
    if sorted(circuit) != list(range(g.edge_count)):
        return False
    n = len(circuit)
    return all(
        g.edges[circuit[i]].dst == g.edges[circuit[(i + 1) % n]].src for i in range(n)
    )


def add_buffer_loops(g: Multigraph, v: int, capacity: int) -> Multigraph:
    if capacity < 0:
        raise TopologyError("capacity must be non-negative")
    if not 0 <= v < g.vertex_count:
        raise TopologyError(f"vertex {v} out of range")
    return Multigraph.from_pairs(g.vertex_count, g.pairs() + [(v, v)] * capacity)


def interpolate_virtual_routers(g: Multigraph, e: int, n: int) -> Multigraph:
    """Replace edge ``e`` (u -> v) with the path u -> w1 -> ... -> wn -> v.

    The new vertices are numbered from ``g.vertex_count`` upward.  The first
    hop keeps edge id ``e``; the remaining hops are appended at the end.
    """
    if n < 1:
        raise TopologyError("n must be at least 1")
    if not 0 <= e < g.edge_count:
        raise TopologyError(f"edge {e} does not exist")
    u, v = g.edges[e].src, g.edges[e].dst
    base = g.vertex_count
    chain = [u] + list(range(base, base + n)) + [v]
    pairs = g.pairs()
    pairs[e] = (chain[0], chain[1])
    pairs.extend(zip(chain[1:-1], chain[2:]))
    return Multigraph.from_pairs(base + n, pairs)
