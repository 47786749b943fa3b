"""Hand-built fixture networks and a random allowed-network generator."""

from __future__ import annotations

import random
from importlib import resources
from typing import Optional

from .topology import Multigraph, add_buffer_loops, interpolate_virtual_routers


def directed_cycle(n: int) -> Multigraph:
    return Multigraph.from_pairs(n, [(i, (i + 1) % n) for i in range(n)])


def bidirectional_ring(n: int) -> Multigraph:
    pairs = []
    for i in range(n):
        pairs += [(i, (i + 1) % n), (i, (i - 1) % n)]
    return Multigraph.from_pairs(n, pairs)


def complete_digraph(n: int) -> Multigraph:
    return Multigraph.from_pairs(n, [(u, v) for u in range(n) for v in range(n) if u != v])


def torus(rows: int, cols: int) -> Multigraph:
    """Bidirectional 2-D torus; every router has four inputs and four outputs."""
    def vid(r, c):
        return (r % rows) * cols + (c % cols)

    pairs = []
    for r in range(rows):
        for c in range(cols):
            v = vid(r, c)
            pairs += [(v, vid(r, c + 1)), (v, vid(r, c - 1)), (v, vid(r + 1, c)), (v, vid(r - 1, c))]
    return Multigraph.from_pairs(rows * cols, pairs)


def two_region_network(size: int = 4) -> tuple[Multigraph, list[int], list[int]]:
    """Two bidirectional rings joined by one link pair between vertex 0 and vertex ``size``.

    Returns the graph and the vertex lists of region A and region B.
    """
    a = bidirectional_ring(size).pairs()
    b = [(s + size, d + size) for s, d in bidirectional_ring(size).pairs()]
    g = Multigraph.from_pairs(2 * size, a + b + [(0, size), (size, 0)])
    return g, list(range(size)), list(range(size, 2 * size))


def figure1_scenario():
    """The bundled distance-priority livelock instance (a scenario bundle)."""
    from .formats import parse_scenario

    text = resources.files("livelockfree").joinpath("data/figure1.scenario").read_text()
    return parse_scenario(text)


def fixtures() -> dict[str, Multigraph]:
    """The hand-built networks used throughout the test and acceptance suites."""
    return {
        "cycle3": directed_cycle(3),
        "cycle3-buffered": add_buffer_loops(directed_cycle(3), 0, 1),
        "ring4-virtual": interpolate_virtual_routers(bidirectional_ring(4), 0, 2),
        "complete4": complete_digraph(4),
        "torus3x3": torus(3, 3),
        "figure1": figure1_scenario().graph,
    }


def random_allowed_network(rng: random.Random, max_vertices: int = 30, max_edges: int = 80,
                           min_vertices: int = 2, loop_prob: float = 0.1,
                           vertices: Optional[int] = None) -> Multigraph:
    """Random balanced, strongly connected multigraph.

    A Hamiltonian cycle gives connectivity; extra closed walks and loops keep
    every vertex balanced.  Parallel edges arise naturally.
    """
    n = vertices or rng.randint(min_vertices, min(max_vertices, max_edges))
    order = list(range(n))
    rng.shuffle(order)
    pairs = [(order[i], order[(i + 1) % n]) for i in range(n)]
    budget = rng.randint(n, max_edges)
    while len(pairs) < budget:
        room = budget - len(pairs)
        if rng.random() < loop_prob:
            v = rng.randrange(n)
            pairs.append((v, v))
            continue
        length = rng.randint(2, max(2, min(room, n)))
        if length > room:
            break
        walk = [rng.randrange(n) for _ in range(length)]
        closed = [(walk[i], walk[(i + 1) % length]) for i in range(length)]
        pairs += closed
    rng.shuffle(pairs)
    return Multigraph.from_pairs(n, pairs)
