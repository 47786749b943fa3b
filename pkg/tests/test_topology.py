import random

import pytest
from hypothesis import given, settings, strategies as st

from livelockfree.networks import bidirectional_ring, complete_digraph, directed_cycle, random_allowed_network
from livelockfree.simcore import Network, place_packets, step
from livelockfree.schemes import inverse_distance_priority
from livelockfree.topology import (
    UNREACHABLE,
    Multigraph,
    TopologyError,
    add_buffer_loops,
    diameter,
    eulerian_circuit,
    interpolate_virtual_routers,
    is_eulerian_circuit,
    shortest_distances,
    validate_network,
)


def floyd_warshall(g):
    """Naive all-pairs oracle; None marks no path."""
    inf = float("inf")
    n = g.vertex_count
    d = [[0 if i == j else inf for j in range(n)] for i in range(n)]
    for e in g.edges:
        if e.src != e.dst:
            d[e.src][e.dst] = 1
    for k in range(n):
        for i in range(n):
            for j in range(n):
                if d[i][k] + d[k][j] < d[i][j]:
                    d[i][j] = d[i][k] + d[k][j]
    return [[None if x == inf else int(x) for x in row] for row in d]


graphs = st.integers(0, 10**6).map(lambda s: random_allowed_network(random.Random(s), max_vertices=12, max_edges=30))


class TestValidate:
    def test_cycle_ok(self, cycle3):
        assert validate_network(cycle3)

    def test_single_edge_fails_at_both_ends(self):
        res = validate_network(Multigraph.from_pairs(2, [(0, 1)]))
        assert not res
        assert (0, 0, 1) in res.degree_violations
        assert (1, 1, 0) in res.degree_violations

    def test_loop_keeps_balance(self, cycle3):
        assert validate_network(add_buffer_loops(cycle3, 0, 1))

    def test_disconnected_balanced_graph_fails(self):
        g = Multigraph.from_pairs(4, [(0, 1), (1, 0), (2, 3), (3, 2)])
        res = validate_network(g)
        assert not res and not res.degree_violations
        assert (0, 2) in res.unreachable_pairs

    def test_isolated_vertex_is_ignored(self):
        assert validate_network(Multigraph.from_pairs(4, [(0, 1), (1, 2), (2, 0)]))

    @given(graphs)
    @settings(max_examples=50, deadline=None)
    def test_generated_networks_are_allowed(self, g):
        assert validate_network(g)
        assert sum(g.in_degree(v) for v in range(g.vertex_count)) == g.edge_count
        assert sum(g.out_degree(v) for v in range(g.vertex_count)) == g.edge_count


class TestDistances:
    def test_cycle(self, cycle3):
        d = shortest_distances(cycle3)
        assert d(0, 1) == 1 and d(0, 2) == 2 and d(0, 0) == 0

    def test_loop_only_vertex(self):
        d = shortest_distances(Multigraph.from_pairs(1, [(0, 0)]))
        assert d(0, 0) == 0

    def test_unreachable_is_sentinel(self):
        d = shortest_distances(Multigraph.from_pairs(3, [(0, 1), (1, 0)]))
        assert d(0, 2) is UNREACHABLE
        with pytest.raises(TypeError):
            d(0, 2) + 1

    @given(graphs)
    @settings(max_examples=50, deadline=None)
    def test_matches_floyd_warshall(self, g):
        assert [list(r) for r in shortest_distances(g).dist] == floyd_warshall(g)

    @given(graphs)
    @settings(max_examples=30, deadline=None)
    def test_triangle_inequality(self, g):
        d = shortest_distances(g).dist
        n = g.vertex_count
        for u in range(n):
            assert d[u][u] == 0
            for v in range(n):
                assert d[u][v] <= n - 1
                for w in range(n):
                    assert d[u][w] <= d[u][v] + d[v][w]


class TestDiameter:
    @pytest.mark.parametrize("g, k", [
        (directed_cycle(4), 3),
        (complete_digraph(3), 1),
        (directed_cycle(3), 2),
        (bidirectional_ring(6), 3),
    ])
    def test_examples(self, g, k):
        assert diameter(g) == k

    def test_disconnected_raises(self):
        with pytest.raises(TopologyError):
            diameter(Multigraph.from_pairs(4, [(0, 1), (1, 0), (2, 3), (3, 2)]))


class TestEulerian:
    def test_cycle_in_order(self, cycle3):
        assert eulerian_circuit(cycle3) == [0, 1, 2]

    def test_parallel_pairs_alternate(self):
        g = Multigraph.from_pairs(2, [(0, 1), (1, 0), (0, 1), (1, 0)])
        c = eulerian_circuit(g)
        assert len(c) == 4
        assert [g.edges[e].src for e in c] == [0, 1, 0, 1]
        assert is_eulerian_circuit(g, c)

    def test_unbalanced_raises(self):
        with pytest.raises(TopologyError):
            eulerian_circuit(Multigraph.from_pairs(2, [(0, 1), (0, 1), (1, 0)]))

    @given(st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_random_small_graphs(self, seed):
        g = random_allowed_network(random.Random(seed), max_vertices=8, max_edges=20)
        c = eulerian_circuit(g)
        assert sorted(c) == list(range(g.edge_count))
        for a, b in zip(c, c[1:] + c[:1]):
            assert g.edges[a].dst == g.edges[b].src
        assert g.edges[c[0]].src == min(e.src for e in g.edges)

    def test_deterministic(self):
        g = random_allowed_network(random.Random(5), max_vertices=10, max_edges=30)
        assert eulerian_circuit(g) == eulerian_circuit(g)


class TestBufferLoops:
    def test_zero_capacity_unchanged(self, cycle3):
        assert add_buffer_loops(cycle3, 0, 0) == cycle3

    def test_degrees_grow(self, cycle3):
        g = add_buffer_loops(cycle3, 0, 2)
        assert g.edge_count == 5
        assert g.in_degree(0) == g.out_degree(0) == 3
        assert validate_network(g)

    def test_parked_packet_rearrives(self, cycle3):
        g = add_buffer_loops(cycle3, 0, 1)
        net = Network(g)
        state = place_packets(g, [(3, 1)])  # on the loop, destined for vertex 1
        state, rep = step(state, net, inverse_distance_priority(net.dist))
        assert not rep.delivered
        # the packet re-arrived at 0 and left towards 1 over edge 0
        assert state.occupancy[0] is not None and state.occupancy[0].destination == 1

    @given(graphs, st.integers(0, 3))
    @settings(max_examples=30, deadline=None)
    def test_loops_never_change_distances(self, g, cap):
        v = g.active_vertices()[0]
        assert shortest_distances(add_buffer_loops(g, v, cap)).dist == shortest_distances(g).dist

    def test_negative_capacity(self, cycle3):
        with pytest.raises(TopologyError):
            add_buffer_loops(cycle3, 0, -1)


class TestVirtualRouters:
    def test_single_router(self, cycle3):
        g = interpolate_virtual_routers(cycle3, 0, 1)
        assert (g.vertex_count, g.edge_count) == (4, 4)
        assert validate_network(g)

    def test_three_routers_stretch_distance(self, cycle3):
        g = interpolate_virtual_routers(cycle3, 0, 3)
        assert shortest_distances(g)(0, 1) == 4

    def test_diameter_against_oracle(self, cycle3):
        g = interpolate_virtual_routers(cycle3, 0, 2)
        oracle = max(x for row in floyd_warshall(g) for x in row)
        assert diameter(g) == oracle == 4

    @given(graphs, st.integers(1, 3), st.data())
    @settings(max_examples=30, deadline=None)
    def test_preserves_allowed_and_unique_route_stretch(self, g, n, data):
        non_loops = [e for e in g.edges if not e.is_loop]
        e = data.draw(st.sampled_from(non_loops))
        h = interpolate_virtual_routers(g, e.id, n)
        assert validate_network(h)
        before = shortest_distances(g)(e.src, e.dst)
        parallel = sum(1 for f in g.edges if (f.src, f.dst) == (e.src, e.dst))
        without = Multigraph.from_pairs(g.vertex_count, [p for i, p in enumerate(g.pairs()) if i != e.id])
        alt = shortest_distances(without)(e.src, e.dst)
        if parallel == 1 and (alt is UNREACHABLE or alt > before + n):
            assert shortest_distances(h)(e.src, e.dst) == before + n

    def test_bad_arguments(self, cycle3):
        with pytest.raises(TopologyError):
            interpolate_virtual_routers(cycle3, 0, 0)
        with pytest.raises(TopologyError):
            interpolate_virtual_routers(cycle3, 7, 1)
