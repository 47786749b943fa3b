import random

import pytest
from hypothesis import given, settings, strategies as st

from livelockfree.injectors import RateInjector, SaturatingInjector
from livelockfree.livelock import flush_check, full_config, random_config
from livelockfree.networks import bidirectional_ring, random_allowed_network, torus
from livelockfree.schemes import (
    collision_counting,
    distance_priority,
    eulerian_scheme,
    inverse_distance_priority,
    promote,
    random_scheme,
)
from livelockfree.simcore import Network, NetworkState, place_packets, run, step
from livelockfree.topology import Multigraph, diameter, eulerian_circuit


@pytest.fixture
def contest():
    """Router 0 fed by a long chain (via 4) and by 1; both packets want edge 0 -> 1.

    Edges: 0:(0,1) 1:(0,2) 2:(1,0) 3:(2,3) 4:(3,4) 5:(4,0)
    """
    return Multigraph.from_pairs(5, [(0, 1), (0, 2), (1, 0), (2, 3), (3, 4), (4, 0)])


def winner_of_edge0(g, scheme, placements):
    net = Network(g)
    state, rep = step(place_packets(g, placements), net, scheme)
    return state.occupancy[0]


class TestDistancePriorities:
    def test_farther_wins(self, fork):
        # fork: 0:(0,1) 1:(0,2) 2:(1,0) 3:(2,0); make remaining distances differ with a longer graph
        g = Multigraph.from_pairs(4, [(0, 1), (0, 3), (1, 2), (2, 0), (3, 0)])
        net = Network(g)
        # packet A on edge 3 (2->0) bound for 1: distance 1; packet B on 4 (3->0) bound for 2: distance 2
        win = winner_of_edge0(g, distance_priority(net.dist), [(3, 1), (4, 2)])
        assert win.destination == 2

    def test_inverse_nearer_wins(self):
        g = Multigraph.from_pairs(4, [(0, 1), (0, 3), (1, 2), (2, 0), (3, 0)])
        net = Network(g)
        win = winner_of_edge0(g, inverse_distance_priority(net.dist), [(3, 1), (4, 2)])
        assert win.destination == 1

    def test_distances_five_and_two(self):
        # chain 0 -> 1 -> ... -> 5 -> 0 plus a shortcut pair so vertex 0 has two inputs
        pairs = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 6), (6, 0)]
        g = Multigraph.from_pairs(7, pairs)
        net = Network(g)
        # arrivals at 0 on edge 5 (dest 5: distance 5) and edge 7 (dest 2: distance 2)
        assert winner_of_edge0(g, distance_priority(net.dist), [(5, 5), (7, 2)]).destination == 5
        assert winner_of_edge0(g, inverse_distance_priority(net.dist), [(5, 5), (7, 2)]).destination == 2

    @given(st.integers(0, 10**6))
    @settings(max_examples=40, deadline=None)
    def test_reversed_winner_order(self, seed):
        rng = random.Random(seed)
        g = random_allowed_network(rng, max_vertices=8, max_edges=20)
        net = Network(g)
        for v in g.active_vertices():
            ins, outs = g.in_edges(v), g.out_edges(v)
            if len(ins) < 2:
                continue
            a, b = ins[:2]
            # pick destinations sharing a desired edge at v with different distances
            pairs = [(s, t) for s in g.active_vertices() for t in g.active_vertices()
                     if s != t and v not in (s, t)
                     and net.dist.dist[v][s] != net.dist.dist[v][t]
                     and set(net.desired[v][s]) & set(net.desired[v][t])
                     and len(net.desired[v][s]) == len(net.desired[v][t]) == 1]
            if not pairs:
                continue
            s, t = pairs[0]
            place = [(a, s), (b, t)]
            far = s if net.dist.dist[v][s] > net.dist.dist[v][t] else t
            shared = net.desired[v][s][0]
            st1, _ = step(place_packets(g, place), net, distance_priority(net.dist))
            st2, _ = step(place_packets(g, place), net, inverse_distance_priority(net.dist))
            assert st1.occupancy[shared].destination == far
            assert st2.occupancy[shared].destination != far

    def test_lone_packet_takes_desired(self, cycle3):
        net = Network(cycle3)
        trace = run(net, inverse_distance_priority(net.dist), None, 3, initial=place_packets(cycle3, [(2, 1)]))
        assert [(r.exit, r.latency) for r in trace.records] == [(1, 1)]

    def test_deflection_prefers_closer_edge(self, contest):
        net = Network(contest)
        # loser at 0 bound for 1 can only take edge 1 (0->2)
        state, rep = step(place_packets(contest, [(2, 1), (5, 1)]), net, inverse_distance_priority(net.dist))
        assert rep.collisions == 1
        assert state.occupancy[1].destination == 1

    @pytest.mark.parametrize("g", [bidirectional_ring(5), torus(3, 3), torus(2, 4)], ids=["ring5", "torus33", "torus24"])
    def test_inverse_distance_flush_bound(self, g):
        net = Network(g)
        k = diameter(g)
        rng = random.Random(11)
        for _ in range(40):
            cfg = random_config(g, rng)
            rep = flush_check(net, inverse_distance_priority(net.dist), cfg, len(cfg) * k + 1)
            assert rep.flushed and rep.flush_time <= len(cfg) * k


class TestCollisionCounting:
    def test_count_beats_base(self, contest):
        net = Network(contest)
        s = collision_counting(inverse_distance_priority(net.dist), 5)
        state = place_packets(contest, [(2, 1), (5, 1)])
        # packet 1 (on edge 5) would lose on distance; give it three collisions
        occ = list(state.occupancy)
        occ[5] = occ[5]._replace(collision_count=3)
        state = NetworkState(0, tuple(occ), 0, 2)
        after, _ = step(state, net, s)
        assert after.occupancy[0].id == 1

    def test_cap_holds_and_ties_by_id(self, fork):
        net = Network(fork)
        s = collision_counting(inverse_distance_priority(net.dist), 2)
        state = place_packets(fork, [(2, 1), (3, 1)], collision_count=2)
        after, rep = step(state, net, s)
        assert after.occupancy[0].id == 0
        assert rep.collisions == 1
        assert all(p.collision_count == 2 for p in after.packets())

    def test_single_denial_increments_by_one(self, fork):
        net = Network(fork)
        s = collision_counting(inverse_distance_priority(net.dist), 4)
        after, _ = step(place_packets(fork, [(2, 1), (3, 1)]), net, s)
        assert sorted(p.collision_count for p in after.packets()) == [0, 1]

    def test_rejects_zero_cap(self, cycle3):
        with pytest.raises(ValueError):
            collision_counting(random_scheme(), 0)

    @given(st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_counts_monotone_and_bounded(self, seed):
        g = random_allowed_network(random.Random(seed), max_vertices=6, max_edges=16)
        net = Network(g)
        s = collision_counting(random_scheme(seed), 3)
        last = {}

        def check(before, rep, after):
            for p in after.packets():
                assert p.collision_count <= 3
                assert p.collision_count >= last.get(p.id, 0)
                last[p.id] = p.collision_count

        run(net, s, SaturatingInjector(), 100, seed, on_step=check)


class TestRandomScheme:
    def test_light_load_is_shortest_path(self, fixture_networks):
        g = fixture_networks["torus3x3"]
        net = Network(g)
        for t in range(1, 9):
            trace = run(net, random_scheme(t), None, 5, seed=t, initial=place_packets(g, [(0, t)]))
            assert trace.records[0].latency == net.dist.dist[g.edges[0].dst][t]

    def test_fair_coin(self, fork):
        """Monte Carlo: two packets, one shared desired edge, 10,000 seeds."""
        net = Network(fork)
        wins = 0
        for seed in range(10_000):
            state = place_packets(fork, [(2, 1), (3, 1)], seed=seed)
            after, _ = step(state, net, random_scheme(seed))
            wins += after.occupancy[0].id == 0
        assert abs(wins / 10_000 - 0.5) <= 0.02

    def test_same_seed_same_decisions(self, fixture_networks):
        g = fixture_networks["complete4"]
        a = run(g, random_scheme(5), SaturatingInjector(), 200, seed=5)
        b = run(g, random_scheme(5), SaturatingInjector(), 200, seed=5)
        assert a.records == b.records


class TestEulerian:
    def test_advances_one_position(self, fixture_networks):
        g = fixture_networks["torus3x3"]
        c = eulerian_circuit(g)
        net = Network(g)
        s = eulerian_scheme(c, g)
        i = 7
        state = place_packets(g, [(c[i], g.edges[c[i]].src)])  # destination far along the circuit
        after, _ = step(state, net, s)
        assert after.occupancy[c[i + 1]] is not None

    @pytest.mark.parametrize("name", ["cycle3", "cycle3-buffered", "ring4-virtual", "complete4", "torus3x3", "figure1"])
    def test_full_network_flushes_within_E(self, fixture_networks, name):
        g = fixture_networks[name]
        net = Network(g)
        s = eulerian_scheme(eulerian_circuit(g), g)
        rng = random.Random(2)
        for _ in range(20):
            rep = flush_check(net, s, full_config(g, rng), g.edge_count)
            assert rep.flushed and rep.flush_time <= g.edge_count and rep.collisions == 0

    def test_zero_collisions_under_load(self, fixture_networks):
        g = fixture_networks["torus3x3"]
        trace = run(g, eulerian_scheme(eulerian_circuit(g), g), SaturatingInjector(), 500, seed=1)
        assert trace.total_collisions == 0

    def test_walk_is_contiguous_in_circuit(self, fixture_networks):
        g = fixture_networks["complete4"]
        c = eulerian_circuit(g)
        pos = {e: i for i, e in enumerate(c)}
        net = Network(g)
        s = eulerian_scheme(c, g)
        state = NetworkState.empty(g)
        where = {}

        def check(before, rep, after):
            for e, p in enumerate(after.occupancy):
                if p is None:
                    continue
                if p.id in where:
                    assert pos[e] == (where[p.id] + 1) % len(c)
                where[p.id] = pos[e]

        run(net, s, RateInjector(0.5), 300, seed=4, on_step=check)

    def test_contention_asserts(self, fork):
        s = eulerian_scheme([0, 2, 1, 3], fork)
        net = Network(fork)
        with pytest.raises(AssertionError):
            s.route(0, [(place_packets(fork, [(2, 1)]).occupancy[2], 2)] * 2, [0, 1], None)


class TestPromote:
    def test_promoted_outranks_everyone(self, fork):
        net = Network(fork)
        s = promote(collision_counting(random_scheme(1), 3), inverse_distance_priority(net.dist))
        for seed in range(50):
            state = place_packets(fork, [(2, 1)], seed=seed)
            other = place_packets(fork, [(3, 1)], collision_count=3, promoted=True).occupancy[3]
            occ = list(state.occupancy)
            occ[3] = other.__class__(1, other.source, 1, 0, None, 3, True)
            after, _ = step(NetworkState(0, tuple(occ), seed, 2), net, s)
            assert after.occupancy[0].id == 1

    def test_flip_after_cap_denials(self, fork):
        net = Network(fork)
        s = promote(collision_counting(inverse_distance_priority(net.dist), 3), inverse_distance_priority(net.dist))
        state = place_packets(fork, [(2, 1), (3, 1)], collision_count=2)
        after, _ = step(state, net, s)
        loser = after.occupancy[1]
        assert loser.collision_count == 3 and loser.promoted

    def test_no_conflicts_matches_sigma(self, fixture_networks):
        g = fixture_networks["torus3x3"]
        net = Network(g)
        sigma = collision_counting(random_scheme(2), 3)
        a = run(net, promote(sigma, inverse_distance_priority(net.dist)), RateInjector(0.01), 400, seed=2)
        b = run(net, sigma, RateInjector(0.01), 400, seed=2)
        assert a.total_collisions == 0
        assert a.records == b.records

    def test_promotion_is_monotone(self):
        g = torus(4, 4)
        net = Network(g)
        s = promote(collision_counting(random_scheme(3), 3), inverse_distance_priority(net.dist))
        promoted = set()

        def check(before, rep, after):
            for p in after.packets():
                if p.id in promoted:
                    assert p.promoted
                if p.promoted:
                    promoted.add(p.id)

        run(net, s, SaturatingInjector(), 300, seed=3, on_step=check)
        assert promoted

    def test_flushes_after_injection_stops(self, fixture_networks):
        g = fixture_networks["torus3x3"]
        net = Network(g)
        s = promote(collision_counting(random_scheme(4), 3), inverse_distance_priority(net.dist))
        rng = random.Random(4)
        for _ in range(20):
            rep = flush_check(net, s, full_config(g, rng), 10 * g.edge_count * diameter(g))
            assert rep.flushed
