"""Concrete routing schemes and the promotion combinator."""

from __future__ import annotations

from typing import Optional, Sequence

from .simcore import Packet, Resident, Scheme, StepContext
from .topology import DistanceTable, Multigraph


class DistancePriority(Scheme):
    """Rank residents by remaining hop distance.

    ``farther_first=True`` is plain distance priority; ``False`` is the
    inverse variant, where the packet closest to its destination wins.
    """

    def __init__(self, dist: DistanceTable, farther_first: bool = True):
        self.dist = dist
        self.farther_first = farther_first
        self.name = "distance" if farther_first else "inverse-distance"

    def key(self, packet, in_edge, v, ctx):
        d = self.dist.dist[v][packet.destination]
        return d if self.farther_first else -d


def distance_priority(dist: DistanceTable) -> DistancePriority:
    return DistancePriority(dist, farther_first=True)


def inverse_distance_priority(dist: DistanceTable) -> DistancePriority:
    return DistancePriority(dist, farther_first=False)


class RandomScheme(Scheme):
    """Shortest-path requests; every conflict and deflection is a coin flip."""

    name = "random"

    def __init__(self, seed: int = 0):
        self.seed = seed

    def _rng(self, v: int, ctx: StepContext):
        return ctx.rng(("random-scheme", self.seed, v))

    def keys(self, residents, v, ctx):
        rng = self._rng(v, ctx)
        return [rng.random() for _ in residents]

    def key(self, packet, in_edge, v, ctx):
        # single-packet draws (used under collision counting) get their own stream
        return ctx.rng(("random-scheme", self.seed, v, packet.id)).random()

    def choose(self, packet, options, v, ctx):
        if len(options) == 1:
            return options[0]
        return ctx.rng(("random-choose", self.seed, v, packet.id)).choice(options)

    def deflect(self, packet, free, v, ctx):
        return ctx.rng(("random-deflect", self.seed, v, packet.id)).choice(free)

    def phase(self, clock):
        return clock


def random_scheme(seed: int = 0) -> RandomScheme:
    return RandomScheme(seed)


class CollisionCounting(Scheme):
    """Priority is the bounded count of full denials; the base scheme breaks ties."""

    def __init__(self, base: Scheme, max_count: int):
        if max_count < 1:
            raise ValueError("max_count must be at least 1")
        self.base = base
        self.collision_cap = max_count
        self.name = f"collisions:{base.name}:{max_count}"

    def keys(self, residents, v, ctx):
        base_keys = self.base.keys(residents, v, ctx)
        return [(p.collision_count, k) for (p, _), k in zip(residents, base_keys)]

    def key(self, packet, in_edge, v, ctx):
        return (packet.collision_count, self.base.key(packet, in_edge, v, ctx))

    def desired(self, packet, in_edge, v, ctx):
        return self.base.desired(packet, in_edge, v, ctx)

    def choose(self, packet, options, v, ctx):
        return self.base.choose(packet, options, v, ctx)

    def deflect(self, packet, free, v, ctx):
        return self.base.deflect(packet, free, v, ctx)

    def phase(self, clock):
        return self.base.phase(clock)


def collision_counting(base: Scheme, max_count: int) -> CollisionCounting:
    return CollisionCounting(base, max_count)


class EulerianScheme(Scheme):
    """Every packet follows a fixed Eulerian circuit.

    Distinct input edges have distinct successors, so residents never
    contend; a contention raises AssertionError.
    """

    name = "eulerian"

    def __init__(self, circuit: Sequence[int], graph: Optional[Multigraph] = None):
        self.circuit = list(circuit)
        n = len(self.circuit)
        self.successor = {self.circuit[i]: self.circuit[(i + 1) % n] for i in range(n)}
        if len(self.successor) != n:
            raise ValueError("circuit repeats an edge")
        # hops_to[e][t]: hops taken, starting with edge e, until the walk reaches t
        self.hops_to: Optional[dict[int, dict[int, int]]] = None
        if graph is not None:
            self.hops_to = {}
            for i, e in enumerate(self.circuit):
                seen: dict[int, int] = {}
                for h in range(n):
                    head = graph.edges[self.circuit[(i + h) % n]].dst
                    seen.setdefault(head, h + 1)
                self.hops_to[e] = seen

    def desired(self, packet, in_edge, v, ctx):
        if in_edge is None:
            return []
        return [self.successor[in_edge]]

    def place(self, packet, free, v, ctx):
        if self.hops_to is None:
            return free[0]
        t = packet.destination
        return min(free, key=lambda e: (self.hops_to[e].get(t, len(self.circuit) + 1), e))

    def route(self, v, residents, free, ctx):
        wanted = [self.successor[e] for _, e in residents]
        assert len(set(wanted)) == len(wanted), f"Eulerian residents contend at vertex {v}"
        return super().route(v, residents, free, ctx)


def eulerian_scheme(circuit: Sequence[int], graph: Optional[Multigraph] = None) -> EulerianScheme:
    return EulerianScheme(circuit, graph)


class Promote(Scheme):
    """Run ``sigma`` until a packet's collision count saturates, then ``tau``
    for good.  Promoted packets sit in a strictly higher tier."""

    def __init__(self, sigma: Scheme, tau: Scheme):
        self.sigma = sigma
        self.tau = tau
        self.collision_cap = max(sigma.collision_cap, tau.collision_cap)
        self.name = f"promote:{sigma.name}:{tau.name}"

    def _pick(self, packet: Packet) -> Scheme:
        return self.tau if packet.promoted else self.sigma

    def keys(self, residents, v, ctx):
        up = [r for r in residents if r[0].promoted]
        down = [r for r in residents if not r[0].promoted]
        up_keys = iter(self.tau.keys(up, v, ctx)) if up else iter(())
        down_keys = iter(self.sigma.keys(down, v, ctx)) if down else iter(())
        return [(1, next(up_keys)) if p.promoted else (0, next(down_keys)) for p, _ in residents]

    def key(self, packet, in_edge, v, ctx):
        return (int(packet.promoted), self._pick(packet).key(packet, in_edge, v, ctx))

    def desired(self, packet, in_edge, v, ctx):
        return self._pick(packet).desired(packet, in_edge, v, ctx)

    def choose(self, packet, options, v, ctx):
        return self._pick(packet).choose(packet, options, v, ctx)

    def deflect(self, packet, free, v, ctx):
        return self._pick(packet).deflect(packet, free, v, ctx)

    def place(self, packet, free, v, ctx):
        return self._pick(packet).place(packet, free, v, ctx)

    def on_denied(self, packet):
        if packet.promoted:
            return self.tau.on_denied(packet)
        packet = self.sigma.on_denied(packet)
        if packet.collision_count >= self.sigma.collision_cap:
            packet = packet._replace(promoted=True)
        return packet

    def phase(self, clock):
        return (self.sigma.phase(clock), self.tau.phase(clock))


def promote(sigma: Scheme, tau: Scheme) -> Promote:
    return Promote(sigma, tau)
