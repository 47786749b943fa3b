"""Synchronous step semantics for hot-potato routing on allowed networks.

Each tick runs five phases in a fixed order:

1. arrival: every packet on edge ``e`` becomes resident at ``dst(e)``;
2. exit: residents at their destination leave the network;
3. route: per vertex, the scheme assigns every remaining resident to a
   distinct output edge;
4. inject: requests are served first-come while their source vertex still
   has a free output edge;
5. the clock advances.

A state at clock ``t`` therefore holds the packets that arrive during tick
``t``.  A packet injected at ``t`` sits on an edge in the state for ``t + 1``
and its latency counts hops.

Randomness is counter based: every random draw comes from a generator keyed
by ``(seed, clock, stream)``, so a state needs no mutable RNG object and
replaying from any stored state reproduces the original run.
"""

from __future__ import annotations

import hashlib
import logging
import random
from dataclasses import dataclass, field
from typing import Callable, Hashable, Iterable, NamedTuple, Optional, Sequence, Union

from .topology import UNREACHABLE, DistanceTable, Multigraph, TopologyError, shortest_distances, validate_network

log = logging.getLogger(__name__)


class InvariantBreach(RuntimeError):
    """A simulation invariant failed; the run cannot be trusted."""


class Packet(NamedTuple):
    id: int
    source: int
    destination: int
    entry_time: int
    epoch_label: Optional[str] = None
    collision_count: int = 0
    promoted: bool = False


class InjectionRequest(NamedTuple):
    source: int
    destination: int


@dataclass(frozen=True)
class NetworkState:
    """Global simulation state.

    ``seed`` is the whole RNG state (see module docstring).
    """

    clock: int
    occupancy: tuple[Optional[Packet], ...]
    seed: int = 0
    next_packet_id: int = 0

    @classmethod
    def empty(cls, g: Multigraph, seed: int = 0, clock: int = 0) -> "NetworkState":
        return cls(clock, (None,) * g.edge_count, seed, 0)

    def packets(self) -> list[Packet]:
        return [p for p in self.occupancy if p is not None]

    @property
    def in_flight(self) -> int:
        return sum(1 for p in self.occupancy if p is not None)

    def labels_in_flight(self) -> frozenset:
        return frozenset(p.epoch_label for p in self.occupancy if p is not None and p.epoch_label is not None)


def rng_for(seed: int, clock: int, stream: Hashable) -> random.Random:
    return random.Random(f"{seed}:{clock}:{stream}")


class Network:
    """A validated graph plus the lookup tables the step loop needs."""

    def __init__(self, g: Multigraph, dist: Optional[DistanceTable] = None, validate: bool = True):
        if validate:
            check = validate_network(g)
            if not check:
                raise TopologyError("not an allowed network: " + "; ".join(check.describe()))
        self.graph = g
        self.dist = dist or shortest_distances(g)
        self.edge_count = g.edge_count
        self.edge_src = [e.src for e in g.edges]
        self.edge_dst = [e.dst for e in g.edges]
        self.out_edges: list[list[int]] = [[] for _ in range(g.vertex_count)]
        for e in g.edges:
            self.out_edges[e.src].append(e.id)
        self.active = g.active_vertices()
        d0 = self.dist.dist
        # targets[v]: valid destinations for a packet entering at v
        self.targets = [
            [t for t in self.active if t != v and d0[v][t] is not UNREACHABLE] for v in range(g.vertex_count)
        ]
        d = self.dist.dist
        # desired[v][t]: out-edges of v on some shortest path to t
        self.desired: list[list[list[int]]] = []
        for v in range(g.vertex_count):
            row = []
            for t in range(g.vertex_count):
                if t == v or d[v][t] is UNREACHABLE:
                    row.append([])
                else:
                    want = d[v][t] - 1
                    row.append([e for e in self.out_edges[v] if d[self.edge_dst[e]][t] == want])
            self.desired.append(row)

    def remaining(self, edge: int, dest: int) -> Optional[int]:
        """Hops still needed by a packet currently on ``edge``, counted from its head."""
        return self.dist.dist[self.edge_dst[edge]][dest]


def as_network(g: Union[Multigraph, Network]) -> Network:
    return g if isinstance(g, Network) else Network(g)


@dataclass
class StepContext:
    clock: int
    net: Network
    seed: int

    def rng(self, stream: Hashable) -> random.Random:
        return rng_for(self.seed, self.clock, stream)


Resident = tuple[Packet, int]  # (packet, edge it arrived on)
Assignment = tuple[Packet, int, bool]  # (packet, output edge, denied all desired edges)


class Scheme:
    """Conflict-resolution policy contract.

    Residents are served in descending ``keys`` order; equal keys keep
    ascending packet id order.  Each served packet takes a free desired edge
    when one exists, otherwise it is deflected.  Subclasses usually override
    ``key``, ``desired`` and ``deflect`` only.
    """

    name = "scheme"
    collision_cap = 15

    def key(self, packet: Packet, in_edge: int, v: int, ctx: StepContext):
        return 0

    def keys(self, residents: Sequence[Resident], v: int, ctx: StepContext) -> list:
        return [self.key(p, e, v, ctx) for p, e in residents]

    def desired(self, packet: Packet, in_edge: Optional[int], v: int, ctx: StepContext) -> list[int]:
        return ctx.net.desired[v][packet.destination]

    def choose(self, packet: Packet, options: list[int], v: int, ctx: StepContext) -> int:
        return options[0]

    def deflect(self, packet: Packet, free: list[int], v: int, ctx: StepContext) -> int:
        d = ctx.net.dist.dist
        dst = ctx.net.edge_dst
        t = packet.destination
        return min(free, key=lambda e: (d[dst[e]][t], e))

    def place(self, packet: Packet, free: list[int], v: int, ctx: StepContext) -> int:
        options = [e for e in self.desired(packet, None, v, ctx) if e in free]
        if options:
            return self.choose(packet, options, v, ctx)
        return self.deflect(packet, free, v, ctx)

    def on_denied(self, packet: Packet) -> Packet:
        if packet.collision_count >= self.collision_cap:
            return packet
        return packet._replace(collision_count=packet.collision_count + 1)

    def entry_label(self, clock: int) -> Optional[str]:
        return None

    def phase(self, clock: int) -> Hashable:
        """Clock-dependent part of the scheme's behaviour, for fingerprints."""
        return None

    def check_labels(self, labels: frozenset, clock: int) -> None:
        pass

    def route(self, v: int, residents: Sequence[Resident], free: Sequence[int], ctx: StepContext) -> list[Assignment]:
        if len(residents) == 1:
            # every output is free, so a lone packet always gets a desired edge
            p, ein = residents[0]
            options = self.desired(p, ein, v, ctx)
            if options:
                return [(p, self.choose(p, list(options), v, ctx), False)]
        order = sorted(residents, key=lambda r: r[0].id)
        keys = self.keys(order, v, ctx)
        ranked = sorted(range(len(order)), key=keys.__getitem__, reverse=True)
        free = list(free)
        out = []
        for i in ranked:
            p, ein = order[i]
            options = [e for e in self.desired(p, ein, v, ctx) if e in free]
            if options:
                e = self.choose(p, options, v, ctx)
                denied = False
            else:
                e = self.deflect(p, free, v, ctx)
                denied = True
            free.remove(e)
            out.append((p, e, denied))
        return out


@dataclass
class StepReport:
    clock: int
    delivered: list[tuple[Packet, int]] = field(default_factory=list)
    accepted_injections: list[Packet] = field(default_factory=list)
    rejected_injections: list[InjectionRequest] = field(default_factory=list)
    collisions: int = 0
    in_flight: int = 0
    labels_in_flight: frozenset = frozenset()

    @property
    def offered(self) -> int:
        return len(self.accepted_injections) + len(self.rejected_injections)


def step(
    state: NetworkState,
    net: Union[Network, Multigraph],
    scheme: Scheme,
    requests: Iterable[InjectionRequest] = (),
) -> tuple[NetworkState, StepReport]:
    net = as_network(net)
    E = net.edge_count
    if len(state.occupancy) != E:
        raise InvariantBreach(f"state has {len(state.occupancy)} edge slots, network has {E}")
    clock = state.clock
    report = StepReport(clock)
    ctx = StepContext(clock, net, state.seed)
    edge_dst = net.edge_dst

    # arrival + exit
    residents: dict[int, list[Resident]] = {}
    for eid, p in enumerate(state.occupancy):
        if p is None:
            continue
        v = edge_dst[eid]
        if p.destination == v:
            report.delivered.append((p, clock - p.entry_time))
        else:
            residents.setdefault(v, []).append((p, eid))

    # route
    occupancy: list[Optional[Packet]] = [None] * E
    labels = set()
    in_flight = 0
    edge_src = net.edge_src
    for v in sorted(residents):
        here = residents[v]
        outs = net.out_edges[v]
        if len(here) > len(outs):
            raise InvariantBreach(f"vertex {v} holds {len(here)} residents but has {len(outs)} outputs")
        assigned = scheme.route(v, here, outs, ctx)
        if len(assigned) != len(here):
            raise InvariantBreach(f"scheme {scheme.name} dropped a packet at vertex {v}")
        for p, e, denied in assigned:
            if denied:
                report.collisions += 1
                p = scheme.on_denied(p)
            if occupancy[e] is not None or edge_src[e] != v:
                raise InvariantBreach(f"scheme {scheme.name} assigned edge {e} illegally at vertex {v}")
            occupancy[e] = p
            if p.epoch_label is not None:
                labels.add(p.epoch_label)
        in_flight += len(here)

    # inject
    next_id = state.next_packet_id
    label = scheme.entry_label(clock)
    dist = net.dist.dist
    free_at: dict[int, list[int]] = {}
    for req in requests:
        src, dst = req.source, req.destination
        if src == dst or dist[src][dst] is UNREACHABLE:
            raise ValueError(f"invalid injection request {req}")
        free = free_at.get(src)
        if free is None:
            free = free_at[src] = [e for e in net.out_edges[src] if occupancy[e] is None]
        if not free:
            report.rejected_injections.append(req)
            continue
        p = Packet(next_id, src, dst, clock, label)
        next_id += 1
        e = scheme.place(p, free, src, ctx)
        if e not in free:
            raise InvariantBreach(f"scheme {scheme.name} placed a packet on busy edge {e}")
        free.remove(e)
        occupancy[e] = p
        in_flight += 1
        report.accepted_injections.append(p)
        if label is not None:
            labels.add(label)

    report.labels_in_flight = frozenset(labels)
    report.in_flight = in_flight
    if labels:
        scheme.check_labels(report.labels_in_flight, clock)
    return NetworkState(clock + 1, tuple(occupancy), state.seed, next_id), report


def place_packets(
    g: Multigraph,
    placements: Iterable[tuple[int, int]],
    seed: int = 0,
    clock: int = 0,
    collision_count: int = 0,
    promoted: bool = False,
    epoch_label: Optional[str] = None,
) -> NetworkState:
    """Build a state with packets already on edges.

    ``placements`` holds ``(edge_id, destination)`` pairs.  Such a packet is
    treated as waiting at the head router of its edge at ``clock``, so its
    source is ``dst(edge)`` and its entry time is ``clock``.
    """
    occ: list[Optional[Packet]] = [None] * g.edge_count
    n = 0
    for eid, dest in placements:
        if occ[eid] is not None:
            raise ValueError(f"edge {eid} already occupied")
        occ[eid] = Packet(n, g.edges[eid].dst, dest, clock, epoch_label, collision_count, promoted)
        n += 1
    return NetworkState(clock, tuple(occ), seed, n)


def state_fingerprint(state: NetworkState, packet_canonicalization: bool = True, keep_id_order: bool = False, extra: Hashable = None) -> str:
    """128-bit digest of the network configuration.

    With canonicalization on, packet ids, entry times and the clock are left
    out so that a configuration recurring with different packets hashes
    equal.  ``keep_id_order`` folds in the relative order of packet ids,
    which is all the tie-break rule can observe.
    """
    if packet_canonicalization:
        cells = [
            None if p is None else (p.destination, p.epoch_label, p.collision_count, p.promoted)
            for p in state.occupancy
        ]
        head: tuple = ()
        if keep_id_order:
            ids = sorted(p.id for p in state.occupancy if p is not None)
            rank = {pid: i for i, pid in enumerate(ids)}
            cells = [c if p is None else c + (rank[p.id],) for c, p in zip(cells, state.occupancy)]
    else:
        cells = [
            None if p is None else (p.id, p.destination, p.entry_time, p.epoch_label, p.collision_count, p.promoted)
            for p in state.occupancy
        ]
        head = (state.clock, state.seed, state.next_packet_id)
    payload = repr((head, tuple(cells), extra)).encode()
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


class Injector:
    """Source of injection requests.  ``phase`` names the clock-dependent
    part of its behaviour for cycle detection."""

    def requests(self, clock: int, net: Network, seed: int) -> list[InjectionRequest]:
        return []

    def phase(self, clock: int) -> Hashable:
        return None


@dataclass
class PacketRecord:
    packet_id: int
    src: int
    dst: int
    entry: int
    exit: int
    latency: int
    label: Optional[str]
    collisions: int
    promoted: bool


@dataclass
class StepRow:
    t: int
    deliveries: int
    rejections: int
    in_flight: int
    accepted: int = 0
    collisions: int = 0
    labels: int = 0


@dataclass
class Trace:
    records: list[PacketRecord]
    steps: list[StepRow]
    final_state: NetworkState

    @property
    def latencies(self) -> list[int]:
        return [r.latency for r in self.records]

    @property
    def total_collisions(self) -> int:
        return sum(s.collisions for s in self.steps)

    @property
    def max_labels_in_flight(self) -> int:
        return max((s.labels for s in self.steps), default=0)


def run(
    g: Union[Multigraph, Network],
    scheme: Scheme,
    injector: Optional[Injector] = None,
    max_steps: int = 1000,
    seed: int = 0,
    initial: Optional[NetworkState] = None,
    stop_when_empty: bool = False,
    on_step: Optional[Callable[[NetworkState, StepReport, NetworkState], None]] = None,
) -> Trace:
    """Simulate up to ``max_steps`` ticks; a pure function of its arguments.

    Conservation and the latency lower bound are checked every tick.
    """
    net = as_network(g)
    injector = injector or Injector()
    state = initial if initial is not None else NetworkState.empty(net.graph, seed)
    if len(state.occupancy) != net.edge_count:
        raise InvariantBreach("initial state does not match network")
    dist = net.dist.dist
    records: list[PacketRecord] = []
    rows: list[StepRow] = []
    for _ in range(max_steps):
        if stop_when_empty and state.in_flight == 0:
            break
        before = state.in_flight
        reqs = injector.requests(state.clock, net, state.seed)
        new, rep = step(state, net, scheme, reqs)
        if rep.in_flight != before - len(rep.delivered) + len(rep.accepted_injections):
            raise InvariantBreach(f"packet conservation failed at t={rep.clock}")
        for p, lat in rep.delivered:
            if lat < dist[p.source][p.destination]:
                raise InvariantBreach(f"packet {p.id} beat its shortest path")
            records.append(
                PacketRecord(p.id, p.source, p.destination, p.entry_time, rep.clock, lat,
                             p.epoch_label, p.collision_count, p.promoted)
            )
        rows.append(StepRow(rep.clock, len(rep.delivered), len(rep.rejected_injections), rep.in_flight,
                            len(rep.accepted_injections), rep.collisions, len(rep.labels_in_flight)))
        if on_step is not None:
            on_step(state, rep, new)
        state = new
    return Trace(records, rows, state)
