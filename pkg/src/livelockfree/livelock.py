"""Epoch-label wrappers, flushability measurement and livelock detection."""

from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

from .injectors import NoInjection, PatternInjector, SaturatingInjector
from .schemes import DistancePriority, EulerianScheme
from .simcore import (
    Injector,
    Multigraph,
    Network,
    NetworkState,
    Scheme,
    as_network,
    place_packets,
    state_fingerprint,
    step,
)
from .topology import diameter, validate_network

log = logging.getLogger(__name__)


class EpochLabel(str, Enum):
    R = "R"
    S = "S"
    P = "P"
    A = "A"
    B = "B"


class Variant(str, Enum):
    PSR3 = "psr3"
    AB2 = "ab2"


_SCHEDULE = {
    Variant.PSR3: (EpochLabel.R, EpochLabel.S, EpochLabel.P),
    Variant.AB2: (EpochLabel.A, EpochLabel.B),
}
# (winner, loser) pairs of the cyclic three-state order
_PSR_BEATS = {("R", "S"), ("S", "P"), ("P", "R")}


@dataclass(frozen=True)
class EpochConfig:
    T: int
    variant: Variant = Variant.PSR3

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        object.__setattr__(self, "variant", Variant(self.variant))

    @property
    def cycle(self) -> int:
        return self.T * len(_SCHEDULE[self.variant])


def epoch_label_for(t: int, cfg: EpochConfig) -> EpochLabel:
    labels = _SCHEDULE[cfg.variant]
    return labels[(t // cfg.T) % len(labels)]


def epoch_beats(a, b, t: int, cfg: EpochConfig) -> int:
    """+1 if label ``a`` outranks ``b`` at tick ``t``, -1 if ``b`` outranks ``a``, 0 if equal.

    Only defined pairwise: the three-state relation is cyclic.
    """
    a, b = EpochLabel(a), EpochLabel(b)
    allowed = _SCHEDULE[cfg.variant]
    if a not in allowed or b not in allowed:
        raise ValueError(f"labels {a.value}, {b.value} do not belong to {cfg.variant.value}")
    if a == b:
        return 0
    if cfg.variant is Variant.PSR3:
        return 1 if (a.value, b.value) in _PSR_BEATS else -1
    # AB2: the label not being stamped right now has precedence
    return -1 if a == epoch_label_for(t, cfg) else 1


class EpochWrap(Scheme):
    """Entry-time epoch labels outrank everything the base scheme knows."""

    def __init__(self, base: Scheme, cfg: EpochConfig):
        self.base = base
        self.cfg = cfg
        self.collision_cap = base.collision_cap
        self.name = f"{cfg.variant.value}:{cfg.T}:{base.name}"

    def label_ranks(self, labels: Iterable[Optional[str]], clock: int) -> dict:
        present = sorted({x for x in labels if x is not None})
        ranks: dict = {None: -1}
        if len(present) <= 1:
            ranks.update({x: 0 for x in present})
        elif len(present) == 2:
            a, b = present
            win = epoch_beats(a, b, clock, self.cfg)
            ranks[a] = int(win > 0)
            ranks[b] = int(win < 0)
        else:
            log.warning("t=%d: labels %s contend at one router; using fixed order R>S>P", clock, present)
            ranks.update({"R": 2, "S": 1, "P": 0})
        return ranks

    def keys(self, residents, v, ctx):
        base_keys = self.base.keys(residents, v, ctx)
        first = residents[0][0].epoch_label
        if all(p.epoch_label == first for p, _ in residents):
            return [(0, k) for k in base_keys]
        ranks = self.label_ranks((p.epoch_label for p, _ in residents), ctx.clock)
        return [(ranks[p.epoch_label], k) for (p, _), k in zip(residents, base_keys)]

    def key(self, packet, in_edge, v, ctx):
        return self.base.key(packet, in_edge, v, ctx)

    def desired(self, packet, in_edge, v, ctx):
        return self.base.desired(packet, in_edge, v, ctx)

    def choose(self, packet, options, v, ctx):
        return self.base.choose(packet, options, v, ctx)

    def deflect(self, packet, free, v, ctx):
        return self.base.deflect(packet, free, v, ctx)

    def place(self, packet, free, v, ctx):
        return self.base.place(packet, free, v, ctx)

    def on_denied(self, packet):
        return self.base.on_denied(packet)

    def entry_label(self, clock):
        return epoch_label_for(clock, self.cfg).value

    def phase(self, clock):
        return (clock % self.cfg.cycle, self.base.phase(clock))

    def check_labels(self, labels, clock):
        if self.cfg.variant is Variant.PSR3 and len(labels) > 2:
            log.warning("t=%d: %d distinct labels in flight: %s", clock, len(labels), sorted(labels))


def psr_wrap(base: Scheme, cfg: EpochConfig) -> EpochWrap:
    if cfg.variant is not Variant.PSR3:
        cfg = EpochConfig(cfg.T, Variant.PSR3)
    return EpochWrap(base, cfg)


def two_state_wrap(base: Scheme, cfg: EpochConfig) -> EpochWrap:
    if cfg.variant is not Variant.AB2:
        cfg = EpochConfig(cfg.T, Variant.AB2)
    return EpochWrap(base, cfg)


# -- flushability ----------------------------------------------------------


@dataclass
class FlushReport:
    flushed: bool
    flush_time: Optional[int]
    budget: int
    packets: int = 0
    collisions: int = 0


Config = Union[NetworkState, Sequence[tuple[int, int]]]


def _as_state(g: Multigraph, config: Config) -> NetworkState:
    return config if isinstance(config, NetworkState) else place_packets(g, config)


def flush_check(g, scheme: Scheme, initial_config: Config, budget: int) -> FlushReport:
    """Run with injection disabled until the network empties.

    ``flush_time`` is the tick of the last exit relative to the start; a
    packet whose edge leads into its destination exits at relative tick 0.
    """
    net = as_network(g)
    state = _as_state(net.graph, initial_config)
    start = state.clock
    packets = state.in_flight
    last_exit = start
    collisions = 0
    while state.in_flight:
        if state.clock - start > budget:
            return FlushReport(False, None, budget, packets, collisions)
        state, rep = step(state, net, scheme, ())
        collisions += rep.collisions
        if rep.delivered:
            last_exit = rep.clock
    return FlushReport(True, last_exit - start, budget, packets, collisions)


def random_config(g: Multigraph, rng: random.Random) -> list[tuple[int, int]]:
    """Uniform subset of edges, each with a uniform destination among active vertices."""
    targets = g.active_vertices()
    return [(e.id, rng.choice(targets)) for e in g.edges if rng.random() < 0.5]


def full_config(g: Multigraph, rng: random.Random) -> list[tuple[int, int]]:
    targets = g.active_vertices()
    return [(e.id, rng.choice(targets)) for e in g.edges]


def analytic_flush_bound(g: Multigraph, scheme: Scheme) -> int:
    """Certified flush time: E x diameter for inverse distance, E for Eulerian."""
    if isinstance(scheme, EulerianScheme):
        return g.edge_count
    if isinstance(scheme, DistancePriority) and not scheme.farther_first:
        return g.edge_count * diameter(g)
    raise ValueError(f"no analytic flush bound for scheme {scheme.name}")


def estimate_flush_time(g, scheme: Scheme, trials: int, seed: int = 0, mode: str = "measured",
                        budget: Optional[int] = None) -> int:
    """Flush time to use as the epoch length T.

    ``measured`` is the worst flush time over ``trials`` random initial
    configurations; ``analytic`` is the certified ceiling.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    net = as_network(g)
    if mode == "analytic":
        return analytic_flush_bound(net.graph, scheme)
    if mode != "measured":
        raise ValueError(f"unknown mode {mode!r}")
    budget = budget or 10 * max(1, net.edge_count) * max(1, net.graph.vertex_count)
    rng = random.Random(seed)
    worst = 0
    for _ in range(trials):
        rep = flush_check(net, scheme, random_config(net.graph, rng), budget)
        if not rep.flushed:
            raise RuntimeError(f"scheme {scheme.name} did not flush within {budget} ticks")
        worst = max(worst, rep.flush_time)
    return worst


# -- livelock detection ----------------------------------------------------


@dataclass
class LivelockReport:
    found: bool
    cycle_start: Optional[int] = None
    cycle_length: Optional[int] = None
    deliveries_in_cycle: int = 0
    accepted_entries_in_cycle: int = 0
    offered_entries_in_cycle: int = 0
    canonical_period: Optional[int] = None
    diagnostic: str = ""
    witness: Optional[NetworkState] = field(default=None, repr=False)


def _strict_key(state: NetworkState, scheme: Scheme, injector: Injector) -> str:
    # id order drives tie-breaks and phases drive clock-dependent behaviour,
    # so equal keys imply identical futures for deterministic schemes.
    return state_fingerprint(state, keep_id_order=True,
                             extra=(scheme.phase(state.clock), injector.phase(state.clock)))


def _cycle_stats(net, scheme, injector, start: NetworkState, length: int) -> tuple[int, int, int]:
    state = start
    delivered = accepted = offered = 0
    for _ in range(length):
        state, rep = step(state, net, scheme, injector.requests(state.clock, net, state.seed))
        delivered += len(rep.delivered)
        accepted += len(rep.accepted_injections)
        offered += rep.offered
    return delivered, accepted, offered


def detect_livelock(g, scheme: Scheme, injector: Optional[Injector] = None, budget: int = 10_000,
                    initial: Optional[Config] = None, seed: int = 0) -> LivelockReport:
    """Simulate until the full configuration recurs, then classify the cycle.

    Livelock means the cycle delivers nothing and admits nothing although
    entries were offered.
    """
    net = as_network(g)
    injector = injector or NoInjection()
    if initial is None:
        state = NetworkState.empty(net.graph, seed)
    else:
        state = _as_state(net.graph, initial)
    seen: dict[str, int] = {}
    states: list[NetworkState] = []
    for i in range(budget + 1):
        key = _strict_key(state, scheme, injector)
        if key in seen:
            start = seen[key]
            length = i - start
            witness = states[start]
            delivered, accepted, offered = _cycle_stats(net, scheme, injector, witness, length)
            found = delivered == 0 and accepted == 0 and offered > 0
            canon = state_fingerprint(witness)
            period = next(
                (p for p in range(1, length + 1) if state_fingerprint(states[start + p] if start + p < i else state) == canon),
                length,
            )
            return LivelockReport(found, start, length, delivered, accepted, offered, period,
                                  "cycle replayed", witness)
        seen[key] = i
        states.append(state)
        if i == budget:
            break
        state, _ = step(state, net, scheme, injector.requests(state.clock, net, state.seed))
    return LivelockReport(False, diagnostic=f"no recurrence within {budget} steps")


# -- search for a distance-priority livelock ---------------------------------


@dataclass
class LivelockInstance:
    graph: Multigraph
    placements: list[tuple[int, int]]
    scheme_name: str
    report: LivelockReport
    candidates_tried: int = 0

    def adversarial_injector(self) -> PatternInjector:
        """Saturating source that re-offers the livelocked destinations at each router."""
        pattern: dict[int, list[int]] = {}
        for eid, dest in sorted(self.placements):
            src = self.graph.edges[eid].src
            if src != dest:
                pattern.setdefault(src, []).append(dest)
        return PatternInjector(pattern)


SchemeFactory = Callable[[Network], Scheme]


def _two_regular_graphs(n: int, rng: random.Random, allow_loops: bool) -> Multigraph:
    # a 2-in/2-out digraph is the union of two permutations
    while True:
        p1 = list(range(n))
        p2 = list(range(n))
        rng.shuffle(p1)
        rng.shuffle(p2)
        pairs = [(v, p1[v]) for v in range(n)] + [(v, p2[v]) for v in range(n)]
        if not allow_loops and any(s == d for s, d in pairs):
            continue
        g = Multigraph.from_pairs(n, sorted(pairs))
        if validate_network(g):
            return g


def find_livelock_example(
    max_vertices: int = 8,
    max_edges: int = 16,
    schemes_to_probe: Optional[Mapping[str, SchemeFactory]] = None,
    seed: int = 0,
    max_candidates: int = 20_000,
    time_limit: float = 300.0,
    prefer_period_one: bool = True,
    allow_loops: bool = False,
    detect_budget: int = 400,
) -> Optional[LivelockInstance]:
    """Randomized search over full 2-in/2-out networks for a livelock.

    Candidates are enumerated from ``seed`` in a fixed order, so the result
    is reproducible.  With ``prefer_period_one`` the search keeps going
    after a first hit, for up to half the remaining candidates, looking for
    a configuration that maps onto itself after a single step.
    Returns None when nothing is found within the limits.
    """
    from .schemes import distance_priority, inverse_distance_priority

    if schemes_to_probe is None:
        schemes_to_probe = {
            "distance": lambda net: distance_priority(net.dist),
            "inverse-distance": lambda net: inverse_distance_priority(net.dist),
        }
    rng = random.Random(seed)
    deadline = time.monotonic() + time_limit
    sizes = [n for n in range(2, max_vertices + 1) if 2 * n <= max_edges]
    if not sizes:
        return None
    first: Optional[LivelockInstance] = None
    stop_at = max_candidates
    for tried in range(1, max_candidates + 1):
        if tried > stop_at or time.monotonic() > deadline:
            break
        n = sizes[(tried - 1) % len(sizes)]
        g = _two_regular_graphs(n, rng, allow_loops)
        net = Network(g)
        placements = [(e.id, rng.choice([v for v in range(n) if v != e.dst])) for e in g.edges]
        for name, factory in schemes_to_probe.items():
            rep = detect_livelock(net, factory(net), SaturatingInjector(), detect_budget, placements)
            if not rep.found:
                continue
            cyc = [(eid, p.destination) for eid, p in enumerate(rep.witness.occupancy) if p is not None]
            inst = LivelockInstance(g, cyc, name, rep, tried)
            if not prefer_period_one or rep.canonical_period == 1:
                return inst
            if first is None:
                first = inst
                stop_at = tried + (max_candidates - tried) // 2
    if first is not None:
        return first
    log.info("no livelock found in %d candidates", max_candidates)
    return None
