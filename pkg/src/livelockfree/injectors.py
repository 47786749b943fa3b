"""Traffic sources.

Random draws are keyed by (seed, clock), so every injector is a pure
function of the tick it is asked about.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .simcore import InjectionRequest, Injector, Network, rng_for


def _targets(net: Network, v: int) -> list[int]:
    return net.targets[v] if 0 <= v < len(net.targets) else []


class NoInjection(Injector):
    pass


@dataclass
class RateInjector(Injector):
    """Each router offers one packet per tick with probability ``p`` to a
    uniformly chosen reachable destination.  Give parts of a
    CombinedInjector distinct ``stream`` names so their draws are independent."""

    p: float
    sources: Optional[Sequence[int]] = None
    destinations: Optional[Sequence[int]] = None
    stream: str = "inject-rate"

    def requests(self, clock, net, seed):
        if self.p <= 0:
            return []
        rng = rng_for(seed, clock, self.stream)
        out = []
        for v in self.sources if self.sources is not None else net.active:
            if rng.random() < self.p:
                pool = _targets(net, v)
                if self.destinations is not None:
                    pool = [t for t in pool if t in self.destinations]
                if pool:
                    out.append(InjectionRequest(v, rng.choice(pool)))
        return out


@dataclass
class SaturatingInjector(Injector):
    """Every router offers one packet per output edge on every tick."""

    sources: Optional[Sequence[int]] = None
    destinations: Optional[Sequence[int]] = None
    start: int = 0
    stop: Optional[int] = None
    stream: str = "inject-saturate"

    def active_at(self, clock: int) -> bool:
        return clock >= self.start and (self.stop is None or clock < self.stop)

    def requests(self, clock, net, seed):
        if not self.active_at(clock):
            return []
        rng = rng_for(seed, clock, self.stream)
        out = []
        for v in self.sources if self.sources is not None else net.active:
            pool = _targets(net, v)
            if self.destinations is not None:
                pool = [t for t in pool if t in self.destinations]
            if not pool:
                continue
            out.extend(InjectionRequest(v, t) for t in rng.choices(pool, k=len(net.out_edges[v])))
        return out

    def phase(self, clock):
        if self.stop is not None and clock >= self.stop:
            return "done"
        if clock < self.start:
            return clock
        return "on"


@dataclass
class PatternInjector(Injector):
    """Saturating source with a fixed destination list per router.

    Router ``v`` offers ``pattern[v]`` in order on every tick.
    """

    pattern: Mapping[int, Sequence[int]]

    def requests(self, clock, net, seed):
        return [InjectionRequest(v, t) for v in sorted(self.pattern) for t in self.pattern[v]]


@dataclass
class ScriptedInjector(Injector):
    """Explicit ``(tick, source, destination)`` events."""

    events: Sequence[tuple[int, int, int]]
    _by_tick: dict = field(init=False, repr=False)

    def __post_init__(self):
        self._by_tick = {}
        for t, s, d in self.events:
            self._by_tick.setdefault(t, []).append(InjectionRequest(s, d))
        self._last = max((t for t, _, _ in self.events), default=-1)

    def requests(self, clock, net, seed):
        return list(self._by_tick.get(clock, ()))

    def phase(self, clock):
        return clock if clock <= self._last else "done"


@dataclass
class CombinedInjector(Injector):
    parts: Sequence[Injector]

    def requests(self, clock, net, seed):
        out = []
        for part in self.parts:
            out.extend(part.requests(clock, net, seed))
        return out

    def phase(self, clock):
        return tuple(p.phase(clock) for p in self.parts)


def parse_injector(spec: str, scripted: Iterable[tuple[int, int, int]] = ()) -> Injector:
    """``none`` | ``rate:<p>`` | ``saturate`` | ``burst:<start>:<stop>`` | ``script``."""
    kind, _, rest = spec.partition(":")
    if kind == "none":
        return NoInjection()
    if kind == "rate":
        return RateInjector(float(rest))
    if kind == "saturate":
        return SaturatingInjector()
    if kind == "burst":
        start, stop = (int(x) for x in rest.split(":"))
        return SaturatingInjector(start=start, stop=stop)
    if kind == "script":
        return ScriptedInjector(list(scripted))
    raise ValueError(f"unknown injector spec {spec!r}")
