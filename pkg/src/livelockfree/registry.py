"""Build schemes and wrappers from CLI spec strings.

Scheme specs are prefix expressions over ``:``-separated tokens::

    distance | inverse-distance | random | eulerian
    collisions:<base>:<max>
    promote:<sigma>:<tau>

so ``promote:collisions:random:3:inverse-distance`` is unambiguous.
Wrapper specs: ``none``, ``psr3:<T>``, ``ab2:<T>``, ``psr3:auto``,
``ab2:auto`` and ``auto`` (same as ``psr3:auto``).
"""

from __future__ import annotations

from typing import Optional, Union

from .livelock import EpochConfig, Variant, analytic_flush_bound, psr_wrap, two_state_wrap
from .schemes import (
    collision_counting,
    distance_priority,
    eulerian_scheme,
    inverse_distance_priority,
    promote,
    random_scheme,
)
from .simcore import Network, Scheme, as_network
from .topology import Multigraph, eulerian_circuit


class SpecError(ValueError):
    pass


def _parse(tokens: list[str], net: Network, seed: int) -> Scheme:
    if not tokens:
        raise SpecError("scheme spec ended early")
    head = tokens.pop(0)
    if head == "distance":
        return distance_priority(net.dist)
    if head == "inverse-distance":
        return inverse_distance_priority(net.dist)
    if head == "random":
        return random_scheme(seed)
    if head == "eulerian":
        return eulerian_scheme(eulerian_circuit(net.graph), net.graph)
    if head == "collisions":
        base = _parse(tokens, net, seed)
        if not tokens:
            raise SpecError("collisions:<base>:<max> is missing <max>")
        try:
            cap = int(tokens.pop(0))
        except ValueError:
            raise SpecError("collision cap must be an integer") from None
        return collision_counting(base, cap)
    if head == "promote":
        sigma = _parse(tokens, net, seed)
        tau = _parse(tokens, net, seed)
        return promote(sigma, tau)
    raise SpecError(f"unknown scheme {head!r}")


def build_scheme(spec: str, g: Union[Multigraph, Network], seed: int = 0) -> Scheme:
    tokens = spec.split(":")
    scheme = _parse(tokens, as_network(g), seed)
    if tokens:
        raise SpecError(f"trailing tokens in scheme spec: {':'.join(tokens)}")
    return scheme


def parse_wrapper(spec: Optional[str], g: Union[Multigraph, Network], base: Scheme) -> tuple[Scheme, Optional[int]]:
    """Wrap ``base`` as requested; returns the scheme and the epoch length T (or None)."""
    if spec in (None, "", "none"):
        return base, None
    if spec == "auto":
        spec = "psr3:auto"
    kind, _, arg = spec.partition(":")
    try:
        variant = Variant(kind)
    except ValueError:
        raise SpecError(f"unknown wrapper {spec!r}") from None
    if arg == "auto":
        T = analytic_flush_bound(as_network(g).graph, base)
    else:
        try:
            T = int(arg)
        except ValueError:
            raise SpecError(f"wrapper epoch length must be an integer or 'auto', got {arg!r}") from None
    cfg = EpochConfig(T, variant)
    wrap = psr_wrap if variant is Variant.PSR3 else two_state_wrap
    return wrap(base, cfg), T
