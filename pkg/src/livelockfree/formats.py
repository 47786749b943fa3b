"""Line-oriented network and scenario files.

Network::

    # comment
    vertices 3
    edge 0 0 1
    edge 1 1 2
    edge 2 2 0

A scenario bundle is a network section followed by ``packet <edge> <dest>``
lines (initial occupancy) and injection lines: ``inject <t> <src> <dst>``,
``inject-rate <p>`` or ``inject-saturate``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

from .injectors import CombinedInjector, RateInjector, SaturatingInjector, ScriptedInjector
from .simcore import Injector
from .topology import Edge, Multigraph


class FormatError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass
class Scenario:
    graph: Multigraph
    placements: list[tuple[int, int]] = field(default_factory=list)
    script: list[tuple[int, int, int]] = field(default_factory=list)
    rate: Optional[float] = None
    saturate: bool = False

    def injector(self) -> Injector:
        parts: list[Injector] = []
        if self.script:
            parts.append(ScriptedInjector(self.script))
        if self.rate is not None:
            parts.append(RateInjector(self.rate))
        if self.saturate:
            parts.append(SaturatingInjector())
        return parts[0] if len(parts) == 1 else CombinedInjector(parts)


def _ints(tokens: list[str], count: int, lineno: int, what: str) -> list[int]:
    if len(tokens) != count:
        raise FormatError(lineno, f"'{what}' expects {count} integer(s), got {len(tokens)}")
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise FormatError(lineno, f"'{what}' arguments must be integers") from None


def parse_scenario(text: str) -> Scenario:
    vertex_count: Optional[int] = None
    edges: dict[int, tuple[int, int]] = {}
    scen = Scenario(Multigraph(0, ()))
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *args = line.split()
        if vertex_count is None:
            if word != "vertices":
                raise FormatError(lineno, "first directive must be 'vertices <V>'")
            (vertex_count,) = _ints(args, 1, lineno, word)
            if vertex_count < 0:
                raise FormatError(lineno, "vertex count must be non-negative")
            continue
        if word == "edge":
            eid, src, dst = _ints(args, 3, lineno, word)
            if eid in edges:
                raise FormatError(lineno, f"duplicate edge id {eid}")
            for end in (src, dst):
                if not 0 <= end < vertex_count:
                    raise FormatError(lineno, f"vertex {end} out of range")
            edges[eid] = (src, dst)
        elif word == "packet":
            scen.placements.append(tuple(_ints(args, 2, lineno, word)))
        elif word == "inject":
            scen.script.append(tuple(_ints(args, 3, lineno, word)))
        elif word == "inject-rate":
            try:
                if len(args) != 1:
                    raise ValueError
                scen.rate = float(args[0])
            except ValueError:
                raise FormatError(lineno, "'inject-rate' expects one probability") from None
        elif word == "inject-saturate":
            scen.saturate = True
        else:
            raise FormatError(lineno, f"unknown directive {word!r}")
    if vertex_count is None:
        raise FormatError(0, "missing 'vertices' line")
    if sorted(edges) != list(range(len(edges))):
        raise FormatError(0, "edge ids must be exactly 0..E-1")
    scen.graph = Multigraph(vertex_count, tuple(Edge(i, *edges[i]) for i in range(len(edges))))
    for eid, dest in scen.placements:
        if not 0 <= eid < len(edges) or not 0 <= dest < vertex_count:
            raise FormatError(0, f"packet line ({eid}, {dest}) out of range")
    return scen


def read_network(path: Union[str, Path]) -> Multigraph:
    return parse_scenario(Path(path).read_text()).graph


def read_scenario(path: Union[str, Path]) -> Scenario:
    return parse_scenario(Path(path).read_text())


def format_network(g: Multigraph) -> str:
    lines = [f"vertices {g.vertex_count}"]
    lines += [f"edge {e.id} {e.src} {e.dst}" for e in g.edges]
    return "\n".join(lines) + "\n"


def format_scenario(scen: Scenario, comment: str = "") -> str:
    out = "".join(f"# {c}\n" for c in comment.splitlines()) + format_network(scen.graph)
    out += "".join(f"packet {e} {d}\n" for e, d in scen.placements)
    out += "".join(f"inject {t} {s} {d}\n" for t, s, d in scen.script)
    if scen.rate is not None:
        out += f"inject-rate {scen.rate}\n"
    if scen.saturate:
        out += "inject-saturate\n"
    return out


def write_network(path: Union[str, Path], g: Multigraph) -> None:
    Path(path).write_text(format_network(g))


def write_scenario(path: Union[str, Path], scen: Scenario, comment: str = "") -> None:
    Path(path).write_text(format_scenario(scen, comment))
