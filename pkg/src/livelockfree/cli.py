"""Command-line front end.

Exit codes: 0 success, 1 validation or parse failure, 2 invariant breach.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import formats, metrics
from .formats import FormatError, Scenario
from .injectors import PatternInjector, parse_injector
from .livelock import (
    FlushReport,
    LivelockInstance,
    detect_livelock,
    estimate_flush_time,
    find_livelock_example,
    flush_check,
    full_config,
    random_config,
)
from .registry import SpecError, build_scheme, parse_wrapper
from .simcore import InvariantBreach, Network, place_packets, run
from .topology import TopologyError, validate_network

log = logging.getLogger("livelockfree")


def cmd_validate(network_path) -> tuple[int, list[str]]:
    g = formats.read_network(network_path)
    result = validate_network(g)
    if result:
        return 0, [f"OK: {g.vertex_count} vertices, {g.edge_count} edges"]
    return 1, result.describe()


def _load(net_path=None, scenario_path=None) -> Scenario:
    if scenario_path:
        return formats.read_scenario(scenario_path)
    if net_path:
        return Scenario(formats.read_network(net_path))
    raise SpecError("need --net or --scenario")


def adversarial_pattern(scen: Scenario) -> PatternInjector:
    return LivelockInstance(scen.graph, scen.placements, "", None).adversarial_injector()


def cmd_simulate(scen: Scenario, scheme_spec: str, wrapper: Optional[str] = None, injector_spec: str = "none",
                 seed: int = 0, max_steps: int = 1000, out_dir=None, use_initial: bool = True):
    """Run one scenario; returns (MetricsSummary, Trace).  Writes CSVs when ``out_dir`` is given."""
    net = Network(scen.graph)
    base = build_scheme(scheme_spec, net, seed)
    scheme, T = parse_wrapper(wrapper, net, base)
    if injector_spec == "scenario":
        injector = scen.injector()
    elif injector_spec == "adversarial":
        injector = adversarial_pattern(scen)
    else:
        injector = parse_injector(injector_spec, scen.script)
    initial = place_packets(scen.graph, scen.placements, seed=seed) if use_initial and scen.placements else None
    trace = run(net, scheme, injector, max_steps, seed, initial=initial)
    summary = metrics.summarize(trace.records, trace.steps, T)
    if out_dir is not None:
        metrics.write_trace(trace, out_dir)
    return summary, trace


def cmd_flush(g, scheme_spec: str, config_source: str, budget: int, seed: int = 0) -> list[FlushReport]:
    net = Network(g)
    scheme = build_scheme(scheme_spec, net, seed)
    kind, _, rest = config_source.partition(":")
    if kind == "full":
        rng = random.Random(int(rest) if rest else seed)
        return [flush_check(net, scheme, full_config(g, rng), budget)]
    if kind == "random":
        trials, _, s = rest.partition(":")
        rng = random.Random(int(s) if s else seed)
        return [flush_check(net, scheme, random_config(g, rng), budget) for _ in range(int(trials))]
    if kind == "file":
        scen = formats.read_scenario(rest)
        return [flush_check(net, scheme, scen.placements, budget)]
    if kind == "empty":
        return [flush_check(net, scheme, [], budget)]
    raise SpecError(f"unknown config source {config_source!r}")


def _probe_factory(spec: str, seed: int):
    scheme_spec, _, wrapper = spec.partition("@")

    def factory(net):
        base = build_scheme(scheme_spec, net, seed)
        return parse_wrapper(wrapper or None, net, base)[0]

    return factory


def cmd_livelock_scan(max_vertices: int, max_edges: int, schemes: Sequence[str], out_dir=None, seed: int = 0,
                      max_candidates: int = 20_000, time_limit: float = 300.0) -> Optional[LivelockInstance]:
    probes = {s: _probe_factory(s, seed) for s in schemes}
    inst = find_livelock_example(max_vertices, max_edges, probes, seed=seed,
                                 max_candidates=max_candidates, time_limit=time_limit)
    if inst is not None and out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rep = inst.report
        note = (f"livelock under {inst.scheme_name} with a saturating source\n"
                f"cycle length {rep.cycle_length}, configuration period {rep.canonical_period}")
        formats.write_scenario(out / "figure1.scenario",
                               Scenario(inst.graph, inst.placements, saturate=True), note)
    return inst


def cmd_report(packets_csv, steps_csv=None, regions_path=None, window: int = 100) -> str:
    records = metrics.read_packets_csv(packets_csv)
    steps = metrics.read_steps_csv(steps_csv) if steps_csv else []
    regions = metrics.read_regions(regions_path) if regions_path else None
    return metrics.render_report(records, steps, regions, window)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="livelockfree", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check that a network is allowed")
    p.add_argument("network")

    p = sub.add_parser("simulate", help="run a scenario and write CSV traces")
    p.add_argument("--net")
    p.add_argument("--scenario")
    p.add_argument("--scheme", required=True)
    p.add_argument("--wrapper", default="none", help="none | psr3:<T> | ab2:<T> | psr3:auto | ab2:auto | auto")
    p.add_argument("--inject", default="none",
                   help="none | rate:<p> | saturate | burst:<start>:<stop> | scenario | adversarial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--out")
    p.add_argument("--detect-livelock", action="store_true", help="also run the cycle detector")

    p = sub.add_parser("flush", help="measure flush times with injection disabled")
    p.add_argument("--net", required=True)
    p.add_argument("--scheme", required=True)
    p.add_argument("--config", default="full", help="full[:seed] | random:<trials>:<seed> | file:<scenario> | empty")
    p.add_argument("--budget", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--analytic", action="store_true", help="also print the certified flush bound")

    p = sub.add_parser("livelock-scan", help="search small 2-in/2-out networks for a livelock")
    p.add_argument("--max-vertices", type=int, default=8)
    p.add_argument("--max-edges", type=int, default=16)
    p.add_argument("--schemes", default="distance,inverse-distance",
                   help="comma list of scheme specs, optionally '<scheme>@<wrapper>'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-candidates", type=int, default=20_000)
    p.add_argument("--time-limit", type=float, default=300.0)
    p.add_argument("--out", default=".")

    p = sub.add_parser("report", help="aggregate tables from a packets CSV")
    p.add_argument("packets_csv")
    p.add_argument("--steps")
    p.add_argument("--regions")
    p.add_argument("--window", type=int, default=100)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _dispatch(args)
    except InvariantBreach as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return 2
    except (FormatError, SpecError, TopologyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _dispatch(args) -> int:
    if args.command == "validate":
        code, lines = cmd_validate(args.network)
        print("\n".join(lines))
        return code

    if args.command == "simulate":
        scen = _load(args.net, args.scenario)
        summary, trace = cmd_simulate(scen, args.scheme, args.wrapper, args.inject, args.seed, args.steps, args.out)
        if args.detect_livelock:
            net = Network(scen.graph)
            scheme, _ = parse_wrapper(args.wrapper, net, build_scheme(args.scheme, net, args.seed))
            injector = adversarial_pattern(scen) if args.inject == "adversarial" else (
                scen.injector() if args.inject == "scenario" else parse_injector(args.inject, scen.script))
            rep = detect_livelock(net, scheme, injector, args.steps, scen.placements or None, args.seed)
            summary.livelock_found = rep.found
        print("\n".join(summary.lines()))
        return 0

    if args.command == "flush":
        g = formats.read_network(args.net)
        reports = cmd_flush(g, args.scheme, args.config, args.budget, args.seed)
        for r in reports:
            print(f"flushed={r.flushed} flush_time={r.flush_time} packets={r.packets} "
                  f"collisions={r.collisions} budget={r.budget}")
        if args.analytic:
            net = Network(g)
            print(f"analytic_bound={estimate_flush_time(net, build_scheme(args.scheme, net), 1, mode='analytic')}")
        return 0 if all(r.flushed for r in reports) else 1

    if args.command == "livelock-scan":
        specs = [s.strip() for s in args.schemes.split(",") if s.strip()]
        inst = cmd_livelock_scan(args.max_vertices, args.max_edges, specs, args.out, args.seed,
                                 args.max_candidates, args.time_limit)
        if inst is None:
            print("NOT_FOUND")
        else:
            rep = inst.report
            print(f"FOUND scheme={inst.scheme_name} vertices={inst.graph.vertex_count} "
                  f"cycle_length={rep.cycle_length} period={rep.canonical_period} "
                  f"candidates={inst.candidates_tried}")
            print(f"wrote {Path(args.out) / 'figure1.scenario'}")
        return 0

    if args.command == "report":
        sys.stdout.write(cmd_report(args.packets_csv, args.steps, args.regions, args.window))
        return 0
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
