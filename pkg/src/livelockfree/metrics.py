"""CSV export of traces and the aggregate tables built from it."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from statistics import fmean
from typing import Iterable, Optional, Sequence, Union

from .simcore import PacketRecord, StepRow, Trace

PACKET_FIELDS = ["packet_id", "src", "dst", "entry", "exit", "latency", "label", "collisions", "promoted"]
STEP_FIELDS = ["t", "deliveries", "rejections", "in_flight"]


@dataclass
class MetricsSummary:
    delivered_count: int
    mean_latency: float
    max_latency: int
    rejected_count: int
    livelock_found: bool = False
    deadline_violations: int = 0
    T: Optional[int] = None

    def lines(self) -> list[str]:
        return [f"{k}: {v}" for k, v in asdict(self).items()]


def summarize(records: Sequence[PacketRecord], steps: Sequence[StepRow], T: Optional[int] = None,
              livelock_found: bool = False) -> MetricsSummary:
    lat = [r.latency for r in records]
    violations = sum(1 for x in lat if x > 2 * T) if T is not None else 0
    return MetricsSummary(
        delivered_count=len(lat),
        mean_latency=round(fmean(lat), 6) if lat else 0.0,
        max_latency=max(lat, default=0),
        rejected_count=sum(s.rejections for s in steps),
        livelock_found=livelock_found,
        deadline_violations=violations,
        T=T,
    )


def packets_csv(records: Iterable[PacketRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PACKET_FIELDS)
    for r in records:
        w.writerow([r.packet_id, r.src, r.dst, r.entry, r.exit, r.latency, r.label or "",
                    r.collisions, int(r.promoted)])
    return buf.getvalue()


def steps_csv(steps: Iterable[StepRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STEP_FIELDS)
    for s in steps:
        w.writerow([s.t, s.deliveries, s.rejections, s.in_flight])
    return buf.getvalue()


def write_trace(trace: Trace, out_dir: Union[str, Path]) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    p, s = out / "packets.csv", out / "steps.csv"
    p.write_text(packets_csv(trace.records))
    s.write_text(steps_csv(trace.steps))
    return p, s


def _bad(path, lineno, msg):
    return ValueError(f"{path}: row {lineno}: {msg}")


def read_packets_csv(path: Union[str, Path]) -> list[PacketRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PACKET_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(PACKET_FIELDS)}")
        out = []
        for i, row in enumerate(reader, start=2):
            try:
                out.append(PacketRecord(
                    int(row["packet_id"]), int(row["src"]), int(row["dst"]), int(row["entry"]),
                    int(row["exit"]), int(row["latency"]), row["label"] or None,
                    int(row["collisions"]), bool(int(row["promoted"])),
                ))
            except (TypeError, ValueError) as exc:
                raise _bad(path, i, exc) from None
    return out


def read_steps_csv(path: Union[str, Path]) -> list[StepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != STEP_FIELDS:
            raise ValueError(f"{path}: expected header {','.join(STEP_FIELDS)}")
        out = []
        for i, row in enumerate(reader, start=2):
            try:
                out.append(StepRow(int(row["t"]), int(row["deliveries"]), int(row["rejections"]),
                                   int(row["in_flight"])))
            except (TypeError, ValueError) as exc:
                raise _bad(path, i, exc) from None
    return out


def read_regions(path: Union[str, Path]) -> dict[str, set[int]]:
    """Region file: one ``<name> <v> <v> ...`` line per region, '#' comments."""
    regions = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].split()
        if not line:
            continue
        try:
            regions[line[0]] = {int(v) for v in line[1:]}
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: vertex ids must be integers") from None
    return regions


def latency_histogram(records: Sequence[PacketRecord]) -> list[tuple[int, int]]:
    return sorted(Counter(r.latency for r in records).items())


def region_means(records: Sequence[PacketRecord], regions: dict[str, set[int]]) -> list[tuple[str, str, int, Optional[float]]]:
    """Rows of (region, kind, count, mean latency).

    ``confined`` packets start and end inside the region; ``targeting``
    packets merely end there.
    """
    rows = []
    for name, verts in regions.items():
        confined = [r.latency for r in records if r.src in verts and r.dst in verts]
        targeting = [r.latency for r in records if r.dst in verts]
        rows.append((name, "confined", len(confined), fmean(confined) if confined else None))
        rows.append((name, "targeting", len(targeting), fmean(targeting) if targeting else None))
    return rows


def recovery_timeline(steps: Sequence[StepRow], window: int = 100) -> list[tuple[int, int, int, int]]:
    """Per window: (start tick, deliveries, rejections, peak in-flight)."""
    out = []
    for i in range(0, len(steps), window):
        chunk = steps[i:i + window]
        out.append((chunk[0].t, sum(s.deliveries for s in chunk), sum(s.rejections for s in chunk),
                    max(s.in_flight for s in chunk)))
    return out


def render_report(records: Sequence[PacketRecord], steps: Sequence[StepRow] = (),
                  regions: Optional[dict[str, set[int]]] = None, window: int = 100) -> str:
    out = ["latency histogram", "latency,count"]
    out += [f"{k},{v}" for k, v in latency_histogram(records)]
    if regions:
        out += ["", "region means", "region,kind,count,mean_latency"]
        out += [f"{n},{k},{c},{'' if m is None else f'{m:.4f}'}" for n, k, c, m in region_means(records, regions)]
    if steps:
        out += ["", "recovery timeline", "start,deliveries,rejections,peak_in_flight"]
        out += [",".join(map(str, row)) for row in recovery_timeline(steps, window)]
    return "\n".join(out) + "\n"
