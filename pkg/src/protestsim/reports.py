"""Report tables, JSONL traces with a replay footer, and SVG snapshots."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .engagement import ObstacleTarget
from .engine import TraceRecord, run
from .model import Count, Scenario, SummaryReport, build_world
from .scenario_io import BUNDLED, IoError, bundled_path, parse_scenario, scenario_digest

# (field, human label) in table order; the first eight are the outcome criteria.
REPORT_ROWS = (
    ("goal_achieved", "Achieved the goal?"),
    ("dead_protesters", "Dead protesters"),
    ("wounded_protesters", "Wounded protesters"),
    ("dead_police", "Dead police"),
    ("wounded_police", "Wounded police"),
    ("obstacles_destroyed", "Destroyed obstacles"),
    ("protester_health_damage", "Health damage to protesters"),
    ("police_health_damage", "Health damage to police"),
)

TRACE_VERSION = 1


class TickOutOfRange(ValueError):
    pass


class TraceError(ValueError):
    """A trace file is malformed or does not replay."""


def _num(x: float) -> Union[int, float]:
    return int(x) if float(x).is_integer() else x


# --------------------------------------------------------------------------
# reports


def format_report(report: SummaryReport) -> str:
    """Two-column text table: the eight criteria, then seed and ticks."""
    rows = []
    for name, label in REPORT_ROWS:
        v = getattr(report, name)
        rows.append((label, ("yes" if v else "no") if isinstance(v, bool) else str(v)))
    rows.append(("Seed", str(report.seed)))
    rows.append(("Ticks elapsed", str(report.ticks_elapsed)))
    width = max(len(label) for label, _ in rows)
    head = f"{'Criteria':<{width}}  Simulated result"
    lines = [head, "-" * len(head)]
    lines += [f"{label:<{width}}  {value}" for label, value in rows]
    return "\n".join(lines) + "\n"


def report_record(report: SummaryReport) -> Dict[str, Any]:
    """Flat key/value form; every count becomes ``<name>`` and ``<name>_total``."""
    out: Dict[str, Any] = {}
    for name, _ in REPORT_ROWS:
        v = getattr(report, name)
        if isinstance(v, Count):
            out[name] = _num(v.value)
            out[name + "_total"] = _num(v.total)
        else:
            out[name] = v
    out["seed"] = report.seed
    out["ticks_elapsed"] = report.ticks_elapsed
    return out


def record_report(rec: Dict[str, Any]) -> SummaryReport:
    """Inverse of :func:`report_record`."""
    kw: Dict[str, Any] = {}
    for name, _ in REPORT_ROWS:
        if name == "goal_achieved":
            kw[name] = bool(rec[name])
        else:
            kw[name] = Count(rec[name], rec[name + "_total"])
    return SummaryReport(ticks_elapsed=int(rec["ticks_elapsed"]), seed=int(rec["seed"]), **kw)


def emit_report(report: SummaryReport) -> Tuple[str, str]:
    """(human table, one-line JSON machine record)."""
    return format_report(report), json.dumps(report_record(report))


def parse_report(line: str) -> SummaryReport:
    return record_report(json.loads(line))


# --------------------------------------------------------------------------
# traces


def _event_row(ev) -> List[Any]:
    kind = "obstacle" if isinstance(ev.target, ObstacleTarget) else "agent"
    return [ev.source_id, kind, ev.target.id, _num(ev.amount), _num(ev.applied), ev.weapon]


def trace_lines(records: Sequence[TraceRecord]) -> List[str]:
    """One JSON object per tick; agents as [id, x, y, health, profile]."""
    out = []
    for r in records:
        out.append(json.dumps({
            "tick": r.tick,
            "agents": [[a.id, a.x, a.y, _num(a.health), a.active_profile.value] for a in r.agents],
            "obstacles": [_num(s) for s in r.obstacles],
            "events": [_event_row(ev) for ev in r.events],
        }, separators=(",", ":")))
    return out


def trace_footer(scenario: Scenario, seed: int, n_records: int) -> Dict[str, Any]:
    """Replay key (digest, seed) plus the static layout a snapshot needs."""
    roles = [a.archetype.value for a in build_world(scenario, seed).agents]
    return {
        "footer": {
            "trace_version": TRACE_VERSION,
            "scenario": scenario.name,
            "digest": scenario_digest(scenario),
            "seed": seed,
            "records": n_records,
            "layout": {
                "bounds": list(scenario.terrain_bounds),
                "protected_area": list(scenario.protected_area),
                "obstacles": [[*o.start, *o.end] for o in scenario.obstacles],
                "roles": roles,
            },
        }
    }


def trace_text(scenario: Scenario, seed: int, records: Sequence[TraceRecord]) -> str:
    lines = trace_lines(records)
    lines.append(json.dumps(trace_footer(scenario, seed, len(records)), separators=(",", ":")))
    return "\n".join(lines) + "\n"


def emit_trace(scenario: Scenario, seed: int, records: Sequence[TraceRecord], path: Union[str, Path]) -> None:
    try:
        Path(path).write_text(trace_text(scenario, seed, records), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write trace {path}: {exc.strerror or exc}") from None


@dataclass(frozen=True)
class Trace:
    records: List[Dict[str, Any]]
    footer: Dict[str, Any]
    text: str


def read_trace(path: Union[str, Path]) -> Trace:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read trace {path}: {exc.strerror or exc}") from None
    lines = text.splitlines()
    if not lines:
        raise TraceError(f"{path}: empty trace")
    try:
        rows = [json.loads(line) for line in lines]
    except json.JSONDecodeError as exc:
        raise TraceError(f"{path}: line {exc.lineno}: not JSON") from None
    if "footer" not in rows[-1]:
        raise TraceError(f"{path}: missing footer line")
    footer = rows[-1]["footer"]
    if footer.get("records") != len(rows) - 1:
        raise TraceError(f"{path}: footer says {footer.get('records')} records, found {len(rows) - 1}")
    return Trace(rows[:-1], footer, text)


def replay_trace(path: Union[str, Path], scenario: Optional[Scenario] = None) -> bool:
    """Re-run (scenario, seed) from the footer and compare byte for byte.

    Without ``scenario`` the digest is looked up among the bundled scenarios,
    with their tick limit set to the trace length.
    """
    tr = read_trace(path)
    digest, seed, n = tr.footer["digest"], tr.footer["seed"], tr.footer["records"]
    if scenario is None:
        for cand in _bundled_variants(n):
            if scenario_digest(cand) == digest:
                scenario = cand
                break
        if scenario is None:
            raise TraceError(f"{path}: no bundled scenario has digest {digest[:12]}")
    elif scenario_digest(scenario) != digest:
        raise TraceError(f"{path}: scenario digest mismatch")
    _, records = run(scenario, seed, trace=True)
    return trace_text(scenario, seed, records) == tr.text


def _bundled_variants(ticks: int) -> Iterable[Scenario]:
    for name in BUNDLED:
        s = parse_scenario(bundled_path(name))
        yield s
        yield replace(s, max_ticks=ticks)


# --------------------------------------------------------------------------
# snapshots

_PAD = 10.0
_SCALE = 4.0
_COLORS = {"police": "#1f4e9c", "protesters": "#c0392b", "leader": "#f1c40f", "dead": "#7f7f7f"}


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def snapshot_svg(trace: Trace, tick: int) -> str:
    """Positions at ``tick`` as a standalone SVG document."""
    ticks = [r["tick"] for r in trace.records]
    if tick not in ticks:
        lo, hi = (ticks[0], ticks[-1]) if ticks else (0, -1)
        raise TickOutOfRange(f"tick {tick} not in trace (range {lo}..{hi})")
    rec = trace.records[ticks.index(tick)]
    lay = trace.footer["layout"]
    x0, y0, x1, y1 = lay["bounds"]
    w = (x1 - x0) * _SCALE + 2 * _PAD
    h = (y1 - y0) * _SCALE + 2 * _PAD

    def px(x: float) -> str:
        return _fmt(_PAD + (x - x0) * _SCALE)

    def py(y: float) -> str:
        # north up: larger y is drawn higher
        return _fmt(_PAD + (y1 - y) * _SCALE)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" height="{_fmt(h)}" '
        f'viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
        f'<title>{_escape(trace.footer["scenario"])} seed {trace.footer["seed"]} tick {tick}</title>',
        f'<rect x="{px(x0)}" y="{py(y1)}" width="{_fmt((x1 - x0) * _SCALE)}" '
        f'height="{_fmt((y1 - y0) * _SCALE)}" fill="#fafafa" stroke="#333"/>',
    ]
    ax0, ay0, ax1, ay1 = lay["protected_area"]
    out.append(f'<rect class="protected-area" x="{px(ax0)}" y="{py(ay1)}" '
               f'width="{_fmt((ax1 - ax0) * _SCALE)}" height="{_fmt((ay1 - ay0) * _SCALE)}" '
               f'fill="#cfe8cf" stroke="#2e7d32"/>')
    for (sx, sy, ex, ey), strength in zip(lay["obstacles"], rec["obstacles"]):
        style = 'stroke="#6d4c41" stroke-width="3"' if strength > 0 else \
            'stroke="#bcaaa4" stroke-width="2" stroke-dasharray="4 3"'
        out.append(f'<line class="fence" x1="{px(sx)}" y1="{py(sy)}" x2="{px(ex)}" y2="{py(ey)}" {style}/>')
    roles = lay["roles"]
    for aid, x, y, health, _profile in rec["agents"]:
        role = roles[aid]
        cx, cy = px(x), py(y)
        if health <= 0:
            out.append(f'<path class="agent dead" d="M{cx} {cy}m-3 -3l6 6m0 -6l-6 6" '
                       f'stroke="{_COLORS["dead"]}" stroke-width="1.5"/>')
        elif role == "protest_leader":
            out.append(f'<path class="agent leader" d="M{cx} {cy}m0 -6l5 6l-5 6l-5 -6z" '
                       f'fill="{_COLORS["leader"]}" stroke="#000"/>')
        elif role.startswith("police"):
            out.append(f'<rect class="agent police" x="{_fmt(float(cx) - 3)}" y="{_fmt(float(cy) - 3)}" '
                       f'width="6" height="6" fill="{_COLORS["police"]}"/>')
        else:
            out.append(f'<circle class="agent protester" cx="{cx}" cy="{cy}" r="3" '
                       f'fill="{_COLORS["protesters"]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def emit_snapshot(trace: Union[Trace, str, Path], tick: int, path: Union[str, Path]) -> None:
    tr = trace if isinstance(trace, Trace) else read_trace(trace)
    svg = snapshot_svg(tr, tick)
    try:
        Path(path).write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write snapshot {path}: {exc.strerror or exc}") from None


__all__ = [
    "REPORT_ROWS", "TickOutOfRange", "Trace", "TraceError", "emit_report", "emit_snapshot", "emit_trace",
    "format_report", "parse_report", "read_trace", "record_report", "replay_trace", "report_record",
    "snapshot_svg", "trace_footer", "trace_lines", "trace_text",
]
