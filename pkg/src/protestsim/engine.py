"""Deterministic tick loop, goal evaluation, reports and batch replication."""

from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .behavior import active_profile, apply_movement, desire_vector
from .engagement import DamageEvent, apply_damage, check_triggers, firing_decision, resolve_fire
from .geometry import Vector2
from .model import (
    Count,
    ProfileKind,
    Scenario,
    SummaryReport,
    Team,
    WorldState,
    build_world,
    validate_scenario,
)
from .perception import Snapshot, sense_rows


@dataclass(frozen=True)
class AgentRow:
    id: int
    x: float
    y: float
    health: float
    active_profile: ProfileKind


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    agents: Tuple[AgentRow, ...]
    obstacles: Tuple[float, ...]
    events: Tuple[DamageEvent, ...]


@dataclass
class TickLog:
    """Optional per-tick side channel; the engine fills whatever is present."""

    events: List[DamageEvent] = field(default_factory=list)
    desires: Dict[int, Vector2] = field(default_factory=dict)
    triggered: List[int] = field(default_factory=list)
    perceptions: Dict[int, object] = field(default_factory=dict)


def tick(world: WorldState, scenario: Scenario, log: Optional[TickLog] = None) -> WorldState:
    """Advance ``world`` by one tick in place and return it."""
    agents = world.agents
    snap = Snapshot(world, scenario)
    living = [a for a in agents if a.health > 0.0]
    percs = sense_rows(snap, [a.id for a in living])
    rng = world.rng
    caps = scenario.capabilities

    # triggers see last tick's hits
    hit_before = world.hit_flags
    for a, p in zip(living, percs):
        if check_triggers(a, a.id in hit_before, p, scenario) and log is not None:
            log.triggered.append(a.id)

    positions = [a.position for a in agents]
    alive = snap.alive.tolist()
    pending: List[DamageEvent] = []
    for a, p in zip(living, percs):
        if caps[a.archetype].weapon is None or a.weapon_cooldown_remaining > 0:
            continue
        target = firing_decision(a, p, rng, world.obstacles, scenario)
        if target is not None:
            pending.extend(resolve_fire(a, target, positions, alive, rng, scenario, world.tick))
    events, hits = apply_damage(world, pending)

    for a, p in zip(living, percs):
        if a.health <= 0.0:
            continue
        profile = active_profile(a, scenario)
        v = desire_vector(a, p, scenario, profile)
        a.position = apply_movement(a, v, rng, world.obstacles, scenario, profile)
        if log is not None:
            log.desires[a.id] = v
            log.perceptions[a.id] = p

    prot = scenario.protected_area
    for a in agents:
        if a.health <= 0.0:
            continue
        if a.weapon_cooldown_remaining > 0:
            a.weapon_cooldown_remaining -= 1
        if not world.goal_breached and a.team is Team.PROTESTERS and prot.contains(a.position):
            world.goal_breached = True

    world.hit_flags = hits
    world.tick += 1
    if log is not None:
        log.events.extend(events)
    return world


def record(world: WorldState, tick_no: int, events: Sequence[DamageEvent]) -> TraceRecord:
    return TraceRecord(
        tick=tick_no,
        agents=tuple(AgentRow(a.id, a.position.x, a.position.y, a.health, a.active_profile)
                     for a in world.agents),
        obstacles=tuple(o.strength for o in world.obstacles),
        events=tuple(events),
    )


def terminated(world: WorldState, scenario: Scenario) -> bool:
    if world.tick >= scenario.max_ticks:
        return True
    for team in Team:
        side = [a for a in world.agents if a.team is team]
        if side and all(a.health <= 0.0 for a in side):
            return True
    return False


def goal_check(world: WorldState) -> bool:
    return not world.goal_breached


def summarize(world: WorldState, scenario: Scenario, seed: int) -> SummaryReport:
    caps = scenario.capabilities

    def tally(team: Team) -> Tuple[int, int, int]:
        side = [a for a in world.agents if a.team is team]
        dead = sum(1 for a in side if a.health <= 0.0)
        wounded = sum(1 for a in side if 0.0 < a.health < caps[a.archetype].max_health)
        return dead, wounded, len(side)

    def lost(team: Team) -> float:
        return sum(caps[a.archetype].max_health - a.health for a in world.agents if a.team is team)

    dp, wp, np_ = tally(Team.PROTESTERS)
    dc, wc, nc = tally(Team.POLICE)
    return SummaryReport(
        goal_achieved=goal_check(world),
        dead_protesters=Count(dp, np_),
        wounded_protesters=Count(wp, np_),
        dead_police=Count(dc, nc),
        wounded_police=Count(wc, nc),
        obstacles_destroyed=Count(sum(1 for o in world.obstacles if o.destroyed), len(world.obstacles)),
        protester_health_damage=Count(lost(Team.PROTESTERS), scenario.max_health_total(Team.PROTESTERS)),
        police_health_damage=Count(lost(Team.POLICE), scenario.max_health_total(Team.POLICE)),
        ticks_elapsed=world.tick,
        seed=seed,
    )


def run(
    scenario: Scenario, seed: Optional[int] = None, trace: bool = False
) -> Tuple[SummaryReport, Optional[List[TraceRecord]]]:
    """Build, tick to termination, report. Same (scenario, seed) -> same output."""
    validate_scenario(scenario)
    seed = scenario.seed if seed is None else seed
    world = build_world(scenario, seed)
    records: Optional[List[TraceRecord]] = [] if trace else None
    while not terminated(world, scenario):
        log = TickLog() if trace else None
        n = world.tick
        tick(world, scenario, log)
        if records is not None:
            records.append(record(world, n, log.events))
    return summarize(world, scenario, seed), records


REPORT_FIELDS = (
    "goal_achieved",
    "dead_protesters",
    "wounded_protesters",
    "dead_police",
    "wounded_police",
    "obstacles_destroyed",
    "protester_health_damage",
    "police_health_damage",
    "ticks_elapsed",
)


def report_value(report: SummaryReport, name: str) -> float:
    v = getattr(report, name)
    if isinstance(v, Count):
        return float(v.value)
    return float(v)


@dataclass(frozen=True)
class FieldStats:
    mean: float
    median: float
    min: float
    max: float


@dataclass(frozen=True)
class BatchResult:
    scenario: str
    reports: Tuple[SummaryReport, ...]
    stats: Dict[str, FieldStats]

    @property
    def seeds(self) -> List[int]:
        return [r.seed for r in self.reports]


def aggregate(name: str, reports: Iterable[SummaryReport]) -> BatchResult:
    rows = tuple(sorted(reports, key=lambda r: r.seed))
    stats = {}
    for f in REPORT_FIELDS:
        vals = [report_value(r, f) for r in rows]
        stats[f] = FieldStats(statistics.fmean(vals), statistics.median(vals), min(vals), max(vals))
    return BatchResult(name, rows, stats)


def _run_report(args: Tuple[Scenario, int]) -> SummaryReport:
    scenario, seed = args
    return run(scenario, seed)[0]


def run_batch(scenario: Scenario, seeds: Sequence[int], workers: int = 1) -> BatchResult:
    """Independent replications, one per seed; output ordered by seed."""
    if not seeds:
        raise ValueError("run_batch needs at least one seed")
    validate_scenario(scenario)
    jobs = [(scenario, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(_run_report, jobs))
    else:
        reports = [_run_report(j) for j in jobs]
    return aggregate(scenario.name, reports)


@dataclass(frozen=True)
class PairRow:
    seed: int
    a: SummaryReport
    b: SummaryReport


@dataclass(frozen=True)
class Comparison:
    a: BatchResult
    b: BatchResult

    @property
    def pairs(self) -> List[PairRow]:
        return [PairRow(x.seed, x, y) for x, y in zip(self.a.reports, self.b.reports)]

    def fraction(self, field_name: str, op: str = ">=") -> float:
        """Share of paired seeds where b <op> a on ``field_name``."""
        cmp = {">=": lambda y, x: y >= x, ">": lambda y, x: y > x, "<=": lambda y, x: y <= x,
               "<": lambda y, x: y < x, "==": lambda y, x: y == x}[op]
        rows = self.pairs
        hits = sum(1 for r in rows if cmp(report_value(r.b, field_name), report_value(r.a, field_name)))
        return hits / len(rows)


def compare(a: Scenario, b: Scenario, seeds: Sequence[int], workers: int = 1) -> Comparison:
    return Comparison(run_batch(a, seeds, workers), run_batch(b, seeds, workers))


__all__ = [
    "AgentRow", "BatchResult", "Comparison", "FieldStats", "PairRow", "REPORT_FIELDS", "TickLog",
    "TraceRecord", "aggregate", "compare", "goal_check", "report_value", "run", "run_batch",
    "summarize", "terminated", "tick",
]
