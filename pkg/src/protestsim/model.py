"""Domain types, scenario validation and deterministic world construction."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Tuple

from .geometry import Rect, Vector2


class ScenarioError(Exception):
    """Base class for problems with a scenario definition."""


class ValidationError(ScenarioError):
    """A scenario violates a type invariant.

    ``path`` names the offending field as a tuple of keys so a file parser can
    map it back to a source line; ``line`` is filled in when known.
    """

    def __init__(self, message: str, path: Tuple[str, ...] = (), line: Optional[int] = None):
        self.message = message
        self.path = tuple(path)
        self.line = line
        super().__init__(self._render())

    def _render(self) -> str:
        where = ".".join(self.path)
        text = f"{where}: {self.message}" if where else self.message
        if self.line is not None:
            text = f"line {self.line}: {text}"
        return text

    def with_line(self, line: Optional[int]) -> "ValidationError":
        self.line = line
        self.args = (self._render(),)
        return self


class WeightOutOfRange(ValidationError):
    pass


class SubWeightOutOfRange(ValidationError):
    pass


class GeometryError(ValidationError):
    pass


class MissingProfile(ValidationError):
    pass


class CapacityError(ScenarioError):
    """The roster does not fit the deployment areas."""


class Team(str, Enum):
    POLICE = "police"
    PROTESTERS = "protesters"


class BehaviorName(str, Enum):
    OPPONENT = "opponent"
    ALLIED = "allied"
    LEADERS = "leaders"
    TERRAIN = "terrain"


# Alternative names accepted in scenario files.
BEHAVIOR_ALIASES: Dict[str, BehaviorName] = {
    "mission": BehaviorName.TERRAIN,
    "friend": BehaviorName.ALLIED,
    "commanders": BehaviorName.LEADERS,
}


class SubBehaviorName(str, Enum):
    CLOSE_TO_OPPONENT = "close_to_opponent"
    CLOSE_TO_OPPONENT_WEAPON_RANGE = "close_to_opponent_weapon_range"
    CLOSE_TO_OPPONENT_SENSOR_RANGE = "close_to_opponent_sensor_range"
    CLOSE_TO_WOUNDED_OPPONENT = "close_to_wounded_opponent"
    CLOSE_TO_WOUNDED_OPPONENT_WEAPON_RANGE = "close_to_wounded_opponent_weapon_range"
    CLOSE_TO_WOUNDED_OPPONENT_SENSOR_RANGE = "close_to_wounded_opponent_sensor_range"
    KEEP_LEADER_SENSOR_RANGE = "keep_leader_sensor_range"
    KEEP_LEADER_COMM_RANGE = "keep_leader_comm_range"

    @property
    def parent(self) -> BehaviorName:
        return _SUB_PARENT[self]


_SUB_PARENT = {
    s: BehaviorName.LEADERS if s.name.startswith("KEEP_LEADER") else BehaviorName.OPPONENT
    for s in SubBehaviorName
}
OPPONENT_SUBS = tuple(s for s in SubBehaviorName if s.parent is BehaviorName.OPPONENT)
LEADER_SUBS = tuple(s for s in SubBehaviorName if s.parent is BehaviorName.LEADERS)


class AgentArchetype(str, Enum):
    POLICE_PLASTIC_BULLET = "police_plastic_bullet"
    POLICE_TEAR_GAS = "police_tear_gas"
    POLICE_WATER_CANNON = "police_water_cannon"
    POLICE_SHORT_GUN = "police_short_gun"
    PASSIVE_PROTESTER = "passive_protester"
    MODERATE_STONE = "moderate_stone"
    AGGRESSIVE_STONE = "aggressive_stone"
    MODERATE_BATON = "moderate_baton"
    AGGRESSIVE_BATON = "aggressive_baton"
    PROTEST_LEADER = "protest_leader"

    @property
    def team(self) -> Team:
        return Team.POLICE if self.value.startswith("police") else Team.PROTESTERS

    @property
    def is_leader(self) -> bool:
        return self is AgentArchetype.PROTEST_LEADER

    @property
    def may_switch(self) -> bool:
        """Whether the archetype is allowed a being-hit profile at all."""
        return self not in NEVER_SWITCH


NEVER_SWITCH = frozenset(
    {AgentArchetype.MODERATE_STONE, AgentArchetype.MODERATE_BATON, AgentArchetype.PROTEST_LEADER}
)


class ProfileKind(str, Enum):
    DEFAULT = "default"
    BEING_HIT = "being_hit"


class LeaderCase(str, Enum):
    MODERATE = "moderate"
    AGGRESSIVE = "aggressive"


@dataclass(frozen=True)
class BehaviorProfile:
    weights: Mapping[BehaviorName, float] = field(default_factory=dict)
    sub_weights: Mapping[SubBehaviorName, float] = field(default_factory=dict)
    movement_likelihood: float = 0.0
    firing_likelihood: float = 0.0

    def weight(self, b: BehaviorName) -> float:
        return self.weights.get(b, 0.0)

    def __post_init__(self) -> None:
        by_parent: Dict[BehaviorName, Dict[SubBehaviorName, float]] = {}
        for s, v in self.sub_weights.items():
            if isinstance(s, SubBehaviorName) and v != 0.0:
                by_parent.setdefault(_SUB_PARENT[s], {})[s] = v
        object.__setattr__(self, "_by_parent", by_parent)

    def subs_of(self, parent: BehaviorName) -> Dict[SubBehaviorName, float]:
        """Nonzero sub-weights belonging to ``parent``."""
        return self._by_parent.get(parent, {})

    def scaled(self, c: float) -> "BehaviorProfile":
        """Copy with every weight and sub-weight multiplied by ``c``."""
        return BehaviorProfile(
            weights={b: w * c for b, w in self.weights.items()},
            sub_weights={s: v * c for s, v in self.sub_weights.items()},
            movement_likelihood=self.movement_likelihood,
            firing_likelihood=self.firing_likelihood,
        )


@dataclass(frozen=True)
class ArchetypeProfiles:
    default: BehaviorProfile
    being_hit: Optional[BehaviorProfile] = None

    def get(self, kind: ProfileKind) -> BehaviorProfile:
        if kind is ProfileKind.BEING_HIT and self.being_hit is not None:
            return self.being_hit
        return self.default


@dataclass(frozen=True)
class WeaponSpec:
    name: str
    max_range: float
    damage: float
    hit_probability: float
    area_radius: float = 0.0
    cooldown: int = 1

    @property
    def is_area(self) -> bool:
        return self.area_radius > 0.0


@dataclass(frozen=True)
class Capabilities:
    sensor_range: float
    comm_range: float
    speed: float
    max_health: float
    weapon: Optional[WeaponSpec] = None


@dataclass(frozen=True)
class ObstacleSeed:
    start: Vector2
    end: Vector2
    strength: float


@dataclass
class Agent:
    id: int
    team: Team
    archetype: AgentArchetype
    position: Vector2
    health: float
    active_profile: ProfileKind = ProfileKind.DEFAULT
    trigger_latched: bool = False
    is_leader: bool = False
    weapon_cooldown_remaining: int = 0

    @property
    def alive(self) -> bool:
        return self.health > 0.0


@dataclass
class Obstacle:
    id: int
    segment: Tuple[Vector2, Vector2]
    strength: float
    destroyed: bool = False


@dataclass(frozen=True)
class Scenario:
    name: str
    terrain_bounds: Rect
    protected_area: Rect
    rally_point: Vector2
    spawn_area: Rect
    police_line_y: float
    obstacles: Tuple[ObstacleSeed, ...]
    weapons: Mapping[str, WeaponSpec]
    capabilities: Mapping[AgentArchetype, Capabilities]
    profiles: Mapping[AgentArchetype, ArchetypeProfiles]
    roster: Mapping[AgentArchetype, int]
    leader_case: LeaderCase = LeaderCase.MODERATE
    max_ticks: int = 1000
    seed: int = 0
    standoff_radius: float = 15.0
    spacing_band: Tuple[float, float] = (1.5, 4.0)
    police_proximity_trigger: float = 10.0
    rally_radius: float = 1.0
    spawn_spacing: float = 2.0
    spawn_jitter: float = 0.5
    police_spacing: float = 2.0
    format_version: int = 1

    def count(self, team: Team) -> int:
        return sum(n for a, n in self.roster.items() if a.team is team)

    def max_health_total(self, team: Team) -> float:
        return sum(n * self.capabilities[a].max_health for a, n in self.roster.items() if a.team is team)


ValidatedScenario = Scenario


@dataclass(frozen=True)
class Count:
    """A numerator over a roster-derived denominator."""

    value: float
    total: float

    def __str__(self) -> str:
        return f"{_num(self.value)}/{_num(self.total)}"


def _num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else f"{x:g}"


@dataclass(frozen=True)
class SummaryReport:
    goal_achieved: bool
    dead_protesters: Count
    wounded_protesters: Count
    dead_police: Count
    wounded_police: Count
    obstacles_destroyed: Count
    protester_health_damage: Count
    police_health_damage: Count
    ticks_elapsed: int
    seed: int


def _check_profile(profile: BehaviorProfile, path: Tuple[str, ...]) -> None:
    for b, w in profile.weights.items():
        if not isinstance(b, BehaviorName):
            raise ValidationError(f"unknown behavior {b!r}", path + ("weights",))
        if not (math.isfinite(w) and 0.0 <= w <= 1.0):
            raise WeightOutOfRange(f"weight {w} outside [0, 1]", path + ("weights", b.value))
    for s, v in profile.sub_weights.items():
        if not isinstance(s, SubBehaviorName):
            raise ValidationError(f"unknown sub-behavior {s!r}", path + ("sub_weights",))
        if not (math.isfinite(v) and -1.0 <= v <= 1.0):
            raise SubWeightOutOfRange(f"sub-weight {v} outside [-1, 1]", path + ("sub_weights", s.value))
    for name in ("movement_likelihood", "firing_likelihood"):
        p = getattr(profile, name)
        if not (math.isfinite(p) and 0.0 <= p <= 1.0):
            raise ValidationError(f"{name} {p} outside [0, 1]", path + (name,))


def _check_rect(r: Rect, path: Tuple[str, ...]) -> None:
    if not all(math.isfinite(v) for v in r) or r.xmin >= r.xmax or r.ymin >= r.ymax:
        raise GeometryError(f"degenerate rectangle {tuple(r)}", path)


def _overlaps(a: Rect, b: Rect) -> bool:
    return a.xmin < b.xmax and b.xmin < a.xmax and a.ymin < b.ymax and b.ymin < a.ymax


def validate_scenario(raw: Scenario) -> ValidatedScenario:
    """Return ``raw`` unchanged if every invariant holds, else raise."""
    _check_rect(raw.terrain_bounds, ("terrain", "bounds"))
    _check_rect(raw.protected_area, ("terrain", "protected_area"))
    _check_rect(raw.spawn_area, ("terrain", "spawn_area"))
    if not raw.terrain_bounds.contains_rect(raw.protected_area):
        raise GeometryError("protected area lies outside terrain bounds", ("terrain", "protected_area"))
    if not raw.terrain_bounds.contains_rect(raw.spawn_area):
        raise GeometryError("spawn area lies outside terrain bounds", ("terrain", "spawn_area"))
    if _overlaps(raw.spawn_area, raw.protected_area):
        raise GeometryError("spawn area overlaps the protected area", ("terrain", "spawn_area"))
    if not raw.terrain_bounds.contains(raw.rally_point):
        raise GeometryError("rally point lies outside terrain bounds", ("terrain", "rally_point"))
    if not raw.terrain_bounds.ymin <= raw.police_line_y <= raw.terrain_bounds.ymax:
        raise GeometryError("police line lies outside terrain bounds", ("terrain", "police_line_y"))
    for i, ob in enumerate(raw.obstacles):
        if not (raw.terrain_bounds.contains(ob.start) and raw.terrain_bounds.contains(ob.end)):
            raise GeometryError("obstacle endpoint outside terrain bounds", ("obstacles", str(i)))
        if ob.start == ob.end:
            raise GeometryError("zero-length obstacle", ("obstacles", str(i)))
        if not (math.isfinite(ob.strength) and ob.strength >= 0):
            raise ValidationError("obstacle strength must be >= 0", ("obstacles", str(i), "strength"))

    for positive in ("rally_radius", "spawn_spacing", "police_spacing", "standoff_radius",
                     "police_proximity_trigger"):
        v = getattr(raw, positive)
        section = "terrain" if positive in ("rally_radius", "spawn_spacing", "police_spacing") else "rules"
        if not (math.isfinite(v) and v > 0):
            raise ValidationError(f"{positive} must be > 0", (section, positive))
    if not (math.isfinite(raw.spawn_jitter) and raw.spawn_jitter >= 0):
        raise ValidationError("spawn_jitter must be >= 0", ("terrain", "spawn_jitter"))
    lo, hi = raw.spacing_band
    if not (0 <= lo < hi):
        raise ValidationError("spacing band needs 0 <= min < max", ("rules", "spacing_band"))
    if raw.max_ticks < 0:
        raise ValidationError("max_ticks must be >= 0", ("run", "max_ticks"))

    for name, w in raw.weapons.items():
        path = ("weapons", name)
        if not w.max_range > 0:
            raise ValidationError("max_range must be > 0", path + ("max_range",))
        if not w.damage >= 0:
            raise ValidationError("damage must be >= 0", path + ("damage",))
        if not 0.0 <= w.hit_probability <= 1.0:
            raise ValidationError("hit_probability outside [0, 1]", path + ("hit_probability",))
        if not w.area_radius >= 0:
            raise ValidationError("area_radius must be >= 0", path + ("area_radius",))
        if not (isinstance(w.cooldown, int) and w.cooldown >= 1):
            raise ValidationError("cooldown must be an integer >= 1", path + ("cooldown",))

    for arch, n in raw.roster.items():
        if n < 0:
            raise ValidationError("count must be >= 0", ("roster", arch.value))
        if n == 0:
            continue
        if arch not in raw.capabilities:
            raise MissingProfile(f"no capabilities for {arch.value}", ("roster", arch.value))
        if arch not in raw.profiles:
            raise MissingProfile(f"no profile for {arch.value}", ("roster", arch.value))

    for arch, caps in raw.capabilities.items():
        path = ("capabilities", arch.value)
        for attr in ("sensor_range", "comm_range", "speed", "max_health"):
            if not getattr(caps, attr) > 0:
                raise ValidationError(f"{attr} must be > 0", path + (attr,))

    for arch, profs in raw.profiles.items():
        path = ("profiles", arch.value)
        _check_profile(profs.default, path + ("default",))
        if profs.being_hit is not None:
            if not arch.may_switch:
                raise ValidationError(f"{arch.value} never changes behavior; being_hit not allowed",
                                      path + ("being_hit",))
            _check_profile(profs.being_hit, path + ("being_hit",))
    return raw


@dataclass
class WorldState:
    tick: int
    agents: List[Agent]
    obstacles: List[Obstacle]
    damage: Dict[Team, float]
    rng: random.Random
    goal_breached: bool = False
    hit_flags: frozenset = frozenset()

    def living(self, team: Optional[Team] = None) -> List[Agent]:
        return [a for a in self.agents if a.alive and (team is None or a.team is team)]


# Front-to-back fill order for the protester grid; the leader takes the cell
# nearest the spawn centre before anyone else is placed.
SPAWN_ORDER = (
    AgentArchetype.AGGRESSIVE_BATON,
    AgentArchetype.AGGRESSIVE_STONE,
    AgentArchetype.MODERATE_BATON,
    AgentArchetype.MODERATE_STONE,
    AgentArchetype.PASSIVE_PROTESTER,
)


def _grid_cells(area: Rect, spacing: float) -> List[Vector2]:
    nx = int(math.floor(area.width / spacing + 1e-9)) + 1
    ny = int(math.floor(area.height / spacing + 1e-9)) + 1
    x0 = area.xmin + (area.width - (nx - 1) * spacing) / 2.0
    y0 = area.ymin + (area.height - (ny - 1) * spacing) / 2.0
    return [Vector2(x0 + i * spacing, y0 + j * spacing) for j in range(ny) for i in range(nx)]


def build_world(scenario: Scenario, seed: int) -> WorldState:
    """Place every rostered agent and obstacle; deterministic in (scenario, seed)."""
    validate_scenario(scenario)
    rng = random.Random(seed)
    agents: List[Agent] = []

    def make(arch: AgentArchetype, pos: Vector2) -> Agent:
        caps = scenario.capabilities[arch]
        return Agent(
            id=len(agents), team=arch.team, archetype=arch, position=pos,
            health=float(caps.max_health), is_leader=arch.is_leader,
        )

    bounds = scenario.terrain_bounds
    n_police = scenario.count(Team.POLICE)
    cx = scenario.rally_point.x
    k = 0
    for arch in AgentArchetype:
        if arch.team is not Team.POLICE:
            continue
        for _ in range(scenario.roster.get(arch, 0)):
            pos = Vector2(cx + (k - (n_police - 1) / 2.0) * scenario.police_spacing, scenario.police_line_y)
            if not bounds.contains(pos) or scenario.protected_area.contains(pos):
                raise CapacityError(f"police line of {n_police} does not fit inside the terrain")
            agents.append(make(arch, pos))
            k += 1

    protesters = [a for a in AgentArchetype for _ in range(scenario.roster.get(a, 0))
                  if a.team is Team.PROTESTERS]
    cells = _grid_cells(scenario.spawn_area, scenario.spawn_spacing)
    if len(protesters) > len(cells):
        raise CapacityError(
            f"{len(protesters)} protesters do not fit {len(cells)} spawn cells at {scenario.spawn_spacing} m"
        )
    centre = Vector2((scenario.spawn_area.xmin + scenario.spawn_area.xmax) / 2.0,
                     (scenario.spawn_area.ymin + scenario.spawn_area.ymax) / 2.0)
    prot = scenario.protected_area
    free = sorted(cells, key=lambda c: (_dist(c, prot.nearest_point(c)), abs(c.x - centre.x), c.x, c.y))
    assigned: Dict[int, Vector2] = {}
    order = sorted(range(len(protesters)), key=lambda i: _spawn_rank(protesters[i]))
    for i in order:
        arch = protesters[i]
        if arch.is_leader:
            cell = min(free, key=lambda c: (_dist(c, centre), c.x, c.y))
            free.remove(cell)
        else:
            cell = free.pop(0)
        assigned[i] = cell
    j = scenario.spawn_jitter
    for i, arch in enumerate(protesters):
        c = assigned[i]
        pos = Vector2(c.x + rng.uniform(-j, j), c.y + rng.uniform(-j, j))
        agents.append(make(arch, scenario.spawn_area.clamp(pos)))

    obstacles = [
        Obstacle(id=i, segment=(ob.start, ob.end), strength=float(ob.strength), destroyed=ob.strength == 0)
        for i, ob in enumerate(scenario.obstacles)
    ]
    return WorldState(
        tick=0, agents=agents, obstacles=obstacles,
        damage={Team.POLICE: 0.0, Team.PROTESTERS: 0.0}, rng=rng,
    )


def _spawn_rank(arch: AgentArchetype) -> int:
    if arch.is_leader:
        return -1
    return SPAWN_ORDER.index(arch)


def _dist(a: Vector2, b: Vector2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)
