"""Weapon fire, damage bookkeeping and the being-hit trigger."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import FrozenSet, List, NamedTuple, Optional, Sequence, Tuple, Union

from .geometry import Vector2, segment_crossing
from .model import Agent, Obstacle, ProfileKind, Scenario, Team, WorldState
from .perception import Perception


class AgentTarget(NamedTuple):
    id: int
    position: Vector2


class ObstacleTarget(NamedTuple):
    id: int


Target = Union[AgentTarget, ObstacleTarget]


@dataclass(frozen=True)
class DamageEvent:
    source_id: int
    target: Target
    amount: float
    weapon: str
    tick: int
    # Filled by apply_damage: what the target actually lost after clamping.
    applied: Optional[float] = None


def forward_fence(agent: Agent, reach: float, obstacles: Sequence[Obstacle], scenario: Scenario) -> Optional[int]:
    """First intact fence on the agent's path toward the protected area, within ``reach``."""
    here = agent.position
    goal = scenario.protected_area.nearest_point(here)
    dx = goal.x - here.x
    dy = goal.y - here.y
    n = math.sqrt(dx * dx + dy * dy)
    if n == 0.0:
        return None
    end = Vector2(here.x + dx / n * reach, here.y + dy / n * reach)
    best = None
    best_t = math.inf
    for ob in obstacles:
        if ob.destroyed:
            continue
        t = segment_crossing(here, end, ob.segment[0], ob.segment[1])
        if t is not None and t < best_t:
            best, best_t = ob.id, t
    return best


def firing_decision(
    agent: Agent,
    p: Perception,
    rng: random.Random,
    obstacles: Sequence[Obstacle],
    scenario: Scenario,
) -> Optional[Target]:
    """Roll the firing likelihood and pick a target.

    Callers must only ask armed, living agents whose weapon is ready; exactly
    one draw is consumed.
    """
    weapon = scenario.capabilities[agent.archetype].weapon
    profile = scenario.profiles[agent.archetype].get(agent.active_profile)
    if rng.random() >= profile.firing_likelihood:
        return None
    near = p.nearest_opponent_in_weapon_range
    if near is not None:
        return AgentTarget(near.id, near.position)
    if agent.team is Team.PROTESTERS:
        fence = forward_fence(agent, weapon.max_range, obstacles, scenario)
        if fence is not None:
            return ObstacleTarget(fence)
    return None


def resolve_fire(
    attacker: Agent,
    target: Target,
    positions: Sequence[Vector2],
    alive: Sequence[bool],
    rng: random.Random,
    scenario: Scenario,
    tick: int,
) -> List[DamageEvent]:
    """Damage events for one shot; ``positions``/``alive`` are the tick snapshot."""
    weapon = scenario.capabilities[attacker.archetype].weapon
    attacker.weapon_cooldown_remaining = weapon.cooldown
    if isinstance(target, ObstacleTarget):
        return [DamageEvent(attacker.id, target, weapon.damage, weapon.name, tick)]
    if weapon.is_area:
        cx, cy = target.position
        r2 = weapon.area_radius * weapon.area_radius
        events = []
        for j, (x, y) in enumerate(positions):
            if alive[j] and (x - cx) ** 2 + (y - cy) ** 2 <= r2:
                events.append(DamageEvent(attacker.id, AgentTarget(j, positions[j]), weapon.damage,
                                          weapon.name, tick))
        return events
    if rng.random() < weapon.hit_probability:
        return [DamageEvent(attacker.id, target, weapon.damage, weapon.name, tick)]
    return []


def apply_damage(
    world: WorldState, events: Sequence[DamageEvent]
) -> Tuple[List[DamageEvent], FrozenSet[int]]:
    """Apply events in order; returns them with ``applied`` set, plus hit agent ids."""
    out = []
    hits = set()
    for ev in events:
        if isinstance(ev.target, ObstacleTarget):
            ob = world.obstacles[ev.target.id]
            applied = min(ob.strength, ev.amount)
            ob.strength -= applied
            if ob.strength <= 0.0:
                ob.strength = 0.0
                ob.destroyed = True
        else:
            agent = world.agents[ev.target.id]
            applied = min(agent.health, ev.amount)
            agent.health -= applied
            if agent.health <= 0.0:
                agent.health = 0.0
            world.damage[agent.team] += applied
            if ev.amount > 0:
                hits.add(agent.id)
        out.append(replace(ev, applied=applied))
    return out, frozenset(hits)


def check_triggers(agent: Agent, hit_flag: bool, p: Perception, scenario: Scenario) -> bool:
    """Latch the being-hit profile when its trigger fires; True if it swapped now."""
    if agent.trigger_latched or agent.health <= 0.0:
        return False
    if scenario.profiles[agent.archetype].being_hit is None:
        return False
    fired = hit_flag
    if not fired and agent.team is Team.POLICE and p.nearest_opponent is not None:
        fired = p.nearest_opponent.distance < scenario.police_proximity_trigger
    if fired:
        agent.trigger_latched = True
        agent.active_profile = ProfileKind.BEING_HIT
    return fired
