"""Behavior-weight steering: profile + perception -> desire vector -> step."""

from __future__ import annotations

import math
import random
from typing import Mapping, Optional, Sequence

from .geometry import ZERO, Vector2, direction, segment_crossing
from .model import (
    Agent,
    BehaviorName,
    BehaviorProfile,
    Obstacle,
    Scenario,
    SubBehaviorName,
)
from .perception import Perception

EPS = 1e-9
FENCE_CLEARANCE = 0.5

DesireVector = Vector2

_S = SubBehaviorName
_KEEP_LEADER = frozenset({_S.KEEP_LEADER_SENSOR_RANGE, _S.KEEP_LEADER_COMM_RANGE})


def active_profile(agent: Agent, scenario: Scenario) -> BehaviorProfile:
    return scenario.profiles[agent.archetype].get(agent.active_profile)


def _sub_target(sub: SubBehaviorName, p: Perception) -> Optional[Vector2]:
    if sub is _S.CLOSE_TO_OPPONENT or sub is _S.CLOSE_TO_OPPONENT_SENSOR_RANGE:
        c = p.nearest_opponent
    elif sub is _S.CLOSE_TO_OPPONENT_WEAPON_RANGE:
        c = p.nearest_opponent_in_weapon_range
    elif sub is _S.CLOSE_TO_WOUNDED_OPPONENT or sub is _S.CLOSE_TO_WOUNDED_OPPONENT_SENSOR_RANGE:
        c = p.nearest_wounded_opponent
    elif sub is _S.CLOSE_TO_WOUNDED_OPPONENT_WEAPON_RANGE:
        c = p.nearest_wounded_opponent_in_weapon_range
    else:
        c = p.nearest_leader
    return None if c is None else c.position


def compose_sub_behaviors(
    sub_weights: Mapping[SubBehaviorName, float], agent: Agent, p: Perception
) -> Vector2:
    """Signed-weight blend of unit vectors toward each sub-behavior's target.

    Sub-behaviors without a target are skipped; the blend is divided by the
    summed absolute weights of the ones that remain, so its norm is <= 1.
    A leader-keeping sub-behavior whose range is already satisfied still has a
    target and contributes a zero vector.
    """
    sx = sy = 0.0
    total = 0.0
    here = agent.position
    leader = None
    for sub, v in sub_weights.items():
        if v == 0.0:
            continue
        if sub in _KEEP_LEADER:
            leader = leader or p.nearest_leader
            if leader is None:
                continue
            total += abs(v)
            satisfied = leader.in_sensor if sub is _S.KEEP_LEADER_SENSOR_RANGE else leader.in_comm
            if satisfied:
                continue
            target = leader.position
        else:
            target = _sub_target(sub, p)
            if target is None:
                continue
            total += abs(v)
        u = direction(here, target)
        sx += v * u.x
        sy += v * u.y
    if total == 0.0:
        return ZERO
    return Vector2(sx / total, sy / total)


def behavior_direction(
    b: BehaviorName,
    agent: Agent,
    p: Perception,
    scenario: Scenario,
    profile: Optional[BehaviorProfile] = None,
) -> Vector2:
    profile = profile or active_profile(agent, scenario)
    here = agent.position
    if b is BehaviorName.OPPONENT:
        subs = profile.subs_of(b)
        if subs:
            return compose_sub_behaviors(subs, agent, p)
        near = p.nearest_opponent
        if near is not None and near.distance < scenario.standoff_radius:
            return direction(near.position, here)
        return ZERO
    if b is BehaviorName.ALLIED:
        near = p.nearest_ally
        if near is None:
            return ZERO
        lo, hi = scenario.spacing_band
        if near.distance < lo:
            return direction(near.position, here)
        if near.distance > hi and p.ally_centroid is not None:
            return direction(here, p.ally_centroid)
        return ZERO
    if b is BehaviorName.LEADERS:
        subs = profile.subs_of(b)
        if subs:
            return compose_sub_behaviors(subs, agent, p)
        if p.nearest_leader is not None:
            return direction(here, p.nearest_leader.position)
        return ZERO
    if b is BehaviorName.TERRAIN:
        rally = scenario.rally_point
        dx = rally.x - here.x
        dy = rally.y - here.y
        if math.sqrt(dx * dx + dy * dy) <= scenario.rally_radius:
            return ZERO
        return direction(here, rally)
    raise ValueError(f"unknown behavior {b!r}")


def desire_vector(
    agent: Agent,
    p: Perception,
    scenario: Scenario,
    profile: Optional[BehaviorProfile] = None,
) -> DesireVector:
    """Weighted sum of behavior directions over the active profile."""
    profile = profile or active_profile(agent, scenario)
    vx = vy = 0.0
    for b, w in profile.weights.items():
        if w == 0.0:
            continue
        d = behavior_direction(b, agent, p, scenario, profile)
        vx += w * d.x
        vy += w * d.y
    return Vector2(vx, vy)


def blocked_step(
    start: Vector2, end: Vector2, obstacles: Sequence[Obstacle]
) -> Optional[Vector2]:
    """Where a straight step from ``start`` to ``end`` must stop, if a fence is hit."""
    best = None
    minx, maxx = (start.x, end.x) if start.x <= end.x else (end.x, start.x)
    miny, maxy = (start.y, end.y) if start.y <= end.y else (end.y, start.y)
    for ob in obstacles:
        if ob.destroyed:
            continue
        a, c = ob.segment
        if max(a.x, c.x) < minx or min(a.x, c.x) > maxx or max(a.y, c.y) < miny or min(a.y, c.y) > maxy:
            continue
        t = segment_crossing(start, end, a, c)
        if t is not None and (best is None or t < best):
            best = t
    if best is None:
        return None
    dx = end.x - start.x
    dy = end.y - start.y
    length = math.sqrt(dx * dx + dy * dy)
    travel = max(0.0, best * length - FENCE_CLEARANCE)
    if length == 0.0:
        return start
    return Vector2(start.x + dx / length * travel, start.y + dy / length * travel)


def apply_movement(
    agent: Agent,
    v: DesireVector,
    rng: random.Random,
    obstacles: Sequence[Obstacle],
    scenario: Scenario,
    profile: Optional[BehaviorProfile] = None,
) -> Vector2:
    """Draw the movement roll and return the agent's new position.

    Exactly one draw is consumed regardless of outcome.
    """
    profile = profile or active_profile(agent, scenario)
    moves = rng.random() < profile.movement_likelihood
    n = math.sqrt(v.x * v.x + v.y * v.y)
    if not moves or n <= EPS:
        return agent.position
    speed = scenario.capabilities[agent.archetype].speed
    start = agent.position
    end = scenario.terrain_bounds.clamp(Vector2(start.x + speed * v.x / n, start.y + speed * v.y / n))
    stop = blocked_step(start, end, obstacles)
    return end if stop is None else stop
