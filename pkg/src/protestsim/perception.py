"""What each agent can see, computed from a start-of-tick snapshot.

All distances come from one all-pairs matrix per tick; ties on any "nearest"
query resolve to the lowest agent id because ids equal row indices and
``argmin`` returns the first minimum.
"""

from __future__ import annotations

import math
from enum import Enum
from typing import Dict, Iterator, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .geometry import Vector2
from .model import Agent, Scenario, Team, WorldState


class Relation(str, Enum):
    FRIENDLY = "friendly"
    NEUTRAL = "neutral"
    HOSTILE = "hostile"


def relation(team_a: Team, team_b: Team) -> Relation:
    if team_a is team_b:
        return Relation.FRIENDLY
    return Relation.HOSTILE


class MemberSet(Mapping[int, float]):
    """Read-only id -> distance view over row ``k`` of a batch of masks."""

    __slots__ = ("_masks", "_dists", "_k")

    def __init__(self, masks: np.ndarray, dists: np.ndarray, k: int = 0):
        self._masks = masks
        self._dists = dists
        self._k = k

    @property
    def _mask(self) -> np.ndarray:
        return self._masks[self._k] if self._masks.ndim == 2 else self._masks

    @property
    def _dist(self) -> np.ndarray:
        return self._dists[self._k] if self._dists.ndim == 2 else self._dists

    def _ids(self) -> np.ndarray:
        return np.flatnonzero(self._mask)

    def __getitem__(self, key: int) -> float:
        if 0 <= key < len(self._mask) and self._mask[key]:
            return float(self._dist[key])
        raise KeyError(key)

    def __iter__(self) -> Iterator[int]:
        return iter(self._ids().tolist())

    def __len__(self) -> int:
        return int(np.count_nonzero(self._mask))

    def __repr__(self) -> str:
        return f"MemberSet({dict(self)!r})"


class Contact(NamedTuple):
    id: int
    distance: float
    position: Vector2


Nearest = Optional[Contact]


class LeaderContact(NamedTuple):
    id: int
    distance: float
    position: Vector2
    in_sensor: bool
    in_comm: bool


class _Batch:
    """Vectorized sensing results for a set of observers; rows are read lazily."""

    def __init__(self, snap: "Snapshot", rows: np.ndarray):
        dist = snap.dist[rows]
        others = snap.alive[None, :] & (np.arange(snap.n)[None, :] != rows[:, None])
        hostile = snap.police[rows][:, None] != snap.police[None, :]
        in_sensor = dist <= snap.sensor[rows][:, None]
        in_weapon = dist <= snap.weapon[rows][:, None]
        wounded = snap.wounded[None, :]
        opp = others & hostile
        opp_s = opp & in_sensor
        opp_w = opp & in_weapon
        self.dist = dist
        self.masks = {
            "opp": opp_s,
            "opp_w": opp_w,
            "wopp": opp_s & wounded,
            "wopp_w": opp_w & wounded,
            "ally": others & ~hostile & in_sensor,
            "lead": others & ~hostile & snap.leader[None, :],
        }
        self.pos = [Vector2(x, y) for x, y in snap.pos.tolist()]
        self.sensor = snap.sensor.tolist()
        self.comm = snap.comm.tolist()
        self.rows = rows.tolist()
        self._nearest: Dict[str, List[Nearest]] = {}
        self._centroids: Optional[Tuple[List[int], List[float], List[float]]] = None

    def nearest(self, key: str, k: int) -> Nearest:
        hit = self._nearest.get(key)
        if hit is None:
            idx, best = _nearest(self.masks[key], self.dist)
            pos = self.pos
            hit = self._nearest[key] = [
                None if d == math.inf else Contact(j, d, pos[j])
                for j, d in zip(idx.tolist(), best.tolist())
            ]
        return hit[k]

    def centroid(self, k: int) -> Optional[Vector2]:
        if self._centroids is None:
            ally = self.masks["ally"]
            px = np.array([p.x for p in self.pos])
            py = np.array([p.y for p in self.pos])
            self._centroids = (
                ally.sum(axis=1).tolist(),
                np.where(ally, px[None, :], 0.0).sum(axis=1).tolist(),
                np.where(ally, py[None, :], 0.0).sum(axis=1).tolist(),
            )
        c, sx, sy = self._centroids
        if not c[k]:
            return None
        return Vector2(sx[k] / c[k], sy[k] / c[k])


class Perception:
    """One observer's view of the start-of-tick snapshot."""

    __slots__ = ("_b", "_k")

    def __init__(self, batch: _Batch, k: int):
        self._b = batch
        self._k = k

    def _set(self, key: str) -> MemberSet:
        return MemberSet(self._b.masks[key], self._b.dist, self._k)

    @property
    def opponents_in_sensor(self) -> Mapping[int, float]:
        return self._set("opp")

    @property
    def allies_in_sensor(self) -> Mapping[int, float]:
        return self._set("ally")

    @property
    def wounded_opponents_in_sensor(self) -> Mapping[int, float]:
        return self._set("wopp")

    @property
    def opponents_in_weapon_range(self) -> Mapping[int, float]:
        return self._set("opp_w")

    @property
    def wounded_opponents_in_weapon_range(self) -> Mapping[int, float]:
        return self._set("wopp_w")

    @property
    def nearest_opponent(self) -> Nearest:
        return self._b.nearest("opp", self._k)

    @property
    def nearest_opponent_in_weapon_range(self) -> Nearest:
        return self._b.nearest("opp_w", self._k)

    @property
    def nearest_wounded_opponent(self) -> Nearest:
        return self._b.nearest("wopp", self._k)

    @property
    def nearest_wounded_opponent_in_weapon_range(self) -> Nearest:
        return self._b.nearest("wopp_w", self._k)

    @property
    def nearest_ally(self) -> Nearest:
        return self._b.nearest("ally", self._k)

    @property
    def nearest_ally_distance(self) -> Optional[float]:
        c = self.nearest_ally
        return None if c is None else c.distance

    @property
    def ally_centroid(self) -> Optional[Vector2]:
        return self._b.centroid(self._k)

    @property
    def nearest_leader(self) -> Optional[LeaderContact]:
        c = self._b.nearest("lead", self._k)
        if c is None:
            return None
        i = self._b.rows[self._k]
        return LeaderContact(c.id, c.distance, c.position,
                             c.distance <= self._b.sensor[i], c.distance <= self._b.comm[i])

    FIELDS = (
        "opponents_in_sensor", "allies_in_sensor", "wounded_opponents_in_sensor",
        "opponents_in_weapon_range", "wounded_opponents_in_weapon_range", "nearest_opponent",
        "nearest_opponent_in_weapon_range", "nearest_wounded_opponent",
        "nearest_wounded_opponent_in_weapon_range", "nearest_leader", "nearest_ally", "ally_centroid",
    )

    def as_dict(self) -> Dict[str, object]:
        """Plain-value copy of every field (sets become dicts)."""
        out: Dict[str, object] = {}
        for name in self.FIELDS:
            v = getattr(self, name)
            out[name] = dict(v) if isinstance(v, MemberSet) else v
        return out

    def __repr__(self) -> str:
        return f"Perception({self.as_dict()!r})"


class Snapshot:
    """Column arrays of the agent table frozen at the start of a tick."""

    def __init__(self, world: WorldState, scenario: Scenario):
        agents = world.agents
        n = len(agents)
        self.n = n
        caps = scenario.capabilities
        self.pos = np.array([a.position for a in agents], dtype=float).reshape(n, 2)
        self.alive = np.array([a.health > 0.0 for a in agents], dtype=bool)
        self.police = np.array([a.team is Team.POLICE for a in agents], dtype=bool)
        self.leader = np.array([a.is_leader for a in agents], dtype=bool)
        self.wounded = np.array(
            [a.health < caps[a.archetype].max_health for a in agents], dtype=bool
        )
        self.sensor = np.array([caps[a.archetype].sensor_range for a in agents], dtype=float)
        self.comm = np.array([caps[a.archetype].comm_range for a in agents], dtype=float)
        self.weapon = np.array(
            [caps[a.archetype].weapon.max_range if caps[a.archetype].weapon else -1.0 for a in agents],
            dtype=float,
        )
        if n:
            dx = self.pos[:, 0][:, None] - self.pos[:, 0][None, :]
            dy = self.pos[:, 1][:, None] - self.pos[:, 1][None, :]
            self.dist = np.sqrt(dx * dx + dy * dy)
        else:
            self.dist = np.zeros((0, 0))


def _nearest(mask: np.ndarray, dist: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    masked = np.where(mask, dist, np.inf)
    idx = np.argmin(masked, axis=1) if masked.shape[1] else np.zeros(masked.shape[0], dtype=int)
    best = masked[np.arange(masked.shape[0]), idx] if masked.shape[1] else np.full(masked.shape[0], np.inf)
    return idx, best


def sense_rows(snap: Snapshot, rows: Sequence[int]) -> List[Perception]:
    """Perceptions for the observers in ``rows`` (ids), in that order."""
    rows = np.asarray(rows, dtype=int)
    if snap.n == 0 or rows.size == 0:
        return []
    batch = _Batch(snap, rows)
    return [Perception(batch, k) for k in range(rows.size)]


def sense_all(world: WorldState, scenario: Scenario) -> Dict[int, Perception]:
    """Perceptions for every living agent, keyed by id."""
    snap = Snapshot(world, scenario)
    ids = [a.id for a in world.agents if a.health > 0.0]
    return dict(zip(ids, sense_rows(snap, ids)))


def sense(agent: Agent, world: WorldState, scenario: Scenario) -> Perception:
    return sense_rows(Snapshot(world, scenario), [agent.id])[0]
