"""Shared builders for hand-made micro scenarios and worlds."""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Dict, Iterable, Optional, Sequence, Tuple

import pytest

from protestsim.geometry import Rect, Vector2
from protestsim.model import (
    Agent,
    AgentArchetype as A,
    ArchetypeProfiles,
    BehaviorProfile,
    Capabilities,
    Obstacle,
    ObstacleSeed,
    Scenario,
    Team,
    WeaponSpec,
    WorldState,
)
from protestsim.scenario_io import bundled_path, parse_scenario

STONE = WeaponSpec("stone", 20.0, 10.0, 0.3, 0.0, 5)
SHORT_GUN = WeaponSpec("short_gun", 50.0, 40.0, 0.7, 0.0, 10)
TEAR_GAS = WeaponSpec("tear_gas", 30.0, 5.0, 1.0, 5.0, 20)

NEUTRAL = BehaviorProfile()


def caps(max_health: float, weapon: Optional[WeaponSpec] = None, sensor: float = 50.0,
         comm: float = 100.0, speed: float = 1.5) -> Capabilities:
    return Capabilities(sensor, comm, speed, max_health, weapon)


DEFAULT_CAPS = {
    A.POLICE_PLASTIC_BULLET: caps(200, WeaponSpec("plastic_bullet", 40, 15, 0.6, 0, 5)),
    A.POLICE_TEAR_GAS: caps(200, TEAR_GAS),
    A.POLICE_WATER_CANNON: caps(200, WeaponSpec("water_cannon", 20, 10, 0.8, 0, 2)),
    A.POLICE_SHORT_GUN: caps(200, SHORT_GUN),
    A.PASSIVE_PROTESTER: caps(100),
    A.MODERATE_STONE: caps(100, STONE),
    A.AGGRESSIVE_STONE: caps(100, STONE),
    A.MODERATE_BATON: caps(100, WeaponSpec("baton", 2, 20, 0.8, 0, 3)),
    A.AGGRESSIVE_BATON: caps(100, WeaponSpec("baton", 2, 20, 0.8, 0, 3)),
    A.PROTEST_LEADER: caps(100, STONE),
}


def micro_scenario(
    profiles: Optional[Dict[A, ArchetypeProfiles]] = None,
    roster: Optional[Dict[A, int]] = None,
    capabilities: Optional[Dict[A, Capabilities]] = None,
    obstacles: Sequence[ObstacleSeed] = (),
    **kw,
) -> Scenario:
    """A 200 x 200 field; protected strip at the top; every archetype neutral unless overridden."""
    profs = {a: ArchetypeProfiles(NEUTRAL) for a in A}
    profs.update(profiles or {})
    cap = dict(DEFAULT_CAPS)
    cap.update(capabilities or {})
    weapons = {c.weapon.name: c.weapon for c in cap.values() if c.weapon is not None}
    base = dict(
        name="micro",
        terrain_bounds=Rect(-100, -100, 100, 100),
        protected_area=Rect(-100, 80, 100, 100),
        rally_point=Vector2(0, 40),
        spawn_area=Rect(-20, -60, 20, -40),
        police_line_y=70.0,
        obstacles=tuple(obstacles),
        weapons=weapons,
        capabilities=cap,
        profiles=profs,
        roster=roster or {},
        max_ticks=50,
    )
    base.update(kw)
    return Scenario(**base)


def place(
    scenario: Scenario,
    agents: Iterable[Tuple[A, Tuple[float, float]]],
    health: Optional[Dict[int, float]] = None,
    obstacles: Sequence[Tuple[Tuple[float, float], Tuple[float, float], float]] = (),
    seed: int = 0,
) -> WorldState:
    """World with agents at explicit positions; ids follow the given order."""
    out = []
    for i, (arch, (x, y)) in enumerate(agents):
        hp = scenario.capabilities[arch].max_health
        if health and i in health:
            hp = health[i]
        out.append(Agent(i, arch.team, arch, Vector2(float(x), float(y)), float(hp), is_leader=arch.is_leader))
    obs = [Obstacle(i, (Vector2(*a), Vector2(*b)), float(s), destroyed=s == 0)
           for i, (a, b, s) in enumerate(obstacles)]
    return WorldState(0, out, obs, {Team.POLICE: 0.0, Team.PROTESTERS: 0.0}, random.Random(seed))


@pytest.fixture(scope="session")
def case1() -> Scenario:
    return parse_scenario(bundled_path("case1"))


@pytest.fixture(scope="session")
def case2() -> Scenario:
    return parse_scenario(bundled_path("case2"))


@pytest.fixture
def short(case1):
    """case1 cut to 40 ticks, for tests that only need a few ticks of real dynamics."""
    return replace(case1, max_ticks=40)


# ---------------------------------------------------------------- acceptance summary

_CRITERIA: Dict[int, str] = {}
_OUTCOMES: Dict[int, list] = {}
_NOTES: Dict[int, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion the test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    n, text = mark.args
    _CRITERIA[n] = text
    _OUTCOMES.setdefault(n, []).append(rep.passed)


@pytest.fixture
def note(request):
    """Attach a line of measured numbers to the test's criterion summary."""
    mark = request.node.get_closest_marker("criterion")
    return lambda line: _NOTES.setdefault(mark.args[0], []).append(line)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok = all(_OUTCOMES[n])
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {_CRITERIA[n]}")
        for line in _NOTES.get(n, []):
            tr.write_line(f"    {line}")
