"""Scenario files: YAML in, YAML out, with source lines on every error.

The document is read through PyYAML's node API rather than ``safe_load`` so
that duplicate keys can be rejected and every value keeps its line/column.

Layout (all sections are mappings unless noted)::

    format_version: 1
    name: case1
    leader_case: moderate | aggressive
    run:          {max_ticks, seed}
    terrain:      {bounds, protected_area, spawn_area: [xmin, ymin, xmax, ymax],
                   rally_point: [x, y], rally_radius, police_line_y,
                   police_spacing, spawn_spacing, spawn_jitter}
    rules:        {standoff_radius, spacing_band: [min, max], police_proximity_trigger}
    obstacles:    list of {start: [x, y], end: [x, y], strength}
    weapons:      name -> {max_range, damage, hit_probability, area_radius, cooldown}
    capabilities: archetype -> {sensor_range, comm_range, speed, max_health, weapon}
    profiles:     archetype -> {default: PROFILE, being_hit: PROFILE}
    roster:       archetype -> count

    PROFILE = {weights: {behavior: w}, sub_weights: {sub_behavior: v},
               movement_likelihood, firing_likelihood}
"""

from __future__ import annotations

import hashlib
from importlib import resources
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from .geometry import Rect, Vector2
from .model import (
    BEHAVIOR_ALIASES,
    AgentArchetype,
    ArchetypeProfiles,
    BehaviorName,
    BehaviorProfile,
    Capabilities,
    LeaderCase,
    ObstacleSeed,
    Scenario,
    ScenarioError,
    SubBehaviorName,
    ValidationError,
    WeaponSpec,
    validate_scenario,
)

FORMAT_VERSION = 1
BUNDLED = ("case1", "case2")

Path_ = Tuple[str, ...]


class ParseError(ScenarioError):
    """Malformed document: bad syntax, wrong shape, unknown or duplicate key."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        where = f"line {line}, column {column}: " if line is not None else ""
        super().__init__(where + message)


class IoError(ScenarioError):
    """The scenario file could not be read or written."""


# --------------------------------------------------------------------------
# node tree -> plain values with a path -> position index


class _Doc:
    def __init__(self) -> None:
        self.marks: Dict[Path_, Tuple[int, int]] = {}

    def fail(self, message: str, path: Path_) -> ParseError:
        line, col = self.position(path)
        return ParseError(message, line, col)

    def position(self, path: Path_) -> Tuple[int, int]:
        while path not in self.marks and path:
            path = path[:-1]
        return self.marks.get(path, (1, 1))

    def convert(self, node: yaml.Node, path: Path_) -> Any:
        self.marks[path] = (node.start_mark.line + 1, node.start_mark.column + 1)
        if isinstance(node, yaml.MappingNode):
            out: Dict[str, Any] = {}
            for knode, vnode in node.value:
                if not isinstance(knode, yaml.ScalarNode):
                    raise ParseError("mapping keys must be plain names",
                                     knode.start_mark.line + 1, knode.start_mark.column + 1)
                key = str(_scalar(knode))
                if key in out:
                    raise ParseError(f"duplicate key {key!r}",
                                     knode.start_mark.line + 1, knode.start_mark.column + 1)
                out[key] = self.convert(vnode, path + (key,))
                # errors about an entry point at its key, not wherever the value starts
                self.marks[path + (key,)] = (knode.start_mark.line + 1, knode.start_mark.column + 1)
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self.convert(v, path + (str(i),)) for i, v in enumerate(node.value)]
        return _scalar(node)


_constructor = yaml.constructor.SafeConstructor()


def _scalar(node: yaml.ScalarNode) -> Any:
    return _constructor.construct_object(node, deep=True)


# --------------------------------------------------------------------------
# schema helpers


class _Reader:
    def __init__(self, doc: _Doc):
        self.doc = doc

    def mapping(self, value: Any, path: Path_, required: Tuple[str, ...] = (),
                optional: Tuple[str, ...] = ()) -> Dict[str, Any]:
        if not isinstance(value, dict):
            raise self.doc.fail(f"{_dotted(path)} must be a mapping", path)
        allowed = set(required) | set(optional)
        for key in value:
            if allowed and key not in allowed:
                raise self.doc.fail(f"unknown key {key!r} in {_dotted(path)}", path + (key,))
        for key in required:
            if key not in value:
                raise self.doc.fail(f"missing key {key!r} in {_dotted(path)}", path)
        return value

    def number(self, value: Any, path: Path_) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.doc.fail(f"{_dotted(path)} must be a number", path)
        return float(value)

    def integer(self, value: Any, path: Path_) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.doc.fail(f"{_dotted(path)} must be an integer", path)
        return value

    def numbers(self, value: Any, path: Path_, n: int) -> Tuple[float, ...]:
        if not isinstance(value, list) or len(value) != n:
            raise self.doc.fail(f"{_dotted(path)} must be a list of {n} numbers", path)
        return tuple(self.number(v, path + (str(i),)) for i, v in enumerate(value))

    def enum(self, cls, value: Any, path: Path_, aliases: Optional[Dict[str, Any]] = None):
        if isinstance(value, str):
            if aliases and value in aliases:
                return aliases[value]
            try:
                return cls(value)
            except ValueError:
                pass
        choices = ", ".join(m.value for m in cls)
        raise self.doc.fail(f"{value!r} is not one of: {choices}", path)


def _dotted(path: Path_) -> str:
    return ".".join(path) if path else "document"


_PROFILE_KEYS = ("weights", "sub_weights", "movement_likelihood", "firing_likelihood")
_WEAPON_KEYS = ("max_range", "damage", "hit_probability", "area_radius", "cooldown")
_CAPS_KEYS = ("sensor_range", "comm_range", "speed", "max_health")
_TERRAIN_REQUIRED = ("bounds", "protected_area", "spawn_area", "rally_point", "police_line_y")
_TERRAIN_OPTIONAL = ("rally_radius", "police_spacing", "spawn_spacing", "spawn_jitter")
_RULES = ("standoff_radius", "spacing_band", "police_proximity_trigger")


def _profile(r: _Reader, raw: Any, path: Path_) -> BehaviorProfile:
    m = r.mapping(raw, path, optional=_PROFILE_KEYS)
    weights = {}
    for k, v in r.mapping(m.get("weights", {}), path + ("weights",)).items():
        b = r.enum(BehaviorName, k, path + ("weights", k), BEHAVIOR_ALIASES)
        if b in weights:
            raise r.doc.fail(f"behavior {b.value!r} given twice", path + ("weights", k))
        weights[b] = r.number(v, path + ("weights", k))
    subs = {}
    for k, v in r.mapping(m.get("sub_weights", {}), path + ("sub_weights",)).items():
        subs[r.enum(SubBehaviorName, k, path + ("sub_weights", k))] = r.number(v, path + ("sub_weights", k))
    return BehaviorProfile(
        weights=weights,
        sub_weights=subs,
        movement_likelihood=r.number(m.get("movement_likelihood", 0.0), path + ("movement_likelihood",)),
        firing_likelihood=r.number(m.get("firing_likelihood", 0.0), path + ("firing_likelihood",)),
    )


def _build(data: Any, doc: _Doc) -> Scenario:
    r = _Reader(doc)
    top = r.mapping(
        data, (),
        required=("format_version", "terrain", "weapons", "capabilities", "profiles", "roster"),
        optional=("name", "leader_case", "run", "rules", "obstacles"),
    )
    version = r.integer(top["format_version"], ("format_version",))
    if version != FORMAT_VERSION:
        raise doc.fail(f"unsupported format_version {version} (expected {FORMAT_VERSION})",
                       ("format_version",))

    t = r.mapping(top["terrain"], ("terrain",), _TERRAIN_REQUIRED, _TERRAIN_OPTIONAL)
    tp = ("terrain",)
    extra: Dict[str, Any] = {}
    for k in _TERRAIN_OPTIONAL:
        if k in t:
            extra[k] = r.number(t[k], tp + (k,))

    rules = r.mapping(top.get("rules", {}), ("rules",), optional=_RULES)
    if "spacing_band" in rules:
        extra["spacing_band"] = r.numbers(rules["spacing_band"], ("rules", "spacing_band"), 2)
    for k in ("standoff_radius", "police_proximity_trigger"):
        if k in rules:
            extra[k] = r.number(rules[k], ("rules", k))

    run = r.mapping(top.get("run", {}), ("run",), optional=("max_ticks", "seed"))
    for k in ("max_ticks", "seed"):
        if k in run:
            extra[k] = r.integer(run[k], ("run", k))

    weapons = {}
    for name, w in r.mapping(top["weapons"], ("weapons",)).items():
        wp = ("weapons", name)
        m = r.mapping(w, wp, required=("max_range", "damage", "hit_probability"), optional=_WEAPON_KEYS)
        weapons[name] = WeaponSpec(
            name=name,
            max_range=r.number(m["max_range"], wp + ("max_range",)),
            damage=r.number(m["damage"], wp + ("damage",)),
            hit_probability=r.number(m["hit_probability"], wp + ("hit_probability",)),
            area_radius=r.number(m.get("area_radius", 0.0), wp + ("area_radius",)),
            cooldown=r.integer(m.get("cooldown", 1), wp + ("cooldown",)),
        )

    caps = {}
    for key, c in r.mapping(top["capabilities"], ("capabilities",)).items():
        cp = ("capabilities", key)
        arch = r.enum(AgentArchetype, key, cp)
        m = r.mapping(c, cp, required=_CAPS_KEYS, optional=("weapon",))
        weapon = m.get("weapon")
        if weapon is not None and weapon not in weapons:
            raise doc.fail(f"capabilities.{key}.weapon names unknown weapon {weapon!r}", cp + ("weapon",))
        caps[arch] = Capabilities(
            *(r.number(m[k], cp + (k,)) for k in _CAPS_KEYS),
            weapon=weapons[weapon] if weapon is not None else None,
        )

    profiles = {}
    for key, p in r.mapping(top["profiles"], ("profiles",)).items():
        pp = ("profiles", key)
        arch = r.enum(AgentArchetype, key, pp)
        m = r.mapping(p, pp, required=("default",), optional=("being_hit",))
        hit = m.get("being_hit")
        profiles[arch] = ArchetypeProfiles(
            default=_profile(r, m["default"], pp + ("default",)),
            being_hit=None if hit is None else _profile(r, hit, pp + ("being_hit",)),
        )

    roster = {}
    for key, n in r.mapping(top["roster"], ("roster",)).items():
        roster[r.enum(AgentArchetype, key, ("roster", key))] = r.integer(n, ("roster", key))

    obstacles = []
    raw_obs = top.get("obstacles", [])
    if not isinstance(raw_obs, list):
        raise doc.fail("obstacles must be a list", ("obstacles",))
    for i, ob in enumerate(raw_obs):
        op = ("obstacles", str(i))
        m = r.mapping(ob, op, required=("start", "end", "strength"))
        obstacles.append(ObstacleSeed(
            Vector2(*r.numbers(m["start"], op + ("start",), 2)),
            Vector2(*r.numbers(m["end"], op + ("end",), 2)),
            r.number(m["strength"], op + ("strength",)),
        ))

    name = top.get("name", "scenario")
    if not isinstance(name, str):
        raise doc.fail("name must be a string", ("name",))

    return Scenario(
        name=name,
        terrain_bounds=Rect(*r.numbers(t["bounds"], tp + ("bounds",), 4)),
        protected_area=Rect(*r.numbers(t["protected_area"], tp + ("protected_area",), 4)),
        rally_point=Vector2(*r.numbers(t["rally_point"], tp + ("rally_point",), 2)),
        spawn_area=Rect(*r.numbers(t["spawn_area"], tp + ("spawn_area",), 4)),
        police_line_y=r.number(t["police_line_y"], tp + ("police_line_y",)),
        obstacles=tuple(obstacles),
        weapons=weapons,
        capabilities=caps,
        profiles=profiles,
        roster=roster,
        leader_case=r.enum(LeaderCase, top.get("leader_case", "moderate"), ("leader_case",)),
        format_version=version,
        **extra,
    )


# --------------------------------------------------------------------------
# public API


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    """Parse and validate scenario text."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.MarkedYAMLError as exc:
        mark = exc.problem_mark or exc.context_mark
        line = mark.line + 1 if mark else None
        col = mark.column + 1 if mark else None
        raise ParseError(f"{source}: {exc.problem or exc}", line, col) from None
    except yaml.YAMLError as exc:
        raise ParseError(f"{source}: {exc}") from None
    if root is None:
        raise ParseError(f"{source}: empty document", 1, 1)
    doc = _Doc()
    try:
        data = doc.convert(root, ())
    except yaml.constructor.ConstructorError as exc:
        mark = exc.problem_mark
        raise ParseError(str(exc.problem), mark.line + 1 if mark else None,
                         mark.column + 1 if mark else None) from None
    scenario = _build(data, doc)
    try:
        return validate_scenario(scenario)
    except ValidationError as exc:
        raise exc.with_line(doc.position(exc.path)[0]) from None


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("protestsim") / "scenarios" / f"{name}.yaml"))


def parse_scenario(path: Union[str, Path]) -> Scenario:
    """Read a scenario file; the bare names ``case1``/``case2`` load the bundled ones."""
    p = Path(path)
    if str(path) in BUNDLED and not p.exists():
        p = bundled_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read scenario {path}: {exc.strerror or exc}") from None
    return loads_scenario(text, str(p))


def _n(x: float) -> Union[int, float]:
    """Integral floats print without the trailing '.0'; they re-read as the same value."""
    return int(x) if float(x).is_integer() and abs(x) < 2**53 else float(x)


def _profile_doc(p: BehaviorProfile) -> Dict[str, Any]:
    return {
        "weights": {b.value: _n(w) for b, w in p.weights.items()},
        "sub_weights": {s.value: _n(v) for s, v in p.sub_weights.items()},
        "movement_likelihood": _n(p.movement_likelihood),
        "firing_likelihood": _n(p.firing_likelihood),
    }


def scenario_document(s: Scenario) -> Dict[str, Any]:
    """The plain-data tree that ``dumps_scenario`` writes."""
    caps = {}
    for arch, c in s.capabilities.items():
        entry: Dict[str, Any] = {k: _n(getattr(c, k)) for k in _CAPS_KEYS}
        entry["weapon"] = c.weapon.name if c.weapon is not None else None
        caps[arch.value] = entry
    profiles = {}
    for arch, p in s.profiles.items():
        entry = {"default": _profile_doc(p.default)}
        if p.being_hit is not None:
            entry["being_hit"] = _profile_doc(p.being_hit)
        profiles[arch.value] = entry
    return {
        "format_version": s.format_version,
        "name": s.name,
        "leader_case": s.leader_case.value,
        "run": {"max_ticks": s.max_ticks, "seed": s.seed},
        "terrain": {
            "bounds": [_n(v) for v in s.terrain_bounds],
            "protected_area": [_n(v) for v in s.protected_area],
            "spawn_area": [_n(v) for v in s.spawn_area],
            "rally_point": [_n(v) for v in s.rally_point],
            "rally_radius": _n(s.rally_radius),
            "police_line_y": _n(s.police_line_y),
            "police_spacing": _n(s.police_spacing),
            "spawn_spacing": _n(s.spawn_spacing),
            "spawn_jitter": _n(s.spawn_jitter),
        },
        "rules": {
            "standoff_radius": _n(s.standoff_radius),
            "spacing_band": [_n(v) for v in s.spacing_band],
            "police_proximity_trigger": _n(s.police_proximity_trigger),
        },
        "obstacles": [
            {"start": [_n(v) for v in o.start], "end": [_n(v) for v in o.end], "strength": _n(o.strength)}
            for o in s.obstacles
        ],
        "weapons": {
            name: {k: _n(getattr(w, k)) if k != "cooldown" else w.cooldown for k in _WEAPON_KEYS}
            for name, w in s.weapons.items()
        },
        "capabilities": caps,
        "profiles": profiles,
        "roster": {arch.value: n for arch, n in s.roster.items()},
    }


class _Dumper(yaml.SafeDumper):
    def ignore_aliases(self, data: Any) -> bool:
        return True


def _flow_lists(dumper: yaml.SafeDumper, data: list) -> yaml.Node:
    flow = all(not isinstance(v, (dict, list)) for v in data)
    return dumper.represent_sequence("tag:yaml.org,2002:seq", data, flow_style=flow)


def _flow_dicts(dumper: yaml.SafeDumper, data: dict) -> yaml.Node:
    flat = all(not isinstance(v, dict) and not (isinstance(v, list) and any(
        isinstance(x, (dict, list)) for x in v)) for v in data.values())
    return dumper.represent_mapping("tag:yaml.org,2002:map", data.items(),
                                    flow_style=bool(data) and flat and len(data) <= 6)


_Dumper.add_representer(list, _flow_lists)
_Dumper.add_representer(dict, _flow_dicts)


def dumps_scenario(s: Scenario) -> str:
    """Canonical text for ``s``; parsing it back gives an equal Scenario."""
    return yaml.dump(scenario_document(s), Dumper=_Dumper, sort_keys=False,
                     default_flow_style=False, width=140)


def emit_scenario(s: Scenario, path: Union[str, Path], header: str = "") -> None:
    text = dumps_scenario(s)
    if header:
        text = "".join(f"# {line}\n" if line else "#\n" for line in header.splitlines()) + text
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write scenario {path}: {exc.strerror or exc}") from None


def scenario_digest(s: Scenario) -> str:
    """sha256 of the canonical text; identifies a scenario inside trace files."""
    return hashlib.sha256(dumps_scenario(s).encode("utf-8")).hexdigest()


__all__ = [
    "BUNDLED", "FORMAT_VERSION", "IoError", "ParseError", "bundled_path", "dumps_scenario",
    "emit_scenario", "loads_scenario", "parse_scenario", "scenario_digest",
    "scenario_document",
]
