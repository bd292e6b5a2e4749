"""Scenario files: JSON with an explicit schema version.

Capacities and demands are written in Mbps and held in bits per second in
memory. ``dump_scenario`` writes the normalized form (defaults filled in,
generated paths spelled out, splits explicit), and parsing a normalized
dump reproduces it byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import asdict, fields
from importlib import resources
from pathlib import Path as FsPath
from typing import Any

import numpy as np

from entre.energy import DEFAULT_BASE_POWER, DEFAULT_IDLE_FRACTION, PowerProfile
from entre.engine import EntreParams
from entre.model import (
    IePair,
    Link,
    Path,
    Scenario,
    SplitVector,
    Topology,
    generate_disjoint_paths,
    validate_topology,
)

SCHEMA_VERSION = 1
MBPS = 1e6


class ParseError(ValueError):
    pass


class ValidationError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.violations))


_TOP_KEYS = {"schema_version", "name", "nodes", "links", "power_profile", "pairs", "params"}
_LINK_KEYS = {"id", "src", "dst", "capacity_mbps", "power_class"}
_PROFILE_KEYS = {"base_power", "idle_fraction", "sleep_power"}
_PAIR_KEYS = {"id", "ingress", "egress", "demand_mbps", "paths", "k", "splits", "excluded"}
_PARAM_KEYS = {f.name for f in fields(EntreParams)}


def _check_keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ParseError(f"{where}: unknown field(s) {', '.join(unknown)}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ParseError(f"{where}: missing field(s) {', '.join(missing)}")


def _int(obj, key, where):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{where}.{key}: expected an integer, got {v!r}")
    return v


def _num(obj, key, where):
    v = obj[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"{where}.{key}: expected a number, got {v!r}")
    return float(v)


def _list(obj, key, where):
    v = obj[key]
    if not isinstance(v, list):
        raise ParseError(f"{where}.{key}: expected a list")
    return v


def scenario_from_dict(data: dict[str, Any], validate: bool = True) -> Scenario:
    _check_keys(data, _TOP_KEYS, "scenario", required=("schema_version", "nodes", "links", "pairs"))
    version = _int(data, "schema_version", "scenario")
    if version != SCHEMA_VERSION:
        raise ParseError(f"scenario.schema_version: unsupported version {version}")

    nodes = []
    for j, n in enumerate(_list(data, "nodes", "scenario")):
        if isinstance(n, bool) or not isinstance(n, int):
            raise ParseError(f"scenario.nodes[{j}]: expected an integer node id")
        nodes.append(n)

    links = []
    seen_links = set()
    for j, raw in enumerate(_list(data, "links", "scenario")):
        where = f"links[{j}]"
        _check_keys(raw, _LINK_KEYS, where, required=tuple(_LINK_KEYS))
        lid = _int(raw, "id", where)
        if lid in seen_links:
            raise ParseError(f"{where}.id: duplicate link id {lid}")
        seen_links.add(lid)
        if not isinstance(raw["power_class"], str):
            raise ParseError(f"{where}.power_class: expected a string")
        links.append(
            Link(
                id=lid,
                src=_int(raw, "src", where),
                dst=_int(raw, "dst", where),
                capacity=_num(raw, "capacity_mbps", where) * MBPS,
                power_class=raw["power_class"],
            )
        )
    topology = Topology.build(nodes, links)

    prof_raw = data.get("power_profile", {})
    _check_keys(prof_raw, _PROFILE_KEYS, "power_profile")
    base = prof_raw.get("base_power", DEFAULT_BASE_POWER)
    if not isinstance(base, dict) or not all(isinstance(k, str) for k in base):
        raise ParseError("power_profile.base_power: expected a map of class name to watts")
    for k in base:
        _num(base, k, "power_profile.base_power")
    try:
        profile = PowerProfile(
            base_power={k: float(v) for k, v in sorted(base.items())},
            idle_fraction=_num(prof_raw, "idle_fraction", "power_profile")
            if "idle_fraction" in prof_raw
            else DEFAULT_IDLE_FRACTION,
            sleep_power=_num(prof_raw, "sleep_power", "power_profile") if "sleep_power" in prof_raw else 0.0,
        )
    except ValueError as exc:
        raise ValidationError([f"power_profile: {exc}"]) from None

    par_raw = data.get("params", {})
    _check_keys(par_raw, _PARAM_KEYS, "params")
    kwargs = {}
    for key in par_raw:
        kwargs[key] = _int(par_raw, key, "params") if key == "max_iters" else _num(par_raw, key, "params")
    try:
        params = EntreParams(**kwargs)
    except ValueError as exc:
        raise ValidationError([f"params: {exc}"]) from None

    pairs = []
    for j, raw in enumerate(_list(data, "pairs", "scenario")):
        pairs.append(_parse_pair(raw, f"pairs[{j}]", topology))

    scenario = Scenario(topology, profile, pairs, params, name=str(data.get("name", "")))
    if validate:
        problems = validate_topology(scenario)
        if problems:
            raise ValidationError(problems)
    return scenario


def _parse_pair(raw, where, topology) -> IePair:
    _check_keys(raw, _PAIR_KEYS, where, required=("id", "ingress", "egress", "demand_mbps"))
    pid = _int(raw, "id", where)
    ingress = _int(raw, "ingress", where)
    egress = _int(raw, "egress", where)
    demand = _num(raw, "demand_mbps", where) * MBPS
    if "paths" in raw:
        paths = []
        for m, seq in enumerate(_list(raw, "paths", where)):
            if not isinstance(seq, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in seq):
                raise ParseError(f"{where}.paths[{m}]: expected a list of link ids")
            paths.append(Path(pid, tuple(seq)))
    elif "k" in raw:
        k = _int(raw, "k", where)
        if k < 1:
            raise ParseError(f"{where}.k: must be at least 1")
        try:
            paths = generate_disjoint_paths(topology, ingress, egress, k, pair_id=pid)
        except ValueError as exc:
            raise ValidationError([f"{where}: {exc}"]) from None
    else:
        raise ParseError(f"{where}: needs either 'paths' or 'k'")
    n = len(paths)
    if n == 0:
        return IePair(pid, ingress, egress, demand, (), SplitVector(np.zeros(0), np.zeros(0, dtype=bool)))
    excluded = np.zeros(n, dtype=bool)
    if "excluded" in raw:
        flags = _list(raw, "excluded", where)
        if len(flags) != n or not all(isinstance(f, bool) for f in flags):
            raise ParseError(f"{where}.excluded: expected {n} booleans")
        excluded = np.array(flags, dtype=bool)
    if "splits" in raw:
        vals = _list(raw, "splits", where)
        if len(vals) != n:
            raise ParseError(f"{where}.splits: expected {n} values, got {len(vals)}")
        for m in range(n):
            _num({"v": vals[m]}, "v", f"{where}.splits[{m}]")
        splits = SplitVector(np.array(vals, dtype=float), excluded)
    else:
        x = np.zeros(n)
        if (~excluded).any():
            x[~excluded] = 1.0 / (~excluded).sum()
        splits = SplitVector(x, excluded)
    return IePair(pid, ingress, egress, demand, tuple(paths), splits)


def _mbps(v: float) -> float:
    return float(f"{v / MBPS:.12g}")


def scenario_to_dict(scenario: Scenario) -> dict[str, Any]:
    topo = scenario.topology
    return {
        "schema_version": SCHEMA_VERSION,
        "name": scenario.name,
        "nodes": list(topo.nodes),
        "links": [
            {
                "id": l.id,
                "src": l.src,
                "dst": l.dst,
                "capacity_mbps": _mbps(l.capacity),
                "power_class": l.power_class,
            }
            for l in topo.links.values()
        ],
        "power_profile": {
            "base_power": dict(sorted(scenario.profile.base_power.items())),
            "idle_fraction": scenario.profile.idle_fraction,
            "sleep_power": scenario.profile.sleep_power,
        },
        "pairs": [
            {
                "id": p.id,
                "ingress": p.ingress,
                "egress": p.egress,
                "demand_mbps": _mbps(p.demand),
                "paths": [list(path.links) for path in p.paths],
                "splits": [float(x) for x in p.splits.fractions],
                "excluded": [bool(e) for e in p.splits.excluded],
            }
            for p in scenario.pairs
        ],
        "params": asdict(scenario.params),
    }


def dumps_scenario(scenario: Scenario) -> str:
    return json.dumps(scenario_to_dict(scenario), indent=2, sort_keys=True) + "\n"


def loads_scenario(text: str, validate: bool = True) -> Scenario:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(data, validate=validate)


def parse_scenario(file) -> Scenario:
    """Read, default-fill and validate a scenario file."""
    path = FsPath(file)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    scenario = loads_scenario(text)
    if not scenario.name:
        scenario.name = path.stem
    return scenario


def dump_scenario(scenario: Scenario, file) -> None:
    FsPath(file).write_text(dumps_scenario(scenario))


def bundled_names() -> list[str]:
    root = resources.files("entre") / "scenarios"
    return sorted(p.name[: -len(".json")] for p in root.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str) -> Scenario:
    """One of the scenarios shipped with the package, by file stem."""
    root = resources.files("entre") / "scenarios"
    entry = root / f"{name}.json"
    if not entry.is_file():
        raise FileNotFoundError(f"no bundled scenario {name!r}; have {bundled_names()}")
    scenario = loads_scenario(entry.read_text())
    scenario.name = scenario.name or name
    return scenario
