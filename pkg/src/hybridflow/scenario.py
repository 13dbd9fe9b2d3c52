"""Scenario files: strict JSON in, identical JSON back out.

A scenario bundles the network, the demand schedule, model parameters and
simulation settings under a versioned schema tag. Parsing is strict: unknown
keys, wrong types and dangling references are all rejected, and every
complaint names the JSON path (and file) it came from.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .diagrams import CarParams, PedestrianParams
from .engine import (DemandEntry, DemandSchedule, SimulationConfig,
                     SimulationEngine)
from .network import (Edge, EdgeMode, Network, Node, NodeKind, build_network,
                      validate_network)
from .transfer import OccupancyDistribution

SCHEMA = "hybridflow-scenario/1"


class ScenarioError(Exception):
    """Base class for everything wrong with a scenario file."""


class ScenarioSyntaxError(ScenarioError):
    """The file is not valid JSON."""


class ScenarioSchemaError(ScenarioError):
    """The JSON shape is wrong: unknown key, bad type, missing field."""


class ScenarioValidationError(ScenarioError):
    """The scenario parses but describes an unusable setup."""


@dataclass(frozen=True)
class ModelParams:
    pedestrian: PedestrianParams = PedestrianParams()
    car: CarParams = CarParams()
    occupancy: OccupancyDistribution = field(default_factory=OccupancyDistribution)
    ped_classes: int = 16
    car_classes: int = 1
    car_vff_stddev: float = 0.0
    span_sigmas: float = 3.0


@dataclass(frozen=True)
class Scenario:
    network: Network
    schedule: DemandSchedule
    config: SimulationConfig
    params: ModelParams
    node_weights: dict[str, dict[str, float]]
    initial_density: dict[str, float] = field(default_factory=dict)
    name: str = ""


_REQUIRED = object()


class _Ctx:
    """Tracks the JSON path for error messages."""

    def __init__(self, where: str):
        self.where = where

    def fail(self, kind: type[ScenarioError], path: str, message: str):
        raise kind(f"{self.where}: {path}: {message}")


def _pop(ctx: _Ctx, obj: dict, path: str, key: str, default=_REQUIRED):
    if key in obj:
        return obj.pop(key)
    if default is _REQUIRED:
        ctx.fail(ScenarioSchemaError, path, f"missing required key {key!r}")
    return default


def _no_leftovers(ctx: _Ctx, obj: dict, path: str) -> None:
    if obj:
        names = ", ".join(repr(k) for k in sorted(obj))
        ctx.fail(ScenarioSchemaError, path, f"unknown key(s) {names}")


def _as_str(ctx: _Ctx, value, path: str) -> str:
    if not isinstance(value, str):
        ctx.fail(ScenarioSchemaError, path, f"expected string, got {type(value).__name__}")
    return value


def _as_num(ctx: _Ctx, value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        ctx.fail(ScenarioSchemaError, path, f"expected number, got {type(value).__name__}")
    return float(value)


def _as_int(ctx: _Ctx, value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        ctx.fail(ScenarioSchemaError, path, f"expected integer, got {type(value).__name__}")
    return value


def _as_dict(ctx: _Ctx, value, path: str) -> dict:
    if not isinstance(value, dict):
        ctx.fail(ScenarioSchemaError, path, f"expected object, got {type(value).__name__}")
    return dict(value)


def _as_list(ctx: _Ctx, value, path: str) -> list:
    if not isinstance(value, list):
        ctx.fail(ScenarioSchemaError, path, f"expected array, got {type(value).__name__}")
    return value


def load_scenario(path: str | Path) -> Scenario:
    """Read and fully validate a scenario file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(
            f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_scenario(data, where=str(path))


def parse_scenario(data, where: str = "<memory>") -> Scenario:
    ctx = _Ctx(where)
    root = _as_dict(ctx, data, "$")

    schema = _as_str(ctx, _pop(ctx, root, "$", "schema"), "$.schema")
    if schema != SCHEMA:
        ctx.fail(ScenarioSchemaError, "$.schema",
                 f"unsupported schema {schema!r} (expected {SCHEMA!r})")
    name = _as_str(ctx, _pop(ctx, root, "$", "name", ""), "$.name")

    nodes, node_weights_raw = _parse_nodes(ctx, _pop(ctx, root, "$", "nodes"))
    edges = _parse_edges(ctx, _pop(ctx, root, "$", "edges"))
    schedule = _parse_demand(ctx, _pop(ctx, root, "$", "demand", []))
    params = _parse_params(ctx, _pop(ctx, root, "$", "params", {}))
    config = _parse_sim(ctx, _pop(ctx, root, "$", "sim", {}))
    initial = _parse_initial(ctx, _pop(ctx, root, "$", "initial", {}))
    _no_leftovers(ctx, root, "$")

    try:
        network = build_network(nodes, edges)
    except ValueError as exc:
        raise ScenarioValidationError(f"{where}: {exc}") from exc

    problems = validate_network(network)
    problems.extend(_check_references(network, schedule, node_weights_raw, initial))
    if problems:
        raise ScenarioValidationError(
            f"{where}: invalid scenario:\n  " + "\n  ".join(problems)
        )

    return Scenario(
        network=network,
        schedule=schedule,
        config=config,
        params=params,
        node_weights=node_weights_raw,
        initial_density=initial,
        name=name,
    )


def _parse_nodes(ctx: _Ctx, raw) -> tuple[list[Node], dict[str, dict[str, float]]]:
    nodes: list[Node] = []
    weights: dict[str, dict[str, float]] = {}
    for i, item in enumerate(_as_list(ctx, raw, "$.nodes")):
        path = f"$.nodes[{i}]"
        obj = _as_dict(ctx, item, path)
        nid = _as_str(ctx, _pop(ctx, obj, path, "id"), path + ".id")
        kind_s = _as_str(ctx, _pop(ctx, obj, path, "kind"), path + ".kind")
        try:
            kind = NodeKind(kind_s)
        except ValueError:
            ctx.fail(ScenarioSchemaError, path + ".kind", f"unknown node kind {kind_s!r}")
        w_raw = _pop(ctx, obj, path, "weights", None)
        if w_raw is not None:
            w_obj = _as_dict(ctx, w_raw, path + ".weights")
            parsed = {}
            for eid, val in w_obj.items():
                value = _as_num(ctx, val, f"{path}.weights[{eid!r}]")
                if value <= 0.0:
                    ctx.fail(ScenarioSchemaError, f"{path}.weights[{eid!r}]",
                             "weight must be positive")
                parsed[eid] = value
            weights[nid] = parsed
        _no_leftovers(ctx, obj, path)
        nodes.append(Node(id=nid, kind=kind))
    return nodes, weights


def _parse_edges(ctx: _Ctx, raw) -> list[Edge]:
    edges: list[Edge] = []
    for i, item in enumerate(_as_list(ctx, raw, "$.edges")):
        path = f"$.edges[{i}]"
        obj = _as_dict(ctx, item, path)
        eid = _as_str(ctx, _pop(ctx, obj, path, "id"), path + ".id")
        mode_s = _as_str(ctx, _pop(ctx, obj, path, "mode"), path + ".mode")
        try:
            mode = EdgeMode(mode_s)
        except ValueError:
            ctx.fail(ScenarioSchemaError, path + ".mode", f"unknown edge mode {mode_s!r}")
        edges.append(Edge(
            id=eid,
            mode=mode,
            tail=_as_str(ctx, _pop(ctx, obj, path, "from"), path + ".from"),
            head=_as_str(ctx, _pop(ctx, obj, path, "to"), path + ".to"),
            length=_as_num(ctx, _pop(ctx, obj, path, "length_m"), path + ".length_m"),
            dx=_as_num(ctx, _pop(ctx, obj, path, "dx_m"), path + ".dx_m"),
            width=_as_num(ctx, _pop(ctx, obj, path, "width", 1.0), path + ".width"),
        ))
        _no_leftovers(ctx, obj, path)
    return edges


def _parse_demand(ctx: _Ctx, raw) -> DemandSchedule:
    entries: list[DemandEntry] = []
    for i, item in enumerate(_as_list(ctx, raw, "$.demand")):
        path = f"$.demand[{i}]"
        obj = _as_dict(ctx, item, path)
        node = _as_str(ctx, _pop(ctx, obj, path, "node"), path + ".node")
        kind = _as_str(ctx, _pop(ctx, obj, path, "kind"), path + ".kind")
        rate = obj.pop("rate_per_s", None)
        count = obj.pop("count", None)
        if rate is not None:
            rate = _as_num(ctx, rate, path + ".rate_per_s")
        if count is not None:
            count = _as_num(ctx, count, path + ".count")
        t_start = _as_num(ctx, _pop(ctx, obj, path, "t_start_s", 0.0), path + ".t_start_s")
        t_end = _pop(ctx, obj, path, "t_end_s", None)
        if t_end is not None:
            t_end = _as_num(ctx, t_end, path + ".t_end_s")
        _no_leftovers(ctx, obj, path)
        try:
            entries.append(DemandEntry(node=node, kind=kind, rate=rate,
                                       count=count, t_start=t_start, t_end=t_end))
        except ValueError as exc:
            ctx.fail(ScenarioSchemaError, path, str(exc))
    return DemandSchedule(tuple(entries))


def _parse_params(ctx: _Ctx, raw) -> ModelParams:
    path = "$.params"
    obj = _as_dict(ctx, raw, path)

    ped = PedestrianParams()
    if "pedestrian" in obj:
        p = _as_dict(ctx, obj.pop("pedestrian"), path + ".pedestrian")
        pp = path + ".pedestrian"
        ped = PedestrianParams(
            vff=_as_num(ctx, _pop(ctx, p, pp, "vff_ms", ped.vff), pp + ".vff_ms"),
            vff_stddev=_as_num(ctx, _pop(ctx, p, pp, "vff_stddev_ms", ped.vff_stddev),
                               pp + ".vff_stddev_ms"),
            gamma=_as_num(ctx, _pop(ctx, p, pp, "gamma", ped.gamma), pp + ".gamma"),
            rho_max=_as_num(ctx, _pop(ctx, p, pp, "rho_max_per_m2", ped.rho_max),
                            pp + ".rho_max_per_m2"),
        )
        _no_leftovers(ctx, p, pp)

    car = CarParams()
    if "car" in obj:
        c = _as_dict(ctx, obj.pop("car"), path + ".car")
        cp = path + ".car"
        car = CarParams(
            vff=_as_num(ctx, _pop(ctx, c, cp, "vff_ms", car.vff), cp + ".vff_ms"),
            big_k=_as_num(ctx, _pop(ctx, c, cp, "big_k", car.big_k), cp + ".big_k"),
            n=_as_num(ctx, _pop(ctx, c, cp, "exponent_n", car.n), cp + ".exponent_n"),
            rho_max=_as_num(ctx, _pop(ctx, c, cp, "rho_max_per_m", car.rho_max),
                            cp + ".rho_max_per_m"),
        )
        _no_leftovers(ctx, c, cp)

    occupancy = OccupancyDistribution()
    if "occupancy_counts" in obj:
        counts_raw = _as_list(ctx, obj.pop("occupancy_counts"), path + ".occupancy_counts")
        counts = tuple(
            _as_int(ctx, v, f"{path}.occupancy_counts[{i}]")
            for i, v in enumerate(counts_raw)
        )
        try:
            occupancy = OccupancyDistribution(counts)
        except ValueError as exc:
            ctx.fail(ScenarioSchemaError, path + ".occupancy_counts", str(exc))

    params = ModelParams(
        pedestrian=ped,
        car=car,
        occupancy=occupancy,
        ped_classes=_as_int(ctx, _pop(ctx, obj, path, "pedestrian_classes", 16),
                            path + ".pedestrian_classes"),
        car_classes=_as_int(ctx, _pop(ctx, obj, path, "car_classes", 1),
                            path + ".car_classes"),
        car_vff_stddev=_as_num(ctx, _pop(ctx, obj, path, "car_vff_stddev_ms", 0.0),
                               path + ".car_vff_stddev_ms"),
        span_sigmas=_as_num(ctx, _pop(ctx, obj, path, "truncation_sigmas", 3.0),
                            path + ".truncation_sigmas"),
    )
    _no_leftovers(ctx, obj, path)
    return params


def _parse_sim(ctx: _Ctx, raw) -> SimulationConfig:
    path = "$.sim"
    obj = _as_dict(ctx, raw, path)
    base = SimulationConfig()
    try:
        config = SimulationConfig(
            dt=_as_num(ctx, _pop(ctx, obj, path, "dt_s", base.dt), path + ".dt_s"),
            max_steps=_as_int(ctx, _pop(ctx, obj, path, "max_steps", base.max_steps),
                              path + ".max_steps"),
            alpha=_as_num(ctx, _pop(ctx, obj, path, "alpha", base.alpha), path + ".alpha"),
            distributor=_as_str(ctx, _pop(ctx, obj, path, "distributor", base.distributor),
                                path + ".distributor"),
            seed=_as_int(ctx, _pop(ctx, obj, path, "seed", base.seed), path + ".seed"),
            routing_cadence=_as_int(
                ctx, _pop(ctx, obj, path, "routing_cadence", base.routing_cadence),
                path + ".routing_cadence"),
            audit_tolerance=_as_num(
                ctx, _pop(ctx, obj, path, "audit_tolerance", base.audit_tolerance),
                path + ".audit_tolerance"),
            node_capacity=_as_str(
                ctx, _pop(ctx, obj, path, "node_capacity", base.node_capacity),
                path + ".node_capacity"),
            record_every=_as_int(
                ctx, _pop(ctx, obj, path, "record_every", base.record_every),
                path + ".record_every"),
        )
    except ValueError as exc:
        raise ScenarioSchemaError(f"{ctx.where}: {path}: {exc}") from exc
    _no_leftovers(ctx, obj, path)
    return config


def _parse_initial(ctx: _Ctx, raw) -> dict[str, float]:
    path = "$.initial"
    obj = _as_dict(ctx, raw, path)
    initial = {}
    for eid, val in obj.items():
        rho = _as_num(ctx, val, f"{path}[{eid!r}]")
        if rho < 0.0:
            ctx.fail(ScenarioSchemaError, f"{path}[{eid!r}]",
                     "initial density must be nonnegative")
        initial[eid] = rho
    return initial


def _check_references(network: Network, schedule: DemandSchedule,
                      node_weights: dict[str, dict[str, float]],
                      initial: dict[str, float]) -> list[str]:
    problems = []
    for i, entry in enumerate(schedule.entries):
        node = network.nodes.get(entry.node)
        if node is None:
            problems.append(f"demand[{i}]: node {entry.node!r} does not exist")
            continue
        if node.kind is not NodeKind.ENTRY:
            problems.append(f"demand[{i}]: node {entry.node!r} is not an entry node")
            continue
        mode = EdgeMode.WALKWAY if entry.kind == "pedestrian" else EdgeMode.STREET
        modes = {network.edges[eid].mode for eid in network.out_edges[entry.node]}
        if mode not in modes:
            problems.append(
                f"demand[{i}]: entry {entry.node!r} has no outgoing "
                f"{mode.value} edge for {entry.kind} demand"
            )
    for nid, wmap in sorted(node_weights.items()):
        if nid not in network.nodes:
            problems.append(f"weights: node {nid!r} does not exist")
            continue
        for eid in sorted(wmap):
            if eid not in network.out_edges[nid]:
                problems.append(
                    f"weights: edge {eid!r} is not an outgoing edge of node {nid!r}")
    for eid in sorted(initial):
        if eid not in network.edges:
            problems.append(f"initial: edge {eid!r} does not exist")
    return problems


def scenario_to_dict(scenario: Scenario) -> dict:
    """Canonical JSON-ready form; parse_scenario inverts it exactly."""
    network = scenario.network
    nodes = []
    for nid in network.sorted_node_ids():
        node = network.nodes[nid]
        item: dict = {"id": node.id, "kind": node.kind.value}
        if nid in scenario.node_weights:
            item["weights"] = dict(sorted(scenario.node_weights[nid].items()))
        nodes.append(item)
    edges = [
        {
            "id": e.id, "mode": e.mode.value, "from": e.tail, "to": e.head,
            "length_m": e.length, "dx_m": e.dx, "width": e.width,
        }
        for e in (network.edges[eid] for eid in network.sorted_edge_ids())
    ]
    demand = []
    for entry in scenario.schedule.entries:
        item = {"node": entry.node, "kind": entry.kind}
        if entry.rate is not None:
            item["rate_per_s"] = entry.rate
        if entry.count is not None:
            item["count"] = entry.count
        item["t_start_s"] = entry.t_start
        if entry.t_end is not None:
            item["t_end_s"] = entry.t_end
        demand.append(item)
    p, c = scenario.params.pedestrian, scenario.params.car
    params = {
        "pedestrian": {
            "vff_ms": p.vff, "vff_stddev_ms": p.vff_stddev,
            "gamma": p.gamma, "rho_max_per_m2": p.rho_max,
        },
        "car": {
            "vff_ms": c.vff, "big_k": c.big_k,
            "exponent_n": c.n, "rho_max_per_m": c.rho_max,
        },
        "occupancy_counts": list(scenario.params.occupancy.counts),
        "pedestrian_classes": scenario.params.ped_classes,
        "car_classes": scenario.params.car_classes,
        "car_vff_stddev_ms": scenario.params.car_vff_stddev,
        "truncation_sigmas": scenario.params.span_sigmas,
    }
    cfg = scenario.config
    sim = {
        "dt_s": cfg.dt, "max_steps": cfg.max_steps, "alpha": cfg.alpha,
        "distributor": cfg.distributor, "seed": cfg.seed,
        "routing_cadence": cfg.routing_cadence,
        "audit_tolerance": cfg.audit_tolerance,
        "node_capacity": cfg.node_capacity, "record_every": cfg.record_every,
    }
    out = {"schema": SCHEMA}
    if scenario.name:
        out["name"] = scenario.name
    out.update({"nodes": nodes, "edges": edges, "demand": demand,
                "params": params, "sim": sim})
    if scenario.initial_density:
        out["initial"] = dict(sorted(scenario.initial_density.items()))
    return out


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


def build_engine(scenario: Scenario,
                 config: SimulationConfig | None = None) -> SimulationEngine:
    """Engine for a scenario, optionally with an overriding config."""
    params = scenario.params
    return SimulationEngine(
        scenario.network,
        scenario.schedule,
        config or scenario.config,
        ped_params=params.pedestrian,
        car_params=params.car,
        occupancy=params.occupancy,
        ped_classes=params.ped_classes,
        car_classes=params.car_classes,
        car_vff_stddev=params.car_vff_stddev,
        span_sigmas=params.span_sigmas,
        node_weights=scenario.node_weights,
        initial_density=scenario.initial_density,
    )
