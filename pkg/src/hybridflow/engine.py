"""Discrete-time simulation engine over the whole network.

Each step runs a fixed phase order: inject demand, advance every edge
(ascending edge id, harvesting into end-node buffers), distribute every node
buffer (ascending node id), transform arrivals at parking nodes, absorb at
exits, refresh routing, audit. Given a seed, the run is fully deterministic:
every iteration is over sorted ids and every random draw happens at a fixed
point in the phase order.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field

import numpy as np

from .diagrams import (CarParams, ModeDynamics, PedestrianParams, car_dynamics,
                       partition_classes, pedestrian_dynamics)
from .network import EdgeMode, Network, NodeKind, validate_network
from .routing import CLOSED, RoutingTable, all_edge_weights, shortest_paths
from .solver import (EdgeState, JamEvent, make_edge_state, stability_check)
from .transfer import (CarParcel, NodeBuffer, OccupancyDistribution,
                       RouteBlockedEvent, distribute_fixed, distribute_routed,
                       make_node_buffer, sample_occupancy, transform_at_parking,
                       traverse_edge)

PEDESTRIAN = "pedestrian"
CAR = "car"

#: system counts below max(this, this * injected) terminate a drained run
EMPTY_EPS = 1e-12


class AuditError(RuntimeError):
    """People-count drift exceeded the configured tolerance."""


@dataclass(frozen=True)
class DemandEntry:
    """People or cars appearing at an entry node.

    Either a sustained rate over [t_start, t_end) or a one-shot count
    released at t_start. Cars are counted in vehicles; the people they carry
    come from the sampled occupancy of each whole car.
    """

    node: str
    kind: str
    rate: float | None = None
    count: float | None = None
    t_start: float = 0.0
    t_end: float | None = None

    def __post_init__(self):
        if self.kind not in (PEDESTRIAN, CAR):
            raise ValueError(f"unknown demand kind {self.kind!r}")
        if (self.rate is None) == (self.count is None):
            raise ValueError("demand entry needs exactly one of rate or count")
        if self.rate is not None and self.t_end is None:
            raise ValueError("rate demand needs t_end")


@dataclass(frozen=True)
class DemandSchedule:
    entries: tuple[DemandEntry, ...] = ()


@dataclass(frozen=True)
class SimulationConfig:
    dt: float = 0.002
    max_steps: int = 1000
    alpha: float = 1.0
    distributor: str = "fixed"
    seed: int = 0
    routing_cadence: int = 10
    audit_tolerance: float = 1e-9
    node_capacity: str = "finite"
    record_every: int = 1

    def __post_init__(self):
        if self.distributor not in ("fixed", "dijkstra"):
            raise ValueError(f"unknown distributor {self.distributor!r}")
        if self.node_capacity not in ("finite", "infinite"):
            raise ValueError(f"unknown node capacity {self.node_capacity!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.max_steps < 1 or self.routing_cadence < 1 or self.record_every < 1:
            raise ValueError("step counts must be positive")


@dataclass
class AuditRecord:
    """Network-wide people accounting after one step."""

    step: int
    time: float
    total_persons: float
    injected: float
    exited: float
    drift: float  # relative, slack-corrected
    clamp_slack: float
    by_edge: dict[str, float]
    by_node: dict[str, float]


@dataclass
class ExitEvent:
    step: int
    node_id: str
    persons: float


@dataclass
class ResultArchive:
    """Everything a run produced, ready for serialization or plotting."""

    edge_ids: list[str]
    class_count: int
    dt: float
    audits: list[AuditRecord] = field(default_factory=list)
    snapshots: list[tuple[int, float, dict[str, np.ndarray]]] = field(default_factory=list)
    jam_events: list[JamEvent] = field(default_factory=list)
    route_events: list[RouteBlockedEvent] = field(default_factory=list)
    exit_events: list[ExitEvent] = field(default_factory=list)
    injected_persons: float = 0.0
    exited_persons: float = 0.0
    injected_person_seconds: float = 0.0
    exited_person_seconds: float = 0.0
    termination: str = "max_steps"
    steps_run: int = 0

    def mean_entry_time(self) -> float | None:
        if self.injected_persons <= 0.0:
            return None
        return self.injected_person_seconds / self.injected_persons

    def mean_exit_time(self) -> float | None:
        if self.exited_persons <= 0.0:
            return None
        return self.exited_person_seconds / self.exited_persons

    def mean_travel_time(self) -> float | None:
        entry, exit_ = self.mean_entry_time(), self.mean_exit_time()
        if entry is None or exit_ is None:
            return None
        return exit_ - entry


def audit_people(states: dict[str, EdgeState],
                 buffers: dict[str, NodeBuffer]) -> tuple[float, dict, dict]:
    """People on the network: edges (occupancy-weighted on streets) + nodes."""
    by_edge = {eid: states[eid].person_mass() for eid in sorted(states)}
    by_node = {nid: buffers[nid].audit_persons() for nid in sorted(buffers)}
    total = sum(by_edge.values()) + sum(by_node.values())
    return total, by_edge, by_node


class SimulationEngine:
    """Owns all mutable run state and advances it step by step."""

    def __init__(self, network: Network, schedule: DemandSchedule,
                 config: SimulationConfig,
                 ped_params: PedestrianParams | None = None,
                 car_params: CarParams | None = None,
                 occupancy: OccupancyDistribution | None = None,
                 ped_classes: int = 16, car_classes: int = 1,
                 car_vff_stddev: float = 0.0, span_sigmas: float = 3.0,
                 node_weights: dict[str, dict[str, float]] | None = None,
                 initial_density: dict[str, float] | None = None):
        problems = validate_network(network)
        if problems:
            raise ValueError("invalid network: " + "; ".join(problems))

        self.network = network
        self.schedule = schedule
        self.config = config
        self.occupancy = occupancy or OccupancyDistribution()
        self.node_weights = node_weights or {}
        self.dynamics: dict[EdgeMode, ModeDynamics] = {
            EdgeMode.WALKWAY: pedestrian_dynamics(ped_params, ped_classes, span_sigmas),
            EdgeMode.STREET: car_dynamics(car_params, car_classes,
                                          car_vff_stddev, span_sigmas),
        }
        stability_check(network, self.dynamics, config.dt)
        self._validate_demand()

        exits = [nid for nid in network.sorted_node_ids()
                 if network.nodes[nid].kind is NodeKind.EXIT]
        if config.distributor == "dijkstra" and not exits:
            raise ValueError("dijkstra distribution needs at least one exit node")
        self._exits = tuple(exits)

        ped_count = self.dynamics[EdgeMode.WALKWAY].class_count
        self.states: dict[str, EdgeState] = {
            eid: make_edge_state(network.edges[eid],
                                 self.dynamics[network.edges[eid].mode],
                                 config.alpha)
            for eid in network.sorted_edge_ids()
        }
        self.buffers: dict[str, NodeBuffer] = {
            nid: make_node_buffer(network.nodes[nid], ped_count)
            for nid in network.sorted_node_ids()
        }
        for eid, rho in sorted((initial_density or {}).items()):
            self._fill_uniform(eid, rho)
        self.rng = np.random.default_rng(config.seed)

        self.step = 0
        self.clamp_slack = 0.0
        self._car_acc = [0.0] * len(schedule.entries)
        self._fired = [False] * len(schedule.entries)
        self._weights = all_edge_weights(network, self.states, self.dynamics)
        self._closed = frozenset(eid for eid, w in self._weights.items() if w == CLOSED)
        self._table: RoutingTable | None = None
        if config.distributor == "dijkstra":
            self._table = shortest_paths(network, self._weights, self._exits)

        max_classes = max(d.class_count for d in self.dynamics.values())
        self.archive = ResultArchive(
            edge_ids=network.sorted_edge_ids(),
            class_count=max_classes,
            dt=config.dt,
        )
        self._baseline = audit_people(self.states, self.buffers)[0]
        self._record_snapshot()

    # -- construction helpers -------------------------------------------------

    def _fill_uniform(self, eid: str, rho: float) -> None:
        """Seed every interior cell of an edge with the same total density."""
        state = self.states.get(eid)
        if state is None:
            raise ValueError(f"initial density names unknown edge {eid!r}")
        if rho < 0.0:
            raise ValueError(f"initial density on edge {eid!r} is negative")
        classes = partition_classes(rho, self.dynamics[state.mode].partition)
        grid = state.grid
        state.dens[:, grid.start:grid.end + 1] = classes[:, None]
        if state.persons is not None:
            # seeded cars carry the distribution's mean occupancy
            state.persons[:, grid.start:grid.end + 1] = (
                classes[:, None] * self.occupancy.mean())

    def _validate_demand(self) -> None:
        for entry in self.schedule.entries:
            node = self.network.nodes.get(entry.node)
            if node is None:
                raise ValueError(f"demand node {entry.node!r} does not exist")
            if node.kind is not NodeKind.ENTRY:
                raise ValueError(f"demand node {entry.node!r} is not an entry node")
            mode = EdgeMode.WALKWAY if entry.kind == PEDESTRIAN else EdgeMode.STREET
            out_modes = {self.network.edges[eid].mode
                         for eid in self.network.out_edges[entry.node]}
            if mode not in out_modes:
                raise ValueError(
                    f"demand node {entry.node!r} has no outgoing {mode.value} edge "
                    f"for {entry.kind} demand"
                )

    # -- phases ----------------------------------------------------------------

    def _inject(self, t_now: float) -> None:
        dt = self.config.dt
        for idx, entry in enumerate(self.schedule.entries):
            flush = False
            if entry.count is not None:
                if self._fired[idx] or t_now < entry.t_start:
                    continue
                self._fired[idx] = True
                amount = entry.count
                flush = True  # one-shots emit their fraction immediately
            else:
                if t_now < entry.t_start:
                    continue
                if t_now >= entry.t_end:
                    # window over: emit any leftover fraction of a car once
                    if entry.kind != CAR or self._car_acc[idx] <= 1e-12:
                        continue
                    amount = 0.0
                    flush = True
                else:
                    amount = entry.rate * dt
            buffer = self.buffers[entry.node]
            if entry.kind == PEDESTRIAN:
                if amount <= 0.0:
                    continue
                part = self.dynamics[EdgeMode.WALKWAY].partition
                buffer.person_classes += partition_classes(amount, part)
                self._count_injection(amount, t_now)
            else:
                self._car_acc[idx] += amount
                self._emit_cars(idx, buffer, t_now, flush=flush)

    def _emit_cars(self, idx: int, buffer: NodeBuffer, t_now: float,
                   flush: bool) -> None:
        """Turn accumulated car demand into parcels of whole sampled cars.

        A one-shot (flush) also emits its fractional remainder as a partial
        car with one sampled occupancy; rate demand carries fractions over
        to later steps so only whole cars ever enter.
        """
        whole = int(math.floor(self._car_acc[idx] + 1e-9))
        if whole >= 1:
            occupants = sample_occupancy(self.occupancy, self.rng, size=whole)
            for k in sorted(set(int(o) for o in occupants)):
                n_k = int((occupants == k).sum())
                buffer.add_parcel(CarParcel(float(n_k), float(n_k * k)))
            self._count_injection(float(occupants.sum()), t_now)
            self._car_acc[idx] -= whole
        if flush and self._car_acc[idx] > 1e-12:
            rest = self._car_acc[idx]
            occ = float(sample_occupancy(self.occupancy, self.rng))
            buffer.add_parcel(CarParcel(rest, rest * occ))
            self._count_injection(rest * occ, t_now)
            self._car_acc[idx] = 0.0

    def _count_injection(self, persons: float, t_now: float) -> None:
        self.archive.injected_persons += persons
        self.archive.injected_person_seconds += persons * t_now

    def _advance_edges(self, step: int) -> None:
        dt = self.config.dt
        for eid in self.network.sorted_edge_ids():
            edge = self.network.edges[eid]
            state = self.states[eid]
            head = self.network.nodes[edge.head]
            stats = traverse_edge(state, self.dynamics[edge.mode], dt,
                                  self.buffers[edge.head],
                                  parking=head.kind is NodeKind.PARKING)
            self.clamp_slack += stats.clamped_persons
            for event in stats.jam_events:
                self.archive.jam_events.append(JamEvent(event.edge_id, step))

    def _distribute_nodes(self, step: int) -> None:
        infinite = self.config.node_capacity == "infinite"
        for nid in self.network.sorted_node_ids():
            node = self.network.nodes[nid]
            if node.kind is NodeKind.EXIT:
                continue
            buffer = self.buffers[nid]
            if self.config.distributor == "fixed":
                distribute_fixed(self.network, buffer, self.states, self.dynamics,
                                 self.node_weights.get(nid), infinite)
            else:
                events = distribute_routed(self.network, buffer, self.states,
                                           self.dynamics, self._weights,
                                           self._table.cost, infinite)
                for event in events:
                    self.archive.route_events.append(
                        RouteBlockedEvent(event.node_id, step))

    def _transform_parking(self) -> None:
        ped_dyn = self.dynamics[EdgeMode.WALKWAY]
        for nid in self.network.sorted_node_ids():
            if self.network.nodes[nid].kind is NodeKind.PARKING:
                transform_at_parking(self.buffers[nid], ped_dyn,
                                     self.occupancy, self.rng)

    def _absorb_exits(self, step: int) -> None:
        t_now = step * self.config.dt
        for nid in self._exits:
            buffer = self.buffers[nid]
            persons = buffer.audit_persons()
            if persons <= 0.0:
                continue
            buffer.person_classes[:] = 0.0
            buffer.parcels.clear()
            self.archive.exited_persons += persons
            self.archive.exited_person_seconds += persons * t_now
            self.archive.exit_events.append(ExitEvent(step, nid, persons))

    def _refresh_routing(self, step: int) -> None:
        self._weights = all_edge_weights(self.network, self.states, self.dynamics)
        closed = frozenset(eid for eid, w in self._weights.items() if w == CLOSED)
        transitioned = closed != self._closed
        self._closed = closed
        if self._table is not None and (transitioned
                                        or step % self.config.routing_cadence == 0):
            self._table = shortest_paths(self.network, self._weights, self._exits)

    def audit(self, step: int) -> AuditRecord:
        total, by_edge, by_node = audit_people(self.states, self.buffers)
        conserved = (total + self.archive.exited_persons
                     - self.archive.injected_persons - self.clamp_slack)
        scale = max(self._baseline + self.archive.injected_persons, 1.0)
        drift = abs(conserved - self._baseline) / scale
        return AuditRecord(
            step=step,
            time=step * self.config.dt,
            total_persons=total,
            injected=self.archive.injected_persons,
            exited=self.archive.exited_persons,
            drift=drift,
            clamp_slack=self.clamp_slack,
            by_edge=by_edge,
            by_node=by_node,
        )

    def _record_snapshot(self) -> None:
        dens = {eid: self.states[eid].dens.copy() for eid in self.archive.edge_ids}
        self.archive.snapshots.append((self.step, self.step * self.config.dt, dens))

    # -- driving ----------------------------------------------------------------

    def step_once(self) -> AuditRecord:
        step = self.step + 1
        self._inject((step - 1) * self.config.dt)
        self._advance_edges(step)
        self._distribute_nodes(step)
        self._transform_parking()
        self._absorb_exits(step)
        self._refresh_routing(step)

        record = self.audit(step)
        if record.drift > self.config.audit_tolerance:
            raise AuditError(
                f"step {step}: people drift {record.drift:.3e} exceeds "
                f"tolerance {self.config.audit_tolerance:.3e}"
            )
        self.archive.audits.append(record)
        self.step = step
        if step % self.config.record_every == 0:
            self._record_snapshot()
        return record

    def _demand_exhausted(self, t_next: float) -> bool:
        for idx, entry in enumerate(self.schedule.entries):
            if entry.count is not None:
                if not self._fired[idx]:
                    return False
            elif t_next < entry.t_end:
                return False
            if self._car_acc[idx] > 1e-9:
                return False
        return True

    def run(self) -> ResultArchive:
        termination = "max_steps"
        while self.step < self.config.max_steps:
            record = self.step_once()
            empty = record.total_persons <= max(
                EMPTY_EPS, EMPTY_EPS * self.archive.injected_persons)
            if empty and self._demand_exhausted(self.step * self.config.dt):
                termination = "drained"
                break
        if self.archive.snapshots[-1][0] != self.step:
            self._record_snapshot()
        self.archive.termination = termination
        self.archive.steps_run = self.step
        return self.archive

    # -- reproducibility ---------------------------------------------------------

    _SNAP_ATTRS = ("states", "buffers", "rng", "step", "clamp_slack", "_car_acc",
                   "_fired", "_weights", "_closed", "_table", "archive",
                   "_baseline")

    def snapshot(self) -> dict:
        """Deep copy of all mutable run state; restore() resumes from it."""
        return copy.deepcopy({name: getattr(self, name) for name in self._SNAP_ATTRS})

    def restore(self, snap: dict) -> None:
        state = copy.deepcopy(snap)
        for name in self._SNAP_ATTRS:
            setattr(self, name, state[name])


def run_simulation(network: Network, schedule: DemandSchedule,
                   config: SimulationConfig, **kwargs) -> ResultArchive:
    """Build an engine, run it to termination, return the archive."""
    return SimulationEngine(network, schedule, config, **kwargs).run()
