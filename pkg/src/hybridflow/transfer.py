"""Exchange of people and cars between edges and nodes.

Node buffers hold discrete counts (people, car parcels); edges hold
densities. The conversion in both directions is count = density * width * dx
on the cell being touched, so transfers are exact by construction.

Car parcels pair a (possibly fractional) car count with the exact number of
people riding in those cars. Occupancy is sampled once, when a parcel is
created (at demand injection or when pedestrians group into cars at a
parking node); from then on people counts just flow with the cars, keeping
the people audit exact through every split and merge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .diagrams import ModeDynamics, partition_classes
from .network import EdgeMode, Network, Node, NodeKind
from .solver import EdgeState, SolveStats, solve_edge

#: keep parcel lists short; merging parcels is exact for count and people
MAX_PARCELS = 64


class RoutingDeadEndError(RuntimeError):
    """Population buffered at a node with no mode-compatible outgoing edge."""


@dataclass(frozen=True)
class RouteBlockedEvent:
    """Every route from a node was closed when it tried to distribute."""

    node_id: str
    step: int = -1  # stamped by the engine


@dataclass
class CarParcel:
    """count cars carrying persons people (occupancy = persons / count)."""

    count: float
    persons: float

    @property
    def occupancy(self) -> float:
        return self.persons / self.count if self.count > 0.0 else 0.0


@dataclass
class OccupancyDistribution:
    """Empirical people-per-car distribution given as integer counts.

    counts[k] is the observed number of cars with k+1 occupants (the last
    category aggregates everything at or above it).
    """

    counts: tuple[int, ...] = (452, 979, 273, 185, 62, 9)

    def __post_init__(self):
        if len(self.counts) < 1 or any(c < 0 for c in self.counts):
            raise ValueError("occupancy counts must be nonnegative")
        if sum(self.counts) <= 0:
            raise ValueError("occupancy counts must not all be zero")

    def pmf(self) -> np.ndarray:
        counts = np.asarray(self.counts, dtype=float)
        return counts / counts.sum()

    def mean(self) -> float:
        pmf = self.pmf()
        return float((np.arange(1, len(pmf) + 1) * pmf).sum())


def sample_occupancy(dist: OccupancyDistribution, rng: np.random.Generator,
                     size: int | None = None):
    """Draw occupancies (ints >= 1) by inverting the cumulative distribution."""
    cdf = np.cumsum(dist.pmf())
    cdf[-1] = 1.0
    draws = rng.random(size if size is not None else 1)
    picks = np.searchsorted(cdf, draws, side="right") + 1
    return int(picks[0]) if size is None else picks


@dataclass
class NodeBuffer:
    """Population waiting at a node.

    person_classes holds ready-to-leave pedestrians as per-class counts;
    parcels holds ready-to-leave cars. At parking nodes, arrivals first land
    in the staged_* pools and only enter the outbound pools through
    transform_at_parking; pending_persons are pedestrians queueing to fill
    the next car (of sampled size pending_target).
    """

    node_id: str
    person_classes: np.ndarray
    parcels: list[CarParcel] = field(default_factory=list)
    staged_person_classes: np.ndarray | None = None
    staged_parcels: list[CarParcel] = field(default_factory=list)
    pending_persons: float = 0.0
    pending_target: float | None = None
    is_full: bool = False

    @property
    def persons(self) -> float:
        return float(self.person_classes.sum())

    @property
    def car_count(self) -> float:
        return sum(p.count for p in self.parcels)

    @property
    def car_persons(self) -> float:
        return sum(p.persons for p in self.parcels)

    def audit_persons(self) -> float:
        """Every person waiting at this node, whatever pool they sit in."""
        total = self.persons + self.car_persons + self.pending_persons
        if self.staged_person_classes is not None:
            total += float(self.staged_person_classes.sum())
        total += sum(p.persons for p in self.staged_parcels)
        return total

    def add_parcel(self, parcel: CarParcel, staged: bool = False) -> None:
        pool = self.staged_parcels if staged else self.parcels
        pool.append(parcel)
        if len(pool) > MAX_PARCELS:
            merged = CarParcel(sum(p.count for p in pool),
                               sum(p.persons for p in pool))
            pool.clear()
            pool.append(merged)


def make_node_buffer(node: Node, ped_classes: int) -> NodeBuffer:
    staged = np.zeros(ped_classes) if node.kind is NodeKind.PARKING else None
    return NodeBuffer(
        node_id=node.id,
        person_classes=np.zeros(ped_classes),
        staged_person_classes=staged,
    )


def set_full(buffer: NodeBuffer, flag: bool, in_states: list[EdgeState]) -> None:
    """Mark a node full/not-full and sync its incoming edges' full zones.

    Turning full on starts a one-cell zone on edges that have none yet and
    leaves already-queued edges alone; turning it off releases every zone.
    """
    buffer.is_full = flag
    for state in in_states:
        if flag:
            if state.full_cells == 0:
                state.full_cells = 1
        else:
            state.full_cells = 0


def harvest_end_cell(state: EdgeState, buffer: NodeBuffer, parking: bool) -> float:
    """Move the end cell's content into the node buffer; returns people moved."""
    end = state.grid.end
    scale = state.width * state.grid.dx
    if state.mode is EdgeMode.WALKWAY:
        counts = state.dens[:, end] * scale
        state.dens[:, end] = 0.0
        moved = float(counts.sum())
        if moved <= 0.0:
            return 0.0
        if parking:
            buffer.staged_person_classes += counts
        else:
            buffer.person_classes += counts
        return moved

    cars = float(state.dens[:, end].sum()) * scale
    people = float(state.persons[:, end].sum()) * scale
    state.dens[:, end] = 0.0
    state.persons[:, end] = 0.0
    if cars <= 0.0 and people <= 0.0:
        return 0.0
    buffer.add_parcel(CarParcel(cars, people), staged=parking)
    return people


def traverse_edge(state: EdgeState, dyn: ModeDynamics, dt: float,
                  buffer: NodeBuffer, parking: bool) -> SolveStats:
    """Harvest-solve-harvest for one edge, honouring end-node fullness.

    A full end node means the edge only advances its interior (the full
    zone machinery inside solve_edge queues arrivals); otherwise the end
    cell is emptied into the node both before the step (mass conservation
    needs an empty end cell) and after (so this step's arrivals can be
    distributed this step).
    """
    if buffer.is_full:
        return solve_edge(state, dyn, dt)
    harvest_end_cell(state, buffer, parking)
    stats = solve_edge(state, dyn, dt)
    harvest_end_cell(state, buffer, parking)
    return stats


def _start_headroom(state: EdgeState, dyn: ModeDynamics) -> float:
    return dyn.rho_max - float(state.dens[:, state.grid.start].sum())


def _place_pedestrians(buffer: NodeBuffer, fraction: float, rho: float,
                       state: EdgeState, dyn: ModeDynamics) -> None:
    mix = buffer.person_classes / buffer.persons
    state.dens[:, state.grid.start] += fraction * rho * mix


def _consume_pedestrians(buffer: NodeBuffer, fraction: float) -> None:
    if fraction >= 1.0:
        buffer.person_classes[:] = 0.0
    else:
        buffer.person_classes *= 1.0 - fraction


def _place_cars(buffer: NodeBuffer, fraction: float, rho: float,
                state: EdgeState, dyn: ModeDynamics) -> None:
    # parcels carry no class identity, so cars re-enter via the partition mix
    count = buffer.car_count
    occupancy = buffer.car_persons / count if count > 0.0 else 0.0
    mix = np.asarray(dyn.partition.weights)
    state.dens[:, state.grid.start] += fraction * rho * mix
    state.persons[:, state.grid.start] += fraction * rho * occupancy * mix


def _consume_cars(buffer: NodeBuffer, fraction: float) -> None:
    if fraction >= 1.0:
        buffer.parcels.clear()
    else:
        for parcel in buffer.parcels:
            parcel.count *= 1.0 - fraction
            parcel.persons *= 1.0 - fraction


def _mode_pools(buffer: NodeBuffer):
    """(mode, count, place, consume) for each nonempty outbound pool."""
    pools = []
    if buffer.persons > 0.0:
        pools.append((EdgeMode.WALKWAY, buffer.persons,
                      _place_pedestrians, _consume_pedestrians))
    if buffer.car_count > 0.0 or buffer.car_persons > 0.0:
        pools.append((EdgeMode.STREET, buffer.car_count,
                      _place_cars, _consume_cars))
    return pools


def distribute_fixed(network: Network, buffer: NodeBuffer,
                     states: dict[str, EdgeState],
                     dynamics: dict[EdgeMode, ModeDynamics],
                     weights: dict[str, float] | None = None,
                     infinite: bool = False) -> None:
    """Width-proportional distribution onto all outgoing edges of each mode.

    Every outgoing edge receives the same start-cell density (scaled by the
    optional per-edge weights), chosen so a full placement empties the
    buffer. If any start cell lacks headroom, only the common fitting
    fraction (the friction) is placed and, for finite nodes, the node is
    marked full so its incoming edges start queueing.
    """
    out_ids = network.out_edges[buffer.node_id]
    fully_placed = True

    for mode, amount, place, consume in _mode_pools(buffer):
        edges = [eid for eid in out_ids if network.edges[eid].mode is mode]
        if not edges:
            raise RoutingDeadEndError(
                f"node {buffer.node_id!r}: buffered {mode.value} population "
                "has no outgoing edge of its mode"
            )
        dyn = dynamics[mode]
        w = {eid: (weights or {}).get(eid, 1.0) for eid in edges}
        denom = sum(w[eid] * states[eid].width * states[eid].grid.dx
                    for eid in edges)
        rho_base = amount / denom

        friction = 1.0
        for eid in edges:
            rho_e = w[eid] * rho_base
            if rho_e <= 0.0:
                continue
            friction = min(friction, max(0.0, _start_headroom(states[eid], dyn)) / rho_e)

        for eid in edges:
            place(buffer, friction, w[eid] * rho_base, states[eid], dyn)
        consume(buffer, friction)
        if friction < 1.0:
            fully_placed = False

    in_states = [states[eid] for eid in network.in_edges[buffer.node_id]]
    if not fully_placed and not infinite:
        set_full(buffer, True, in_states)
    elif buffer.is_full:
        set_full(buffer, False, in_states)


def distribute_routed(network: Network, buffer: NodeBuffer,
                      states: dict[str, EdgeState],
                      dynamics: dict[EdgeMode, ModeDynamics],
                      edge_weights: dict[str, float],
                      cost_to_go: dict[str, float],
                      infinite: bool = False) -> list[RouteBlockedEvent]:
    """Send the whole buffer down the cheapest open route of its mode.

    The chosen edge minimises its own current weight plus the cost-to-go
    from its head node; closed edges (infinite weight) and unreachable heads
    are skipped, so a closed best route falls through to the next one. With
    everything closed the population waits in place.
    """
    out_ids = network.out_edges[buffer.node_id]
    events: list[RouteBlockedEvent] = []
    fully_placed = True

    for mode, amount, place, consume in _mode_pools(buffer):
        edges = [eid for eid in out_ids if network.edges[eid].mode is mode]
        if not edges:
            raise RoutingDeadEndError(
                f"node {buffer.node_id!r}: buffered {mode.value} population "
                "has no outgoing edge of its mode"
            )
        best = None
        for eid in edges:
            head = network.edges[eid].head
            through = edge_weights.get(eid, float("inf")) + cost_to_go.get(head, float("inf"))
            if through == float("inf"):
                continue
            if best is None or (through, eid) < best:
                best = (through, eid)
        if best is None:
            events.append(RouteBlockedEvent(buffer.node_id))
            fully_placed = False
            continue

        eid = best[1]
        state = states[eid]
        dyn = dynamics[mode]
        rho = amount / (state.width * state.grid.dx)
        friction = 1.0
        if rho > 0.0:
            friction = min(1.0, max(0.0, _start_headroom(state, dyn)) / rho)
        place(buffer, friction, rho, state, dyn)
        consume(buffer, friction)
        if friction < 1.0:
            fully_placed = False

    in_states = [states[eid] for eid in network.in_edges[buffer.node_id]]
    if not fully_placed and not infinite:
        set_full(buffer, True, in_states)
    elif buffer.is_full:
        set_full(buffer, False, in_states)
    return events


def transform_at_parking(buffer: NodeBuffer, ped_dyn: ModeDynamics,
                         occupancy: OccupancyDistribution,
                         rng: np.random.Generator) -> None:
    """Turn staged arrivals at a parking node into the opposite mode.

    Arrived cars park and release exactly the people they carried, split
    into pedestrian velocity classes. Arrived pedestrians queue; each time
    the queue covers the sampled size of the next car, that car is emitted
    with exactly those people aboard. People are conserved to the digit.
    """
    released = sum(p.persons for p in buffer.staged_parcels)
    buffer.staged_parcels.clear()
    if released > 0.0:
        buffer.person_classes += partition_classes(released, ped_dyn.partition)

    if buffer.staged_person_classes is not None:
        arrived = float(buffer.staged_person_classes.sum())
        if arrived > 0.0:
            buffer.pending_persons += arrived
            buffer.staged_person_classes[:] = 0.0
    while True:
        if buffer.pending_target is None:
            buffer.pending_target = float(sample_occupancy(occupancy, rng))
        if buffer.pending_persons < buffer.pending_target:
            break
        buffer.add_parcel(CarParcel(1.0, buffer.pending_target))
        buffer.pending_persons -= buffer.pending_target
        buffer.pending_target = None
