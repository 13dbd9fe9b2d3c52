"""Congestion-aware edge weights and shortest routes to the exits.

An edge's weight is the time its mode's mean free-flow rider needs to cross
it at the edge's current mean density. A saturated edge (mean density at or
above jam) is closed: weight infinity, excluded from route building.

Routes are cost-to-go tables: one reverse Dijkstra from the destination
(or from all destinations at once) yields, per node, the remaining travel
time and the outgoing edge to take next. Ties are broken by ascending edge
id so rebuilds are reproducible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable

from .diagrams import ModeDynamics
from .network import EdgeMode, Network
from .solver import EdgeState

CLOSED = math.inf

#: slack on the closed test so jam-by-round-off still counts as jammed
_CLOSE_TOL = 1e-12


def mean_interior_density(state: EdgeState) -> float:
    """Mean total density over the edge's interior cells."""
    tot = state.total()
    return float(tot[1 : state.grid.n - 1].mean())


def edge_weight(state: EdgeState, dyn: ModeDynamics) -> float:
    """Expected traversal time in seconds, or CLOSED when jammed."""
    rho_bar = mean_interior_density(state)
    if rho_bar >= dyn.rho_max - _CLOSE_TOL:
        return CLOSED
    speed = dyn.mean_speed(rho_bar)
    if speed <= 0.0:
        return CLOSED
    return state.length / speed


def all_edge_weights(network: Network, states: dict[str, EdgeState],
                     dynamics: dict[EdgeMode, ModeDynamics]) -> dict[str, float]:
    return {
        eid: edge_weight(states[eid], dynamics[network.edges[eid].mode])
        for eid in network.sorted_edge_ids()
    }


@dataclass(frozen=True)
class RoutingTable:
    """Cost-to-go and next edge per node, toward a fixed destination set."""

    destinations: tuple[str, ...]
    cost: dict[str, float]
    next_edge: dict[str, str | None]

    def reachable(self, node_id: str) -> bool:
        return self.cost.get(node_id, math.inf) < math.inf


def shortest_paths(network: Network, weights: dict[str, float],
                   destination: str | Iterable[str]) -> RoutingTable:
    """Build the cost-to-go table toward one or several destination nodes.

    Closed edges never enter the search. next_edge holds, for every node
    that can still reach a destination, the cheapest outgoing edge (ties by
    ascending edge id); destinations themselves carry cost 0 and no edge.
    """
    if isinstance(destination, str):
        destinations = (destination,)
    else:
        destinations = tuple(sorted(destination))
    for dest in destinations:
        if dest not in network.nodes:
            raise KeyError(f"destination node {dest!r} does not exist")

    cost: dict[str, float] = {nid: math.inf for nid in network.nodes}
    heap: list[tuple[float, str]] = []
    for dest in destinations:
        cost[dest] = 0.0
        heapq.heappush(heap, (0.0, dest))

    while heap:
        dist, nid = heapq.heappop(heap)
        if dist > cost[nid]:
            continue  # stale entry
        for eid in network.in_edges[nid]:
            w = weights.get(eid, CLOSED)
            if w == CLOSED:
                continue
            tail = network.edges[eid].tail
            candidate = w + dist
            if candidate < cost[tail]:
                cost[tail] = candidate
                heapq.heappush(heap, (candidate, tail))

    next_edge: dict[str, str | None] = {}
    for nid in network.sorted_node_ids():
        best: tuple[float, str] | None = None
        for eid in network.out_edges[nid]:
            w = weights.get(eid, CLOSED)
            if w == CLOSED:
                continue
            through = w + cost[network.edges[eid].head]
            if through == math.inf:
                continue
            if best is None or (through, eid) < best:
                best = (through, eid)
        if nid in destinations or best is None:
            next_edge[nid] = None
        else:
            next_edge[nid] = best[1]

    return RoutingTable(destinations, cost, next_edge)
