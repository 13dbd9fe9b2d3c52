"""Directed network of streets and walkways with typed nodes.

Nodes and edges are plain frozen dataclasses; adjacency is derived once at
construction. All orderings exposed here are by ascending string id so every
consumer iterates deterministically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum


class NodeKind(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"
    PARKING = "parking"
    JUNCTION = "junction"


class EdgeMode(str, Enum):
    STREET = "street"
    WALKWAY = "walkway"


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind


@dataclass(frozen=True)
class Edge:
    """One directed link.

    length and dx are in metres. width is the usable walkway width in metres
    for walkway edges and the effective lane multiplicity (dimensionless,
    default 1) for street edges.
    """

    id: str
    mode: EdgeMode
    tail: str
    head: str
    length: float
    dx: float
    width: float = 1.0


@dataclass(frozen=True)
class CellGrid:
    """Cell layout of one edge: n cells, of which 0 and n-1 are ghosts."""

    n: int
    dx: float

    @property
    def start(self) -> int:
        return 1

    @property
    def end(self) -> int:
        return self.n - 2

    @property
    def interior(self) -> range:
        return range(1, self.n - 1)


def cell_count(length: float, dx: float) -> int:
    """Number of cells for an edge: nearest integer of length/dx plus ghosts.

    Rounding is half-up to keep the count independent of banker's rounding.
    """
    return int(math.floor(length / dx + 0.5)) + 2


def build_cell_grid(edge: Edge) -> CellGrid:
    n = cell_count(edge.length, edge.dx)
    if n < 4:
        raise ValueError(
            f"edge {edge.id!r}: needs at least 2 interior cells, "
            f"got {n - 2} (length={edge.length}, dx={edge.dx})"
        )
    return CellGrid(n=n, dx=edge.dx)


@dataclass(frozen=True)
class Network:
    nodes: dict[str, Node]
    edges: dict[str, Edge]
    out_edges: dict[str, tuple[str, ...]] = field(repr=False)
    in_edges: dict[str, tuple[str, ...]] = field(repr=False)

    def sorted_node_ids(self) -> list[str]:
        return sorted(self.nodes)

    def sorted_edge_ids(self) -> list[str]:
        return sorted(self.edges)

    def incident_modes(self, node_id: str) -> set[EdgeMode]:
        eids = set(self.out_edges[node_id]) | set(self.in_edges[node_id])
        return {self.edges[e].mode for e in eids}


def build_network(nodes, edges) -> Network:
    """Assemble a Network, deriving per-node adjacency from the edge list.

    Raises ValueError on duplicate ids; all other structural problems are
    left to validate_network so callers can collect them in one report.
    """
    node_map: dict[str, Node] = {}
    for node in nodes:
        if node.id in node_map:
            raise ValueError(f"duplicate node id {node.id!r}")
        node_map[node.id] = node

    edge_map: dict[str, Edge] = {}
    for edge in edges:
        if edge.id in edge_map:
            raise ValueError(f"duplicate edge id {edge.id!r}")
        edge_map[edge.id] = edge

    outgoing: dict[str, list[str]] = {nid: [] for nid in node_map}
    incoming: dict[str, list[str]] = {nid: [] for nid in node_map}
    for eid in sorted(edge_map):
        edge = edge_map[eid]
        if edge.tail in outgoing:
            outgoing[edge.tail].append(eid)
        if edge.head in incoming:
            incoming[edge.head].append(eid)

    return Network(
        nodes=node_map,
        edges=edge_map,
        out_edges={nid: tuple(v) for nid, v in outgoing.items()},
        in_edges={nid: tuple(v) for nid, v in incoming.items()},
    )


def validate_network(network: Network) -> list[str]:
    """Check structural rules and return one message per violation.

    An empty list means the network is usable. Messages always name the
    offending node or edge id.
    """
    problems: list[str] = []

    for eid in network.sorted_edge_ids():
        edge = network.edges[eid]
        if edge.tail not in network.nodes:
            problems.append(f"edge {eid!r}: tail node {edge.tail!r} does not exist")
        if edge.head not in network.nodes:
            problems.append(f"edge {eid!r}: head node {edge.head!r} does not exist")
        if edge.length <= 0.0:
            problems.append(f"edge {eid!r}: length must be positive")
        if edge.dx <= 0.0:
            problems.append(f"edge {eid!r}: dx must be positive")
        if edge.width <= 0.0:
            problems.append(f"edge {eid!r}: width must be positive")
        if edge.length > 0.0 and edge.dx > 0.0 and cell_count(edge.length, edge.dx) < 4:
            problems.append(f"edge {eid!r}: fewer than 2 interior cells at dx={edge.dx}")

    for nid in network.sorted_node_ids():
        node = network.nodes[nid]
        n_in = len(network.in_edges[nid])
        n_out = len(network.out_edges[nid])
        if node.kind is NodeKind.ENTRY:
            if n_in:
                problems.append(f"node {nid!r}: entry must have no incoming edges")
            if not n_out:
                problems.append(f"node {nid!r}: entry must have an outgoing edge")
        elif node.kind is NodeKind.EXIT:
            if n_out:
                problems.append(f"node {nid!r}: exit must have no outgoing edges")
            if not n_in:
                problems.append(f"node {nid!r}: exit must have an incoming edge")
        elif node.kind is NodeKind.PARKING:
            modes = network.incident_modes(nid)
            if EdgeMode.STREET not in modes:
                problems.append(f"node {nid!r}: parking needs an incident street edge")
            if EdgeMode.WALKWAY not in modes:
                problems.append(f"node {nid!r}: parking needs an incident walkway edge")
        elif node.kind is NodeKind.JUNCTION:
            if len(network.incident_modes(nid)) > 1:
                problems.append(f"node {nid!r}: junction joins edges of mixed modes")

    reachable = _nodes_reaching_exits(network)
    for nid in network.sorted_node_ids():
        if network.nodes[nid].kind is NodeKind.ENTRY and nid not in reachable:
            problems.append(f"node {nid!r}: entry has no path to any exit")

    return problems


def _nodes_reaching_exits(network: Network) -> set[str]:
    """All nodes from which some Exit node is reachable (reverse BFS)."""
    frontier = [
        nid for nid in network.sorted_node_ids()
        if network.nodes[nid].kind is NodeKind.EXIT
    ]
    seen = set(frontier)
    while frontier:
        nid = frontier.pop()
        for eid in network.in_edges[nid]:
            tail = network.edges[eid].tail
            if tail in network.nodes and tail not in seen:
                seen.add(tail)
                frontier.append(tail)
    return seen
