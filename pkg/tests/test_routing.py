import math

import numpy as np
import pytest

import oracles
from hybridflow import (CLOSED, Edge, EdgeMode, Node, NodeKind, build_network,
                        car_dynamics, edge_weight, make_edge_state,
                        mean_interior_density, partition_classes,
                        pedestrian_dynamics, shortest_paths)

PED = pedestrian_dynamics()
CARS = car_dynamics()


def walkway_state(length=10.0, dx=0.5, rho=0.0):
    edge = Edge("w", EdgeMode.WALKWAY, "a", "b", length, dx)
    state = make_edge_state(edge, PED, 1.0)
    if rho:
        for cell in state.grid.interior:
            state.dens[:, cell] = partition_classes(rho, PED.partition)
    return state


def test_mean_interior_density_ignores_ghosts():
    state = walkway_state(rho=2.0)
    state.dens[:, 0] = 99.0  # ghosts must not contribute
    assert mean_interior_density(state) == pytest.approx(2.0, rel=1e-12)


def test_empty_walkway_weight_is_free_flow_time():
    state = walkway_state(length=10.0)
    assert edge_weight(state, PED) == pytest.approx(
        oracles.FROZEN["empty_walkway_weight_len10"], rel=1e-12)


def test_street_weight_at_spot_density():
    edge = Edge("s", EdgeMode.STREET, "a", "b", 150.0, 2.0)
    state = make_edge_state(edge, CARS, 1.0)
    for cell in state.grid.interior:
        state.dens[0, cell] = 0.06
    assert edge_weight(state, CARS) == pytest.approx(
        oracles.FROZEN["street_weight_len150_rho006"], rel=1e-12)


def test_jammed_edge_is_closed():
    state = walkway_state(rho=PED.rho_max)
    assert edge_weight(state, PED) == CLOSED
    # a hair under jam still counts as closed through the tolerance
    state2 = walkway_state(rho=PED.rho_max - 1e-13)
    assert edge_weight(state2, PED) == CLOSED


def diamond(weights):
    """a -> b/c -> d plus a slow direct a -> d edge."""
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("b", NodeKind.JUNCTION),
         Node("c", NodeKind.JUNCTION), Node("d", NodeKind.EXIT)],
        [Edge("ab", EdgeMode.WALKWAY, "a", "b", 1.0, 0.25),
         Edge("ac", EdgeMode.WALKWAY, "a", "c", 1.0, 0.25),
         Edge("bd", EdgeMode.WALKWAY, "b", "d", 1.0, 0.25),
         Edge("cd", EdgeMode.WALKWAY, "c", "d", 1.0, 0.25),
         Edge("ad", EdgeMode.WALKWAY, "a", "d", 1.0, 0.25)],
    )
    return net, weights


def test_shortest_paths_costs_and_next_edges():
    net, weights = diamond({"ab": 1.0, "ac": 2.0, "bd": 5.0, "cd": 1.0, "ad": 9.0})
    table = shortest_paths(net, weights, "d")
    assert table.cost["d"] == 0.0
    assert table.cost["b"] == 5.0
    assert table.cost["c"] == 1.0
    assert table.cost["a"] == 3.0  # a -> c -> d
    assert table.next_edge["a"] == "ac"
    assert table.next_edge["c"] == "cd"
    assert table.next_edge["d"] is None
    assert table.reachable("a")


def test_shortest_paths_skips_closed_edges():
    net, weights = diamond({"ab": 1.0, "ac": CLOSED, "bd": 1.0, "cd": 1.0,
                            "ad": 9.0})
    table = shortest_paths(net, weights, "d")
    assert table.cost["a"] == 2.0  # a -> b -> d
    assert table.cost["c"] == 1.0  # cd itself stays open
    assert table.next_edge["a"] == "ab"


def test_unreachable_node_has_infinite_cost():
    net, weights = diamond({"ab": CLOSED, "ac": CLOSED, "bd": 1.0, "cd": 1.0,
                            "ad": CLOSED})
    table = shortest_paths(net, weights, "d")
    assert table.cost["a"] == math.inf
    assert table.next_edge["a"] is None
    assert not table.reachable("a")


def test_tie_between_routes_prefers_lower_edge_id():
    net, weights = diamond({"ab": 1.0, "ac": 1.0, "bd": 1.0, "cd": 1.0,
                            "ad": 2.0})
    table = shortest_paths(net, weights, "d")
    # ab, ac and ad all reach d at cost 2; the id order decides
    assert table.cost["a"] == 2.0
    assert table.next_edge["a"] == "ab"


def test_multi_destination_takes_the_nearer_exit():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("m", NodeKind.JUNCTION),
         Node("x1", NodeKind.EXIT), Node("x2", NodeKind.EXIT)],
        [Edge("am", EdgeMode.WALKWAY, "a", "m", 1.0, 0.25),
         Edge("m1", EdgeMode.WALKWAY, "m", "x1", 1.0, 0.25),
         Edge("m2", EdgeMode.WALKWAY, "m", "x2", 1.0, 0.25)],
    )
    table = shortest_paths(net, {"am": 1.0, "m1": 7.0, "m2": 4.0}, ("x1", "x2"))
    assert table.cost["m"] == 4.0
    assert table.next_edge["m"] == "m2"
    assert table.cost["x1"] == 0.0 and table.cost["x2"] == 0.0


def test_unknown_destination_raises():
    net, weights = diamond({})
    with pytest.raises(KeyError):
        shortest_paths(net, weights, "nope")


def random_graph(rng):
    n = int(rng.integers(2, 9))
    nodes = [Node(f"n{i}", NodeKind.JUNCTION) for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(n):
            if i == j or rng.random() > 0.45:
                continue
            eid = f"e{i}_{j}"
            edges.append(Edge(eid, EdgeMode.WALKWAY, f"n{i}", f"n{j}", 1.0, 0.25))
    net = build_network(nodes, edges)
    weights = {}
    for eid in net.sorted_edge_ids():
        weights[eid] = CLOSED if rng.random() < 0.2 else float(rng.uniform(0.1, 10.0))
    return net, weights


def test_random_graphs_match_enumeration_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        net, weights = random_graph(rng)
        target = net.sorted_node_ids()[-1]
        table = shortest_paths(net, weights, target)
        out_map = {
            nid: [(eid, net.edges[eid].head) for eid in net.out_edges[nid]]
            for nid in net.nodes
        }
        for source in net.sorted_node_ids():
            want = oracles.enumerate_route_cost(out_map, source, target, weights)
            assert table.cost[source] == want
