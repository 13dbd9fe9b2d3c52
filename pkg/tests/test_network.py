import pytest

from hybridflow import (Edge, EdgeMode, Node, NodeKind, build_cell_grid,
                        build_network, cell_count, validate_network)


def walkway(eid, tail, head, length=10.0, dx=0.5, width=1.0):
    return Edge(eid, EdgeMode.WALKWAY, tail, head, length, dx, width)


def street(eid, tail, head, length=100.0, dx=2.0):
    return Edge(eid, EdgeMode.STREET, tail, head, length, dx)


def line_network():
    return build_network(
        [Node("a", NodeKind.ENTRY), Node("b", NodeKind.JUNCTION),
         Node("c", NodeKind.EXIT)],
        [walkway("e1", "a", "b"), walkway("e2", "b", "c")],
    )


def test_cell_count_adds_two_ghosts():
    assert cell_count(1.0, 0.01) == 102
    assert cell_count(5.0, 0.5) == 12


def test_cell_count_rounds_half_up():
    # 1.05 / 0.1 = 10.5 must not fall to banker's rounding
    assert cell_count(1.05, 0.1) == 13
    assert cell_count(0.25, 0.1) == 5


def test_build_cell_grid_layout():
    grid = build_cell_grid(walkway("e", "a", "b", length=2.0, dx=0.5))
    assert grid.n == 6
    assert grid.start == 1
    assert grid.end == 4
    assert list(grid.interior) == [1, 2, 3, 4]


def test_build_cell_grid_rejects_short_edges():
    with pytest.raises(ValueError, match="interior cells"):
        build_cell_grid(walkway("e", "a", "b", length=0.5, dx=0.5))


def test_adjacency_is_sorted_by_edge_id():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("b", NodeKind.EXIT)],
        [walkway("z9", "a", "b"), walkway("a1", "a", "b"), walkway("m5", "a", "b")],
    )
    assert net.out_edges["a"] == ("a1", "m5", "z9")
    assert net.in_edges["b"] == ("a1", "m5", "z9")
    assert net.sorted_edge_ids() == ["a1", "m5", "z9"]


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError, match="duplicate node"):
        build_network([Node("a", NodeKind.ENTRY), Node("a", NodeKind.EXIT)], [])
    with pytest.raises(ValueError, match="duplicate edge"):
        build_network(
            [Node("a", NodeKind.ENTRY), Node("b", NodeKind.EXIT)],
            [walkway("e", "a", "b"), walkway("e", "a", "b")],
        )


def test_valid_line_network_has_no_problems():
    assert validate_network(line_network()) == []


def test_validate_flags_dangling_endpoints():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("b", NodeKind.EXIT)],
        [walkway("e1", "a", "ghost")],
    )
    problems = validate_network(net)
    assert any("ghost" in p for p in problems)


def test_validate_flags_bad_dimensions():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("b", NodeKind.EXIT)],
        [Edge("e1", EdgeMode.WALKWAY, "a", "b", length=-1.0, dx=0.0, width=0.0)],
    )
    problems = "\n".join(validate_network(net))
    assert "length" in problems
    assert "dx" in problems
    assert "width" in problems


def test_validate_enforces_entry_and_exit_degree():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("b", NodeKind.EXIT)],
        [walkway("back", "b", "a")],
    )
    problems = "\n".join(validate_network(net))
    assert "entry must have no incoming" in problems
    assert "entry must have an outgoing" in problems
    assert "exit must have no outgoing" in problems
    assert "exit must have an incoming" in problems


def test_validate_requires_both_modes_at_parking():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("p", NodeKind.PARKING),
         Node("z", NodeKind.EXIT)],
        [street("s1", "a", "p"), street("s2", "p", "z")],
    )
    problems = "\n".join(validate_network(net))
    assert "walkway" in problems


def test_validate_rejects_mixed_mode_junction():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("j", NodeKind.JUNCTION),
         Node("z", NodeKind.EXIT)],
        [street("s1", "a", "j"), walkway("w1", "j", "z")],
    )
    problems = "\n".join(validate_network(net))
    assert "mixed modes" in problems


def test_validate_requires_path_from_entry_to_exit():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("b", NodeKind.JUNCTION),
         Node("c", NodeKind.ENTRY), Node("z", NodeKind.EXIT)],
        [walkway("e1", "a", "b"), walkway("e2", "c", "z")],
    )
    problems = "\n".join(validate_network(net))
    assert "'a': entry has no path" in problems
    assert "'c'" not in problems


def test_incident_modes():
    net = build_network(
        [Node("a", NodeKind.ENTRY), Node("p", NodeKind.PARKING),
         Node("z", NodeKind.EXIT)],
        [street("s1", "a", "p"), walkway("w1", "p", "z")],
    )
    assert net.incident_modes("p") == {EdgeMode.STREET, EdgeMode.WALKWAY}
    assert net.incident_modes("a") == {EdgeMode.STREET}
