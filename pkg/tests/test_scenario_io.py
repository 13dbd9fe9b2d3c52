import json
from pathlib import Path

import pytest

from hybridflow import (Scenario, ScenarioError, ScenarioSchemaError,
                        ScenarioSyntaxError, ScenarioValidationError,
                        build_engine, load_scenario, parse_scenario,
                        save_scenario, scenario_to_dict)

SCENARIO_DIR = Path(__file__).parent.parent / "scenarios"


def minimal_dict():
    return {
        "schema": "hybridflow-scenario/1",
        "name": "t",
        "nodes": [
            {"id": "a", "kind": "entry"},
            {"id": "b", "kind": "exit"},
        ],
        "edges": [
            {"id": "w1", "mode": "walkway", "from": "a", "to": "b",
             "length_m": 5.0, "dx_m": 0.25},
        ],
        "demand": [
            {"node": "a", "kind": "pedestrian", "rate_per_s": 1.0,
             "t_start_s": 0.0, "t_end_s": 2.0},
        ],
        "sim": {"dt_s": 0.1, "max_steps": 50, "seed": 4},
    }


def test_bundled_scenarios_load():
    for path in sorted(SCENARIO_DIR.glob("*.json")):
        scenario = load_scenario(path)
        assert scenario.name == path.stem
        assert scenario.network.nodes


def test_parse_minimal_dict():
    scenario = parse_scenario(minimal_dict())
    assert scenario.name == "t"
    assert set(scenario.network.edges) == {"w1"}
    assert scenario.config.dt == 0.1
    assert scenario.config.max_steps == 50
    assert scenario.schedule.entries[0].rate == 1.0
    # unset params fall back to the defaults
    assert scenario.params.pedestrian.vff == 1.34
    assert scenario.params.car.rho_max == 0.12
    assert scenario.params.ped_classes == 16


def test_round_trip_is_identity():
    first = parse_scenario(minimal_dict())
    again = parse_scenario(scenario_to_dict(first))
    assert again == first


def test_save_and_load_round_trip(tmp_path):
    scenario = load_scenario(SCENARIO_DIR / "park_and_ride.json")
    out = tmp_path / "copy.json"
    save_scenario(scenario, out)
    assert load_scenario(out) == Scenario(
        network=scenario.network, schedule=scenario.schedule,
        config=scenario.config, params=scenario.params,
        node_weights=scenario.node_weights,
        initial_density=scenario.initial_density, name=scenario.name)


def test_syntax_error_reports_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"schema": "hybridflow-scenario/1",\n  "nodes": [}')
    with pytest.raises(ScenarioSyntaxError, match="line 2"):
        load_scenario(path)


def test_missing_file_is_a_scenario_error():
    with pytest.raises(ScenarioError, match="cannot read"):
        load_scenario("/nonexistent/run.json")


def test_wrong_schema_tag_rejected():
    data = minimal_dict()
    data["schema"] = "hybridflow-scenario/99"
    with pytest.raises(ScenarioSchemaError, match="unsupported schema"):
        parse_scenario(data)


def test_unknown_keys_are_named():
    data = minimal_dict()
    data["extra"] = 1
    with pytest.raises(ScenarioSchemaError, match="'extra'"):
        parse_scenario(data)
    data = minimal_dict()
    data["edges"][0]["speed"] = 3.0
    with pytest.raises(ScenarioSchemaError, match=r"edges\[0\].*'speed'"):
        parse_scenario(data)


def test_missing_required_key_is_named():
    data = minimal_dict()
    del data["edges"][0]["length_m"]
    with pytest.raises(ScenarioSchemaError, match="length_m"):
        parse_scenario(data)


def test_type_errors_name_the_path():
    data = minimal_dict()
    data["edges"][0]["length_m"] = "long"
    with pytest.raises(ScenarioSchemaError, match="expected number"):
        parse_scenario(data)
    data = minimal_dict()
    data["sim"]["seed"] = 1.5
    with pytest.raises(ScenarioSchemaError, match=r"\$\.sim\.seed"):
        parse_scenario(data)
    data = minimal_dict()
    data["sim"]["seed"] = True  # bools are not integers here
    with pytest.raises(ScenarioSchemaError, match="expected integer"):
        parse_scenario(data)


def test_bad_enums_rejected():
    data = minimal_dict()
    data["nodes"][0]["kind"] = "portal"
    with pytest.raises(ScenarioSchemaError, match="portal"):
        parse_scenario(data)
    data = minimal_dict()
    data["edges"][0]["mode"] = "tunnel"
    with pytest.raises(ScenarioSchemaError, match="tunnel"):
        parse_scenario(data)


def test_demand_shape_errors():
    data = minimal_dict()
    data["demand"][0]["count"] = 3.0  # rate and count together
    with pytest.raises(ScenarioSchemaError, match="exactly one"):
        parse_scenario(data)
    data = minimal_dict()
    del data["demand"][0]["t_end_s"]
    with pytest.raises(ScenarioSchemaError, match="t_end"):
        parse_scenario(data)


def test_network_validation_failures_are_collected():
    data = minimal_dict()
    data["demand"][0]["node"] = "b"  # exits take no demand
    data["edges"][0]["to"] = "ghost"
    with pytest.raises(ScenarioValidationError) as err:
        parse_scenario(data)
    message = str(err.value)
    assert "ghost" in message
    assert "demand[0]" in message


def test_weights_must_name_outgoing_edges():
    data = minimal_dict()
    data["nodes"][0]["weights"] = {"w9": 2.0}
    with pytest.raises(ScenarioValidationError, match="w9"):
        parse_scenario(data)
    data = minimal_dict()
    data["nodes"][0]["weights"] = {"w1": -1.0}
    with pytest.raises(ScenarioSchemaError, match="positive"):
        parse_scenario(data)


def test_initial_density_checks():
    data = minimal_dict()
    data["initial"] = {"w1": 0.5}
    scenario = parse_scenario(data)
    assert scenario.initial_density == {"w1": 0.5}
    data["initial"] = {"w9": 0.5}
    with pytest.raises(ScenarioValidationError, match="w9"):
        parse_scenario(data)
    data["initial"] = {"w1": -2.0}
    with pytest.raises(ScenarioSchemaError, match="nonnegative"):
        parse_scenario(data)


def test_sim_value_errors_surface_as_schema_errors():
    data = minimal_dict()
    data["sim"]["alpha"] = 2.0
    with pytest.raises(ScenarioSchemaError, match="alpha"):
        parse_scenario(data)


def test_occupancy_counts_override():
    data = minimal_dict()
    data["params"] = {"occupancy_counts": [10, 0, 0, 0, 0, 10]}
    scenario = parse_scenario(data)
    assert scenario.params.occupancy.mean() == pytest.approx(3.5)
    data["params"] = {"occupancy_counts": [0]}
    with pytest.raises(ScenarioSchemaError, match="occupancy"):
        parse_scenario(data)


def test_build_engine_runs_a_loaded_scenario():
    scenario = parse_scenario(minimal_dict())
    engine = build_engine(scenario)
    archive = engine.run()
    assert archive.steps_run <= 50
    assert archive.injected_persons > 0.0


def test_saved_file_is_pretty_json(tmp_path):
    scenario = parse_scenario(minimal_dict())
    out = tmp_path / "s.json"
    save_scenario(scenario, out)
    text = out.read_text()
    assert text.endswith("\n")
    data = json.loads(text)
    assert data["schema"] == "hybridflow-scenario/1"
    assert data["sim"]["dt_s"] == 0.1
