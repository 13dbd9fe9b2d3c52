"""Macroscopic mixed pedestrian and car flow on a shared network.

Densities are split into velocity classes and advected cell by cell along
every edge; node buffers hand people and cars between edges, parking nodes
convert between the two modes, and an exact per-person audit runs after
every step.
"""

from .diagrams import (CarParams, ModeDynamics, PedestrianParams,
                       VelocityClassPartition, build_partition, car_dynamics,
                       car_velocity, constant_speed_dynamics,
                       normal_band_masses, partition_classes,
                       pedestrian_dynamics, pedestrian_velocity, total_density)
from .engine import (AuditError, AuditRecord, DemandEntry, DemandSchedule,
                     ExitEvent, ResultArchive, SimulationConfig,
                     SimulationEngine, audit_people, run_simulation)
from .network import (CellGrid, Edge, EdgeMode, Network, Node, NodeKind,
                      build_cell_grid, build_network, cell_count,
                      validate_network)
from .report import render_figures
from .results import write_outputs
from .routing import (CLOSED, RoutingTable, all_edge_weights, edge_weight,
                      mean_interior_density, shortest_paths)
from .scenario import (ModelParams, Scenario, ScenarioError,
                       ScenarioSchemaError, ScenarioSyntaxError,
                       ScenarioValidationError, build_engine, load_scenario,
                       parse_scenario, save_scenario, scenario_to_dict)
from .solver import (EdgeState, JamEvent, NegativeDensityError,
                     StabilityError, distribute_last_densities, edge_cfl,
                     make_edge_state, solve_edge, stability_check, step_edge)
from .transfer import (CarParcel, NodeBuffer, OccupancyDistribution,
                       RouteBlockedEvent, RoutingDeadEndError,
                       distribute_fixed, distribute_routed, make_node_buffer,
                       sample_occupancy, set_full, transform_at_parking,
                       traverse_edge)

__version__ = "0.1.0"

__all__ = [
    "AuditError", "AuditRecord", "CLOSED", "CarParams", "CarParcel",
    "CellGrid", "DemandEntry", "DemandSchedule", "Edge", "EdgeMode",
    "EdgeState", "ExitEvent", "JamEvent", "ModeDynamics", "ModelParams",
    "NegativeDensityError", "Network", "Node", "NodeBuffer", "NodeKind",
    "OccupancyDistribution", "PedestrianParams", "ResultArchive",
    "RouteBlockedEvent", "RoutingDeadEndError", "RoutingTable", "Scenario",
    "ScenarioError", "ScenarioSchemaError", "ScenarioSyntaxError",
    "ScenarioValidationError", "SimulationConfig", "SimulationEngine",
    "StabilityError", "VelocityClassPartition", "all_edge_weights",
    "audit_people", "build_cell_grid", "build_engine", "build_network",
    "build_partition", "car_dynamics", "car_velocity", "cell_count",
    "constant_speed_dynamics", "distribute_fixed", "distribute_last_densities",
    "distribute_routed", "edge_cfl", "edge_weight", "load_scenario",
    "make_edge_state", "make_node_buffer", "mean_interior_density",
    "normal_band_masses", "parse_scenario", "partition_classes",
    "pedestrian_dynamics", "pedestrian_velocity", "render_figures",
    "run_simulation", "sample_occupancy", "save_scenario", "scenario_to_dict",
    "set_full", "shortest_paths", "solve_edge", "stability_check", "step_edge",
    "total_density", "transform_at_parking", "traverse_edge", "write_outputs",
    "__version__",
]
