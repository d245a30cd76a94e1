"""Energy-constrained multi-robot coverage control with bearing-rigid
network maintenance: rigidity mathematics, hierarchical network
construction and repair, hybrid energy automata with provably safe
recharge guards, minimum-time return planning, tracking MPC with bearing
costs, and a deterministic simulation harness."""

from .coverage import (
    MissionSpace,
    VoronoiCell,
    cell_centroid,
    coverage_cost,
    voronoi_partition,
)
from .dynamics import DOUBLE_INTEGRATOR, SINGLE_INTEGRATOR, RobotModel
from .energy import (
    EnergyParams,
    EnergyState,
    Mode,
    automaton_step,
    charge_step,
    consumption,
    discharge_step,
    guard_1_to_2,
    guard_2_to_3,
    guard_3_to_1,
)
from .mpc import BearingTargets, MpcConfig, MpcSolution, desired_bearings, mpc_control
from .network import (
    HennebergRecord,
    HennebergStep,
    build_network,
    choose_anchors,
    energy_level,
    insert_robot,
)
from .planner import ReturnPlan, feasibility_probe, follow_plan, min_time_return
from .reconfig import (
    DepartureBatch,
    RepairReport,
    common_neighbors,
    contract_edge,
    greedy_rigidity_repair,
    is_noncontractible,
    reconfigure,
    remove_level3,
    remove_level4,
)
from .rigidity import (
    Configuration,
    Framework,
    Graph,
    IbrReport,
    bearing_function,
    bearing_of,
    bearing_rigidity_matrix,
    edge_splitting,
    is_ibr,
    trivial_motion_basis,
    vertex_addition,
)
from .scenario import ScenarioConfig, config_from_dict, config_from_json, default_scenario
from .simulate import SimResult, simulate, write_outputs

__all__ = [name for name in dir() if not name.startswith("_")]
