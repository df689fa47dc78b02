"""Risk-averse coalition formation over line, Euclidean and graph topologies."""
from .bounds import (
    BoundCheck,
    euclid_bound_basic,
    euclid_bound_improved,
    exclusive_contribution_cap,
    line_richest_bound,
    min_money_by_area,
    min_money_by_size,
    regular_graph_bound,
    verify_richest_bound,
)
from .equilibrium import (
    DynamicsConfig,
    EquilibriumReport,
    Move,
    best_response_dynamics,
    enumerate_nash,
    find_incentivized_move,
    is_nash,
    richest_group,
)
from .estimator import CoalitionFormation, NashEnumerator
from .generators import feasible_kl, gen_Gkl, gen_Gz, gen_random
from .model import (
    Partition,
    RiskModel,
    defect_incentivized,
    group_expected_utility,
    merge_incentivized,
    utility,
)
from .topology import (
    CoverageReport,
    EuclideanD,
    GraphTopology,
    Line1D,
    SamplingConfig,
    coverage_measure,
    marginal_contribution,
    total_measure,
    two_ball_intersection_bound,
    unit_ball_volume,
)

__version__ = "0.1.0"
