"""Group testing with network-informed pooling."""

from .analytics import (
    TestCountDistribution,
    dorfman_distribution,
    expected_tests_dorfman,
    expected_tests_network,
    lower_bound,
    network_distribution,
    optimal_group_size,
    verify_theorem1,
)
from .epidemic import (
    GroupAssignment,
    InfectionState,
    SimStats,
    group_by_community,
    group_perfect,
    group_random,
    monte_carlo,
    monte_carlo_sbm,
    run_two_stage,
    seed_epidemic,
)
from .errors import *  # noqa: F401,F403
from .netgen import (
    Network,
    Partition,
    estimate_pq,
    generate_sbm,
    load_edge_list,
    louvain,
    partition_stats,
)
from .params import (
    ModelParams,
    calibrate_alpha,
    expected_infected_dorfman,
    expected_infected_network,
    validate,
)

__version__ = "0.1.0"
