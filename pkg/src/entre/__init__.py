"""Energy-aware multipath traffic engineering: the ENTRE heuristic, an offline
min-max optimizer and an OSPF baseline on a fluid round-based simulator."""

from entre.baselines import equal_split_assign, ospf_assign
from entre.energy import NetworkState, PowerProfile, link_energy, path_energy, path_utilization, recompute_state
from entre.engine import EntreParams, entre_round, run_until_convergence
from entre.model import (
    IePair,
    Link,
    LinkState,
    NoPathError,
    Path,
    Scenario,
    SplitVector,
    Topology,
    bottleneck_capacity,
    generate_disjoint_paths,
    validate_topology,
)
from entre.optimizer import (
    ObjectiveValue,
    brute_force_solve,
    descent_solve,
    evaluate_objective,
    optimal_energy_saving,
)
from entre.scenario_io import dump_scenario, load_bundled, parse_scenario
from entre.simulator import MetricsSnapshot, deliver, run, summarize

__version__ = "0.1.0"
