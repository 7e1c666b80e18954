"""Byzantine-tolerant multihop broadcast toolkit.

Topology generators, the per-node protocol state machine, a deterministic
asynchronous simulator with byzantine adversaries, a static safety and
reliable-set analyzer, and a Monte Carlo experiment harness.
"""

from .analyzer import (
    PathWitness,
    ReliableSet,
    SafetyReport,
    UnsafeScenarioError,
    check_safety,
    find_disjoint_bounded_paths,
    is_critical,
    reliable_set,
)
from .experiments import (
    ExperimentConfig,
    Outcome,
    ResultRow,
    run_sweep,
    sample_scenario,
    trial,
    unsecured_baseline,
    wilson_interval,
)
from .protocol import (
    Information,
    Message,
    NodeState,
    ProtocolError,
    Setting,
    StepOutput,
    check_delivery,
    make_node_state,
    on_receive,
    source_init,
)
from .simulator import (
    Forge,
    Scenario,
    Script,
    Silent,
    Trace,
    count_bound,
    format_trace,
    parse_trace,
    run,
)
from .topology import (
    NodeId,
    Topology,
    TopologyParseError,
    enumerate_paths,
    is_simple_path,
    load_topology,
    make_grid,
    make_torus,
    save_topology,
)

__version__ = "0.1.0"
