"""Analytic QoS bounds and stochastic validation for sliced factory networks.

Modules:

* ``curves``   — min-plus arrival/service curves and deterministic bounds
* ``cyclic``   — reliability models of the cyclic resource-slicing schemes
* ``scenario`` — scenario model, file format, and the bundled case study
* ``e2e``      — end-to-end composition, verdicts, and sweep tables
* ``sim``      — Monte Carlo and discrete-event validation of the analytics
* ``cli``      — command-line front end
"""

from .curves import (
    NoLeftoverServiceError,
    PiecewiseAffineCurve,
    RateLatency,
    TokenBucket,
    UnstableSystemError,
    backlog_bound,
    delay_bound,
    leftover_service,
    min_plus_convolution,
    output_bound,
)
from .cyclic import (
    CycleApp,
    CycleSpec,
    Deterministic,
    Fixed,
    Overwrite,
    Pmf,
    Poisson,
    SharedPool,
    alarm_egress_bound,
    fixed_reliability,
    overwrite_delivered_fraction,
    overwrite_deterministic_reliability,
    overwrite_stochastic_reliability,
    shared_pool_reliability,
    utilization,
)
from .e2e import (
    E2EAnalysis,
    PathResult,
    analyze_scenario,
    path_delay,
    path_reliability,
    sweep_latency,
    sweep_reliability,
)
from .scenario import (
    Scenario,
    ScenarioError,
    ScenarioFormatError,
    load_case_study,
    parse_scenario,
    serialize_scenario,
)
from .sim import SimConfig, SimReport, simulate_cycle_spec, simulate_cycles, simulate_queues

__version__ = "0.1.0"

__all__ = [
    "NoLeftoverServiceError",
    "PiecewiseAffineCurve",
    "RateLatency",
    "TokenBucket",
    "UnstableSystemError",
    "backlog_bound",
    "delay_bound",
    "leftover_service",
    "min_plus_convolution",
    "output_bound",
    "CycleApp",
    "CycleSpec",
    "Deterministic",
    "Fixed",
    "Overwrite",
    "Pmf",
    "Poisson",
    "SharedPool",
    "alarm_egress_bound",
    "fixed_reliability",
    "overwrite_delivered_fraction",
    "overwrite_deterministic_reliability",
    "overwrite_stochastic_reliability",
    "shared_pool_reliability",
    "utilization",
    "E2EAnalysis",
    "PathResult",
    "analyze_scenario",
    "path_delay",
    "path_reliability",
    "sweep_latency",
    "sweep_reliability",
    "Scenario",
    "ScenarioError",
    "ScenarioFormatError",
    "load_case_study",
    "parse_scenario",
    "serialize_scenario",
    "SimConfig",
    "SimReport",
    "simulate_cycle_spec",
    "simulate_cycles",
    "simulate_queues",
]
