"""Non-restarting bounded CUSUM charts with pointwise FDR control.

Library layout:

* :mod:`cusumfdr.chart`    -- chart recursion, variants, grid discretization.
* :mod:`cusumfdr.nulldist` -- exact finite-state in-control distributions.
* :mod:`cusumfdr.fdr`      -- linear step-up procedures and m0 estimators.
* :mod:`cusumfdr.monitor`  -- multi-stream monitoring loop.
* :mod:`cusumfdr.simlab`   -- regime simulation and false-discovery accounting.
* :mod:`cusumfdr.cli`      -- command-line front end.
"""

from .chart import (
    ChartConfig,
    ChartRun,
    ChartState,
    IncrementModel,
    discretize,
    increment,
    run_standalone,
    update,
)
from .fdr import (
    M0Estimator,
    PValueSet,
    RejectionSet,
    adaptive_step_up,
    bh,
    estimate_m0,
    two_step,
)
from .monitor import MonitorDecision, NullTable, StreamSpec, run, signal_periods, step
from .nulldist import (
    InControlModel,
    NullDistribution,
    NullDistributionCache,
    TransitionMatrix,
    build_transition,
    distribution_at,
    distributions_up_to,
    tail,
)
from .simlab import (
    FdrEstimate,
    GroundTruthLog,
    RegimeConfig,
    Scenario,
    StochOrderReport,
    account,
    check_stoch_order,
    estimate_fdr,
    generate_observations,
    simulate_regimes,
)

__version__ = "0.1.0"

__all__ = [
    "ChartConfig",
    "ChartRun",
    "ChartState",
    "IncrementModel",
    "discretize",
    "increment",
    "run_standalone",
    "update",
    "M0Estimator",
    "PValueSet",
    "RejectionSet",
    "adaptive_step_up",
    "bh",
    "estimate_m0",
    "two_step",
    "MonitorDecision",
    "NullTable",
    "StreamSpec",
    "run",
    "signal_periods",
    "step",
    "InControlModel",
    "NullDistribution",
    "NullDistributionCache",
    "TransitionMatrix",
    "build_transition",
    "distribution_at",
    "distributions_up_to",
    "tail",
    "FdrEstimate",
    "GroundTruthLog",
    "RegimeConfig",
    "Scenario",
    "StochOrderReport",
    "account",
    "check_stoch_order",
    "estimate_fdr",
    "generate_observations",
    "simulate_regimes",
    "__version__",
]
