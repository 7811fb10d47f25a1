"""Design and evaluation of lite-sparse hierarchical partial power processing.

The package models a series string of heterogeneous batteries whose output is
limited by its weakest member, and designs small sets of partial power
converters that recover most of the lost capacity at a fraction of the
full-processing converter rating.

Layout:

* :mod:`hippp.supply` turns a battery population model into discrete
  expected capabilities and Monte Carlo samples.
* :mod:`hippp.lp` is a deterministic bounded-variable simplex solver.
* :mod:`hippp.architecture` declares the three converter architectures.
* :mod:`hippp.powerflow` finds the optimal dispatch for one battery set.
* :mod:`hippp.design` picks layer-1 interconnections and converter ratings.
* :mod:`hippp.evaluate` runs Monte Carlo comparisons and sweeps.
* :mod:`hippp.cli` is the command-line front end.
"""

from .architecture import (
    Architecture,
    ArchitectureKind,
    ConverterEdge,
    Layer1Design,
    Layer2Design,
    aggregate_rating,
    cppp_from_budget,
    fpp_from_budget,
)
from .design import (
    DesignConfig,
    Layer2Curve,
    design_layer1,
    design_layer2,
    enumerate_interconnections,
    interconnection_count,
    layer2_rating_for_budget,
    lshippp_for_budget,
    partition_ratings,
)
from .errors import (
    ConfigError,
    EnumerationCapError,
    HipppError,
    InternalCheckError,
    ParameterError,
    StructuralError,
    UndefinedMetricError,
)
from .evaluate import (
    DEFAULT_CONVERTER_EFFICIENCY,
    MetricsRecord,
    evaluate_architecture,
    sweep_heterogeneity,
    sweep_rating,
    system_efficiency,
    tradeoff_frontier,
)
from .lp import LinearProgram, LPSolution, LPStatus, solve
from .powerflow import (
    PowerFlowSolution,
    architecture_edges,
    build_flow_lp,
    max_output_power,
    optimal_flow,
)
from .supply import (
    BatterySample,
    BatterySupply,
    CapabilityDistribution,
    ExpectedSet,
    GaussianCapability,
    flatten,
    flatten_distribution,
    sample_battery_set,
)

__version__ = "0.1.0"

__all__ = [
    "Architecture",
    "ArchitectureKind",
    "BatterySample",
    "BatterySupply",
    "CapabilityDistribution",
    "ConfigError",
    "ConverterEdge",
    "DEFAULT_CONVERTER_EFFICIENCY",
    "DesignConfig",
    "EnumerationCapError",
    "ExpectedSet",
    "GaussianCapability",
    "HipppError",
    "InternalCheckError",
    "Layer1Design",
    "Layer2Curve",
    "Layer2Design",
    "LinearProgram",
    "LPSolution",
    "LPStatus",
    "MetricsRecord",
    "ParameterError",
    "PowerFlowSolution",
    "StructuralError",
    "UndefinedMetricError",
    "aggregate_rating",
    "architecture_edges",
    "build_flow_lp",
    "cppp_from_budget",
    "design_layer1",
    "design_layer2",
    "enumerate_interconnections",
    "evaluate_architecture",
    "flatten",
    "flatten_distribution",
    "fpp_from_budget",
    "interconnection_count",
    "layer2_rating_for_budget",
    "lshippp_for_budget",
    "max_output_power",
    "optimal_flow",
    "partition_ratings",
    "sample_battery_set",
    "solve",
    "sweep_heterogeneity",
    "sweep_rating",
    "system_efficiency",
    "tradeoff_frontier",
    "__version__",
]
