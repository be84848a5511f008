"""Structure-control co-design of rib-stiffened precision stages."""

from ._flexstage import (
    Config,
    ConfigError,
    FlexstageError,
    InfeasibleError,
    NumericalError,
    analyze,
    compare_reports,
    evaluate_design,
    load_config,
    max_bandwidth,
    modal_grammian,
    optimize_geometry,
    parse_config,
    run_baseline,
    run_pipeline,
    tune_gain,
)

__all__ = [
    "Config",
    "ConfigError",
    "FlexstageError",
    "InfeasibleError",
    "NumericalError",
    "analyze",
    "compare_reports",
    "evaluate_design",
    "load_config",
    "max_bandwidth",
    "modal_grammian",
    "optimize_geometry",
    "parse_config",
    "run_baseline",
    "run_pipeline",
    "tune_gain",
]
