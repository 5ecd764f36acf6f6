"""EIT conductivity reconstruction with a P2 MD-LDG forward solver."""

from ._eitdg import (
    CoefficientRangeError,
    ConfigError,
    SolverError,
    forward_currents,
    phantom_names,
    phantom_value,
    reconstruct,
    run_config,
    run_eoc,
    set_thread_limit,
)

__all__ = [
    "CoefficientRangeError",
    "ConfigError",
    "SolverError",
    "forward_currents",
    "phantom_names",
    "phantom_value",
    "reconstruct",
    "run_config",
    "run_eoc",
    "set_thread_limit",
]
