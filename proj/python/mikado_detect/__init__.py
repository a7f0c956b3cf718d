"""Site occupancy detection in images of microtrap arrays."""

from ._core import (
    ConfigError,
    ContractError,
    ParameterError,
    Params,
    Scenario,
    detect,
    detection_error_rate,
    optimal_threshold,
    params_from_config,
    run_der_study,
    simulate,
    wiener_estimate,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "ParameterError",
    "Params",
    "Scenario",
    "detect",
    "detection_error_rate",
    "optimal_threshold",
    "params_from_config",
    "run_der_study",
    "simulate",
    "wiener_estimate",
]
