"""Placement of energy nodes, access points and hybrid access points in
wireless powered communication networks."""

from .model import (
    ChannelParams,
    Costs,
    Device,
    InvalidParameterError,
    Metrics,
    Placement,
    Region,
    Scenario,
    evaluate,
    random_scenario,
)

__all__ = [
    "ChannelParams",
    "Costs",
    "Device",
    "InvalidParameterError",
    "Metrics",
    "Placement",
    "Region",
    "Scenario",
    "evaluate",
    "random_scenario",
]
