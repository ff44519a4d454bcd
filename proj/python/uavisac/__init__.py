"""Multi-UAV ISAC simulator with movable antenna arrays."""

from ._uavisac import (
    Config,
    Env,
    UavisacError,
    cmaes,
    hdbscan,
    hungarian,
    level_axis,
    project_geometry,
    steering_vector,
    train,
)

__all__ = [
    "Config",
    "Env",
    "UavisacError",
    "cmaes",
    "hdbscan",
    "hungarian",
    "level_axis",
    "project_geometry",
    "steering_vector",
    "train",
]
