"""Python access to the aria formalization pipeline."""

from ._aria import (
    AriaError,
    ConfigError,
    CycleError,
    Graph,
    aggregate,
    canonicalize,
    decide,
    formalize,
    load_config,
    metrics,
    parse_diagnostics,
    parse_subtasks,
    pass_at_k,
    percent,
    replay,
)

__all__ = [
    "AriaError",
    "ConfigError",
    "CycleError",
    "Graph",
    "aggregate",
    "canonicalize",
    "decide",
    "formalize",
    "load_config",
    "metrics",
    "parse_diagnostics",
    "parse_subtasks",
    "pass_at_k",
    "percent",
    "replay",
]
