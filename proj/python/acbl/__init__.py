"""Boundary-layer clustering toolkit (Python bindings)."""

import json as _json

from ._acbl import (
    AcblError,
    BranchError,
    ConfigError,
    ConvergenceError,
    DomainError,
    HypothesisError,
    ResonanceError,
    __version__,
    analytic_resonances,
    config_hash,
    heteroclinic,
    predicted_positions,
    profile_integrals,
    psi,
    solve_barf_node,
    solve_radial,
    zero_crossings,
)
from ._acbl import run_experiment as _run_experiment


def run_experiment(config, out="", jobs=1):
    """Run a configuration given as a dict or JSON text; returns the record as a dict."""
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(_run_experiment(text, str(out), jobs))


__all__ = [
    "AcblError",
    "BranchError",
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "HypothesisError",
    "ResonanceError",
    "__version__",
    "analytic_resonances",
    "config_hash",
    "heteroclinic",
    "predicted_positions",
    "profile_integrals",
    "psi",
    "run_experiment",
    "solve_barf_node",
    "solve_radial",
    "zero_crossings",
]
