"""Python access to the catapult simulation library."""

import json as _json

from ._catapult import (
    Error,
    analytic_two_mode,
    bell_bound,
    config_hash,
    conversion_efficiency,
    fock_decay_populations,
    half_release_bell,
    induced_rate,
    invert_gaussian,
    version,
)
from . import _catapult


def parameters():
    """Device parameters as a dict (frequencies in MHz, lifetimes in us)."""
    return _json.loads(_catapult.parameters_json())


def experiments():
    """Registered experiments: name -> {figure, summary, params}."""
    return _json.loads(_catapult.registry_json())


def run(name, out_dir, **settings):
    """Run an experiment into out_dir; returns the manifest dict."""
    return _json.loads(_catapult.run_json(name, _json.dumps(settings), str(out_dir)))


__all__ = [
    "Error",
    "analytic_two_mode",
    "bell_bound",
    "config_hash",
    "conversion_efficiency",
    "experiments",
    "fock_decay_populations",
    "half_release_bell",
    "induced_rate",
    "invert_gaussian",
    "parameters",
    "run",
    "version",
]
