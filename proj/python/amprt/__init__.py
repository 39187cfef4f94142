"""AMP retraining simulator, state evolution and BayesMix label aggregation."""

import json as _json

from ._amprt import *  # noqa: F401,F403
from ._amprt import __version__, default_config_json, run_command as _run_command, run_simulation as _run_simulation


def config(**overrides):
    """Default experiment config (a dict) with the given keys replaced."""
    cfg = _json.loads(default_config_json())
    unknown = set(overrides) - set(cfg)
    if unknown:
        raise KeyError(f"unknown config keys: {sorted(unknown)}")
    cfg.update(overrides)
    return cfg


def simulate(jobs=1, **overrides):
    """Runs AMP replications against the state evolution; returns one dict per iteration t = 0..T."""
    return _run_simulation(_json.dumps(config(command="simulate", **overrides)), jobs)


def run(command, out_dir, jobs=1, **overrides):
    """Runs a CLI command and returns the list of files written."""
    return _run_command(_json.dumps(config(command=command, **overrides)), str(out_dir), jobs)
