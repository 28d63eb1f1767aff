"""Resource allocation for wireless-powered sensor networks.

Scenarios are plain dicts with the same layout as the scenario JSON files.
"""

import json

from . import _wpt
from ._wpt import NumericalError, ValidationError, diagonal_distortion, fit_model, haar_unitary, phi

__all__ = [
    "NumericalError",
    "ValidationError",
    "default_scenario",
    "diagonal_distortion",
    "fit_model",
    "haar_unitary",
    "load_scenario",
    "normalize_scenario",
    "optimize",
    "phi",
    "replay",
    "signal_power",
    "sweep",
]


def _dump(scenario):
    return json.dumps(scenario if scenario is not None else {})


def default_scenario():
    return json.loads(_wpt.default_scenario())


def load_scenario(path):
    return json.loads(_wpt.load_scenario(str(path)))


def normalize_scenario(scenario):
    """Validate a (possibly partial) scenario and return it with every default filled in."""
    return json.loads(_wpt.normalize_scenario(_dump(scenario)))


def optimize(scenario=None, assumed="L", mean_channel=False, realization=0):
    """Offline optimum: dict with p and q (T x n arrays, W), objective and kkt_residual."""
    return _wpt.optimize(_dump(scenario), assumed, mean_channel, realization)


def replay(scenario, p, q, actual="L", mean_channel=False, realization=0):
    """Replay a plan against the harvester actually present."""
    return _wpt.replay(_dump(scenario), p, q, actual, mean_channel, realization)


def signal_power(scenario=None):
    return _wpt.signal_power(_dump(scenario))


def sweep(scenario=None, budgets=(0.5, 1.0, 1.5, 2.0, 2.5, 3.0), labels=("OPT-L-L", "OPT-L-Q", "OPT-Q-Q"),
          realizations=1):
    return _wpt.sweep(_dump(scenario), list(budgets), list(labels), realizations)
