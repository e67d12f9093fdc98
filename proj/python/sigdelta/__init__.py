"""Sigma-delta and DPCM rate-distortion tools."""

import json as _json

from ._sigdelta import *  # noqa: F401,F403
from ._sigdelta import _simulate_json

__version__ = "0.3.0"


def simulate(config, base_dir="."):
    """Run the Monte Carlo loop for a SimConfig given as a dict.

    Returns a dict with the resolved ``config`` and the ``report``.
    """
    return _json.loads(_simulate_json(_json.dumps(config), base_dir))
