# SPDX-License-Identifier: Apache-2.0
"""Downstream quantum access network simulator."""

import json as _json

from ._dqan import (  # noqa: F401
    ConfigError,
    DqanError,
    InputError,
    NoDetection,
    SolverError,
    __version__,
    correction_factor,
    correlate_delay,
    crosstalk_fractions,
    dm_keyrate,
    estimate_channel,
    gaussian_keyrate,
    locate,
    plob_bound,
    run_report,
    sideband_ratio,
    simulate_symbols,
    transmittance,
    validate_config,
)


def run(path, mode="qkd", field_tier=False, seed=-1):
    """Run a scenario file and return the parsed report."""
    return _json.loads(run_report(path, mode, field_tier, seed))
