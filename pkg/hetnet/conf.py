"""
App-level settings for the hetnet simulator.

Values come from ``settings.HETNET`` and fall back to the defaults below, so a
project only has to override what it changes.
"""
from copy import deepcopy

from django.conf import settings

DEFAULTS = {
    'MIN_DISTANCE_M': 1.0,
    'ENUMERATION_CAP': 10 ** 7,
    'FUA_TOL_PER_USER': 1e-6,
    'FUA_MAX_ITER': 5000,
    'DUAL_MAX_ITER': 200,
    'BALANCE_TOL': 0.5,
    'PLATEAU_WINDOW': 20,
    'STEPSIZE': {
        'gamma': 1.0,
        'beta': 0.5,
        'rho': 1.5,
        'eps_min_per_user': 1e-3,
        'eps_init_fraction': 0.1,
        'eps_init_floor': 1.0,
    },
    # Lowest supply a BS price may imply: mu_j >= 1 + ln(MU_FLOOR_LOAD).
    'MU_FLOOR_LOAD': 1e-6,
    # Loads below this are treated as empty by the gradient code.
    'EMPTY_LOAD': 1e-12,
    'QUANTILES': tuple(range(1, 100)),
    'RATIO_PERCENTILES': (10, 50),
    'OUTPUT_DIR': 'results',
}


def get_setting(name):
    """Return ``settings.HETNET[name]`` or the built-in default."""
    overrides = getattr(settings, 'HETNET', {}) or {}
    if name not in DEFAULTS and name not in overrides:
        raise KeyError(f"Unknown hetnet setting '{name}'.")
    value = overrides.get(name, DEFAULTS.get(name))
    if isinstance(value, dict) and isinstance(DEFAULTS.get(name), dict):
        merged = deepcopy(DEFAULTS[name])
        merged.update(value)
        return merged
    return deepcopy(value)
