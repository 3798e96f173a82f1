import numpy as np

from hetnet.topology import LinkTable, MacroLayout, three_tier_scenario_config


def random_links(rng, n_users, n_bs, low=0.2, high=5.0, bs_tiers=None):
    """Link table with uniform random spectral efficiencies."""
    return LinkTable.from_rates(rng.uniform(low, high, size=(n_users, n_bs)), bs_tiers=bs_tiers)


def small_scenario_config(**overrides):
    """One macro cell with the three-tier powers and path losses, a few users."""
    params = dict(
        macro_layout=MacroLayout(kind='single'),
        region_m=500.0,
        n_users=12,
        users_per_macro=None,
    )
    params.update(overrides)
    return three_tier_scenario_config(**params)


SMALL_SCENARIO_JSON = {
    'region_m': 500,
    'macro_layout': {'kind': 'single'},
    'tiers': [
        {'name': 'macro', 'power_dbm': 46, 'pathloss_intercept_db': 34, 'pathloss_slope_db': 40, 'count_per_macro': 1},
        {'name': 'pico', 'power_dbm': 35, 'pathloss_intercept_db': 34, 'pathloss_slope_db': 40, 'count_per_macro': 2},
        {'name': 'femto', 'power_dbm': 20, 'pathloss_intercept_db': 37, 'pathloss_slope_db': 30, 'count_per_macro': 4},
    ],
    'shadowing_db': 8,
    'n_users': 10,
}
