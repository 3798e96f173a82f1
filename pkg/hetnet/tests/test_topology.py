import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase

from hetnet.exceptions import InvalidConfigError
from hetnet.topology import (
    LinkTable,
    MacroLayout,
    ScenarioConfig,
    compute_link_table,
    generate_scenario,
    macro_only,
    three_tier_scenario_config,
    path_loss_db,
    sinr_from_received,
)

from .utils import SMALL_SCENARIO_JSON, small_scenario_config


class PathLossTestCase(SimpleTestCase):
    def setUp(self):
        self.params = three_tier_scenario_config().channel_params()

    def test_macro_at_100_m(self):
        self.assertAlmostEqual(path_loss_db(0, 100.0, self.params), 114.0)

    def test_femto_at_10_m(self):
        self.assertAlmostEqual(path_loss_db(2, 10.0, self.params), 67.0)

    def test_distance_clamped_to_minimum(self):
        self.assertAlmostEqual(path_loss_db(0, 0.0, self.params), 34.0)

    def test_vectorized_over_tiers(self):
        loss = path_loss_db(np.array([0, 1, 2]), np.array([100.0, 100.0, 10.0]), self.params)
        np.testing.assert_allclose(loss, [114.0, 114.0, 67.0])


class GenerateScenarioTestCase(SimpleTestCase):
    def test_single_macro_with_fixed_counts(self):
        config = small_scenario_config(n_users=100)
        scenario = generate_scenario(config, seed=3)
        self.assertEqual(scenario.n_bs, 26)
        self.assertEqual(scenario.n_users, 100)
        self.assertEqual(scenario.tier_counts().tolist(), [1, 5, 20])

    def test_three_tier_layout_counts(self):
        scenario = generate_scenario(three_tier_scenario_config(), seed=0)
        self.assertEqual(scenario.tier_counts().tolist(), [7, 35, 140])
        self.assertEqual(scenario.n_users, 210)

    def test_same_seed_is_identical(self):
        config = three_tier_scenario_config()
        first = generate_scenario(config, seed=11)
        second = generate_scenario(config, seed=11)
        np.testing.assert_array_equal(first.bs_positions, second.bs_positions)
        np.testing.assert_array_equal(first.user_positions, second.user_positions)
        np.testing.assert_array_equal(compute_link_table(first).sinr, compute_link_table(second).sinr)

    def test_different_seeds_differ(self):
        config = small_scenario_config()
        first = generate_scenario(config, seed=1)
        second = generate_scenario(config, seed=2)
        self.assertFalse(np.array_equal(first.user_positions, second.user_positions))

    def test_zero_users_rejected(self):
        with self.assertRaises(InvalidConfigError):
            small_scenario_config(n_users=0)

    def test_ids_are_unique_and_macros_first(self):
        scenario = generate_scenario(three_tier_scenario_config(), seed=5)
        self.assertEqual([bs.id for bs in scenario.base_stations], list(range(scenario.n_bs)))
        self.assertTrue(all(bs.tier == 0 for bs in scenario.base_stations[:7]))

    def test_users_lie_within_a_macro_cell(self):
        config = three_tier_scenario_config()
        scenario = generate_scenario(config, seed=2)
        nearest_macro = scenario.distances()[:, :7].min(axis=1)
        circumradius = config.macro_layout.isd_m / math.sqrt(3.0)
        self.assertTrue(np.all(nearest_macro <= circumradius + 1e-9))

    def test_poisson_counts(self):
        config = small_scenario_config(count_mode='poisson')
        scenario = generate_scenario(config, seed=4)
        self.assertEqual(scenario.tier_counts()[0], 1)
        self.assertEqual(scenario.n_bs, int(scenario.tier_counts().sum()))

    def test_macro_only_drops_small_cells(self):
        scenario = generate_scenario(macro_only(three_tier_scenario_config()), seed=0)
        self.assertEqual(scenario.tier_counts().tolist(), [7])


class MacroLayoutTestCase(SimpleTestCase):
    def test_counts(self):
        self.assertEqual(MacroLayout(rings=0).count, 1)
        self.assertEqual(MacroLayout(rings=1).count, 7)
        self.assertEqual(MacroLayout(rings=2).count, 19)
        self.assertEqual(MacroLayout(kind='single').count, 1)

    def test_rings_for_count(self):
        self.assertEqual(MacroLayout.rings_for_count(7), 1)
        self.assertEqual(MacroLayout.rings_for_count(19), 2)
        with self.assertRaises(InvalidConfigError):
            MacroLayout.rings_for_count(8)

    def test_unknown_kind(self):
        with self.assertRaises(InvalidConfigError):
            MacroLayout(kind='grid')


class ScenarioConfigFormTestCase(SimpleTestCase):
    def test_from_dict(self):
        config = ScenarioConfig.from_dict(SMALL_SCENARIO_JSON)
        self.assertEqual(config.n_tiers, 3)
        self.assertEqual(config.total_users, 10)
        self.assertEqual(config.macro_layout.kind, 'single')
        self.assertEqual(config.noise_dbm, -104.0)

    def test_layout_count_maps_to_rings(self):
        data = dict(SMALL_SCENARIO_JSON, macro_layout={'kind': 'hex', 'count': 7})
        self.assertEqual(ScenarioConfig.from_dict(data).macro_layout.rings, 1)

    def test_zero_users_is_a_config_error(self):
        with self.assertRaises(InvalidConfigError):
            ScenarioConfig.from_dict(dict(SMALL_SCENARIO_JSON, n_users=0))

    def test_nonpositive_slope_is_a_config_error(self):
        tiers = [dict(SMALL_SCENARIO_JSON['tiers'][0], pathloss_slope_db=0)]
        with self.assertRaises(InvalidConfigError):
            ScenarioConfig.from_dict(dict(SMALL_SCENARIO_JSON, tiers=tiers))

    def test_missing_tiers(self):
        with self.assertRaises(InvalidConfigError):
            ScenarioConfig.from_dict(dict(SMALL_SCENARIO_JSON, tiers=[]))

    def test_to_dict_reloads(self):
        config = three_tier_scenario_config()
        self.assertEqual(ScenarioConfig.from_dict(config.to_dict()), config)


class LinkTableTestCase(SimpleTestCase):
    def test_single_link_without_interference(self):
        sinr = sinr_from_received(np.array([[10.0]]), 1.0)
        self.assertAlmostEqual(sinr[0, 0], 10.0)
        table = LinkTable.from_sinr(sinr)
        self.assertAlmostEqual(table.rate[0, 0], math.log2(11.0))

    def test_equal_received_powers(self):
        sinr = sinr_from_received(np.array([[1.0, 1.0]]), 1e-15)
        np.testing.assert_allclose(sinr, [[1.0, 1.0]], rtol=1e-12)
        np.testing.assert_allclose(LinkTable.from_sinr(sinr).rate, [[1.0, 1.0]], rtol=1e-12)

    def test_three_bs_hand_computation(self):
        received = np.array([[1.0, 2.0, 3.0], [0.5, 0.25, 4.0]])
        noise = 0.5
        expected = np.array([
            [1.0 / (2.0 + 3.0 + noise), 2.0 / (1.0 + 3.0 + noise), 3.0 / (1.0 + 2.0 + noise)],
            [0.5 / (0.25 + 4.0 + noise), 0.25 / (0.5 + 4.0 + noise), 4.0 / (0.5 + 0.25 + noise)],
        ])
        np.testing.assert_allclose(sinr_from_received(received, noise), expected, rtol=1e-12)

    def test_sinr_recomputable_from_gains(self):
        scenario = generate_scenario(small_scenario_config(), seed=7)
        table = compute_link_table(scenario)
        received = 10.0 ** (table.power_dbm / 10.0)[None, :] * table.gain
        others = 1.0 - np.eye(table.n_bs)
        interference = (received[:, None, :] * others[None, :, :]).sum(axis=2)
        expected = received / (interference + table.noise_mw)
        np.testing.assert_allclose(table.sinr, expected, rtol=1e-9)
        np.testing.assert_allclose(table.rate, np.log2(1.0 + table.sinr), rtol=1e-12)

    def test_more_noise_lowers_every_sinr(self):
        quiet = compute_link_table(generate_scenario(small_scenario_config(), seed=9))
        noisy = compute_link_table(generate_scenario(small_scenario_config(noise_dbm=-90.0), seed=9))
        np.testing.assert_array_equal(quiet.gain, noisy.gain)
        self.assertTrue(np.all(noisy.sinr < quiet.sinr))

    def test_gains_depend_only_on_distance_without_shadowing(self):
        config = small_scenario_config(shadowing_db=0.0)
        scenario = generate_scenario(config, seed=1)
        table = compute_link_table(scenario)
        loss = path_loss_db(scenario.bs_tiers[None, :], scenario.distances(), scenario.channel)
        np.testing.assert_allclose(table.gain, 10.0 ** (-loss / 10.0), rtol=1e-12)

    def test_all_entries_positive(self):
        table = compute_link_table(generate_scenario(three_tier_scenario_config(), seed=1))
        self.assertEqual(table.gain.shape, (210, 182))
        self.assertTrue(np.all(table.sinr > 0))
        self.assertTrue(np.all(table.rate > 0))

    def test_rejects_nonpositive_entries(self):
        with self.assertRaises(ValueError):
            LinkTable.from_sinr(np.array([[1.0, 0.0]]))

    def test_from_rates_keeps_exact_rates(self):
        table = LinkTable.from_rates([[2.0, 1.0]])
        np.testing.assert_array_equal(table.rate, [[2.0, 1.0]])
        np.testing.assert_allclose(table.sinr, [[3.0, 1.0]])

    def test_channel_params_validation(self):
        with self.assertRaises(InvalidConfigError):
            replace(three_tier_scenario_config(), shadowing_db=-1.0).channel_params()
