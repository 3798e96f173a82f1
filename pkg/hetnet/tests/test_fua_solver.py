import itertools
import math

import numpy as np
from django.test import SimpleTestCase

from hetnet.association import (
    Association,
    fua_gradient,
    fua_objective,
    max_sinr_assoc,
    round_fractional,
    utility,
)
from hetnet.conf import get_setting
from hetnet.exceptions import InvalidConfigError, ProblemTooLargeError
from hetnet.experiments import ExperimentConfig, trial_links
from hetnet.fua_solver import (
    brute_force_optimal,
    concave_line_search,
    default_tolerance,
    fua_gap_report,
    fw_linear_oracle,
    pairwise_sweep,
    pairwise_transfer,
    solve_fua,
)
from hetnet.topology import LinkTable, three_tier_scenario_config

from .utils import random_links


class SolveFuaTestCase(SimpleTestCase):
    def test_single_bs_is_forced(self):
        c = np.array([[2.0], [0.5], [3.0]])
        solution = solve_fua(LinkTable.from_rates(c))
        np.testing.assert_array_equal(solution.association.weights, np.ones((3, 1)))
        self.assertAlmostEqual(solution.utility, float(np.log(c[:, 0] / 3).sum()))
        self.assertTrue(solution.converged)
        self.assertEqual(solution.iterations, 0)

    def test_two_users_on_their_own_bs(self):
        solution = solve_fua(LinkTable.from_rates([[4.0, 1.0], [1.0, 4.0]]))
        np.testing.assert_allclose(solution.association.weights, np.eye(2))
        self.assertAlmostEqual(solution.utility, 2 * math.log(4.0))

    def test_at_least_max_sinr(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            links = random_links(rng, 10, 4)
            solution = solve_fua(links, max_iter=300)
            self.assertGreaterEqual(solution.utility, fua_objective(max_sinr_assoc(links), links) - 1e-12)

    def test_upper_bounds_the_integer_optimum(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            links = random_links(rng, int(rng.integers(2, 5)), int(rng.integers(2, 4)))
            solution = solve_fua(links, max_iter=500)
            brute = brute_force_optimal(links)
            self.assertLessEqual(brute.utility, solution.utility + solution.gap + 1e-6)
            rounded = utility(round_fractional(solution.association), links)
            self.assertLessEqual(rounded, brute.utility + 1e-9)

    def test_every_bs_gets_load(self):
        rng = np.random.default_rng(2)
        links = random_links(rng, 8, 5)
        solution = solve_fua(links, max_iter=200)
        self.assertTrue(np.all(solution.association.weights.sum(axis=0) > 0))

    def test_rows_stay_stochastic(self):
        rng = np.random.default_rng(3)
        solution = solve_fua(random_links(rng, 12, 4), max_iter=200)
        np.testing.assert_allclose(solution.association.weights.sum(axis=1), 1.0, atol=1e-12)
        self.assertGreaterEqual(solution.association.weights.min(), 0.0)

    def test_tighter_tolerance_never_lowers_utility(self):
        rng = np.random.default_rng(4)
        links = random_links(rng, 10, 3)
        loose = solve_fua(links, tol=1e-2)
        tight = solve_fua(links, tol=1e-5)
        self.assertGreaterEqual(tight.utility, loose.utility - 1e-12)

    def test_trace_is_non_decreasing(self):
        rng = np.random.default_rng(5)
        solution = solve_fua(random_links(rng, 9, 4), max_iter=300)
        values = [step.utility for step in solution.trace]
        self.assertEqual(len(values), solution.iterations + 1)
        for before, after in zip(values, values[1:]):
            self.assertGreaterEqual(after, before - 1e-12)

    def test_max_iter_flags_non_convergence(self):
        links = LinkTable.from_rates([[4.0, 1.0], [4.0, 1.0]])
        solution = solve_fua(links, max_iter=0)
        self.assertFalse(solution.converged)
        self.assertEqual(solution.iterations, 0)
        self.assertGreater(solution.gap, 1.0)

    def test_deterministic(self):
        rng = np.random.default_rng(6)
        links = random_links(rng, 10, 4)
        first = solve_fua(links, max_iter=100)
        second = solve_fua(links, max_iter=100)
        np.testing.assert_array_equal(first.association.weights, second.association.weights)

    def test_invalid_tolerance(self):
        with self.assertRaises(InvalidConfigError):
            solve_fua(LinkTable.from_rates([[1.0]]), tol=0)

    def test_three_tier_instance_converges(self):
        """A full three-tier drop (seven macro cells) meets the default tolerance within the default cap."""
        links = trial_links(ExperimentConfig(scenario=three_tier_scenario_config(), seed_base=100), 0)
        solution = solve_fua(links)
        self.assertTrue(solution.converged)
        self.assertLessEqual(solution.gap, default_tolerance(links.n_users))
        self.assertLessEqual(solution.iterations, int(get_setting('FUA_MAX_ITER')))
        self.assertTrue(np.all(solution.association.weights.sum(axis=0) > 0))


class PairwiseStepTestCase(SimpleTestCase):
    def test_transfer_equalizes_loads_at_equal_rates(self):
        self.assertAlmostEqual(pairwise_transfer(0.0, 1.0, 3.0), 1.0)

    def test_transfer_is_stationary(self):
        """Moving the returned weight leaves ln(c_to / c_from) = ln((K_to + t) / (K_from - t))."""
        rng = np.random.default_rng(12)
        for _ in range(20):
            log_ratio = float(rng.normal())
            load_to, load_from = rng.uniform(0.1, 5.0, size=2)
            t = pairwise_transfer(log_ratio, load_to, load_from)
            self.assertAlmostEqual(math.log((load_to + t) / (load_from - t)), log_ratio, places=9)

    def test_sweep_empties_the_away_bs(self):
        links = LinkTable.from_rates([[1.0, 1.0], [1.0, 1.0]])
        x = np.array([[1.0, 0.0], [1.0, 0.0]])
        moved = pairwise_sweep(x, links.log_rate, 1e-12)
        self.assertEqual(moved, 1.0)
        np.testing.assert_array_equal(x, [[0.0, 1.0], [1.0, 0.0]])

    def test_sweep_never_lowers_the_objective(self):
        rng = np.random.default_rng(13)
        links = random_links(rng, 15, 5)
        x = max_sinr_assoc(links).weights.copy()
        for _ in range(10):
            before = fua_objective(x, links)
            pairwise_sweep(x, links.log_rate, 1e-12)
            self.assertGreaterEqual(fua_objective(x, links), before - 1e-12)
            np.testing.assert_allclose(x.sum(axis=1), 1.0, atol=1e-12)
            self.assertGreaterEqual(x.min(), 0.0)


class GradientAndOracleTestCase(SimpleTestCase):
    def test_oracle_picks_row_max(self):
        self.assertEqual(fw_linear_oracle(np.array([[0.2, 0.7]])).choices.tolist(), [1])

    def test_oracle_ties_go_to_lowest_id(self):
        self.assertEqual(fw_linear_oracle(np.array([[0.3, 0.3, 0.3]])).choices.tolist(), [0])

    def test_gradient_matches_finite_differences(self):
        """Central differences agree with the analytic gradient at 50 interior points."""
        rng = np.random.default_rng(7)
        h = 1e-6
        for _ in range(50):
            links = random_links(rng, 4, 3)
            x = rng.dirichlet(np.ones(3), size=4)
            analytic = fua_gradient(x, links)
            for i in range(4):
                for j in range(3):
                    up, down = x.copy(), x.copy()
                    up[i, j] += h
                    down[i, j] -= h
                    numeric = (fua_objective(up, links) - fua_objective(down, links)) / (2 * h)
                    self.assertAlmostEqual(numeric, analytic[i, j], delta=1e-5 * max(1.0, abs(analytic[i, j])))

    def test_line_search(self):
        self.assertAlmostEqual(concave_line_search(lambda a: 0.3 - a), 0.3)
        self.assertEqual(concave_line_search(lambda a: 1.0 - 0.5 * a), 1.0)
        self.assertEqual(concave_line_search(lambda a: -1.0 - a), 0.0)
        self.assertEqual(concave_line_search(lambda a: 2.0 - a, upper=0.5), 0.5)


class BruteForceTestCase(SimpleTestCase):
    def test_single_bs(self):
        brute = brute_force_optimal(LinkTable.from_rates([[2.0], [6.0]]))
        self.assertEqual(brute.association.choices.tolist(), [0, 0])
        self.assertAlmostEqual(brute.utility, math.log(1.0) + math.log(3.0))
        self.assertEqual(brute.n_enumerated, 1)

    def test_identity_assignment(self):
        brute = brute_force_optimal(LinkTable.from_rates([[4.0, 1.0], [1.0, 4.0]]))
        self.assertEqual(brute.association.choices.tolist(), [0, 1])
        self.assertEqual(brute.n_enumerated, 4)

    def test_beats_every_assignment(self):
        rng = np.random.default_rng(8)
        links = random_links(rng, 3, 2)
        brute = brute_force_optimal(links)
        for choices in itertools.product(range(2), repeat=3):
            self.assertGreaterEqual(
                brute.utility, utility(Association.from_choices(choices, 2), links) - 1e-12)

    def test_rounding_is_near_the_integer_optimum(self):
        """Rounded FUA lands within 0.05 of the brute-force optimum on at least 90 of 100 small instances."""
        rng = np.random.default_rng(2024)
        close = 0
        for _ in range(100):
            links = random_links(rng, int(rng.integers(2, 7)), int(rng.integers(1, 4)))
            brute = brute_force_optimal(links)
            rounded = utility(round_fractional(solve_fua(links).association), links)
            self.assertLessEqual(rounded, brute.utility + 1e-9)
            if brute.utility - rounded <= 0.05:
                close += 1
        self.assertGreaterEqual(close, 90)

    def test_matches_the_log_utility(self):
        rng = np.random.default_rng(9)
        links = random_links(rng, 5, 3)
        brute = brute_force_optimal(links)
        self.assertAlmostEqual(brute.utility, utility(brute.association, links), places=10)

    def test_cap(self):
        with self.assertRaises(ProblemTooLargeError):
            brute_force_optimal(LinkTable.from_rates([[1.0, 2.0], [2.0, 1.0]]), cap=3)
        rng = np.random.default_rng(10)
        with self.assertRaises(ProblemTooLargeError):
            brute_force_optimal(random_links(rng, 25, 2))


class GapReportTestCase(SimpleTestCase):
    def test_identical_utilities(self):
        links = LinkTable.from_rates([[2.0], [3.0]])
        solution = solve_fua(links)
        report = fua_gap_report(solution, solution.association, links)
        self.assertEqual(report.gap, 0.0)
        self.assertEqual(report.rate_ratio, 1.0)

    def test_brute_force_gap_is_nonnegative(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            links = random_links(rng, 4, 3)
            solution = solve_fua(links, max_iter=500)
            report = fua_gap_report(solution, brute_force_optimal(links).association, links)
            self.assertGreaterEqual(report.gap, -solution.gap - 1e-9)
            self.assertAlmostEqual(report.rate_ratio, math.exp(report.gap / 4))
