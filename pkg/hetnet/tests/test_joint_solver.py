from types import SimpleNamespace

import numpy as np
from django.test import SimpleTestCase

from hetnet.association import Association
from hetnet.exceptions import InvariantViolationError
from hetnet.fua_solver import solve_fua
from hetnet.joint_solver import (
    JointSolution,
    allocation_from_association,
    joint_dominates,
    joint_gradient,
    joint_objective,
    repair_allocation,
    solve_joint,
)
from hetnet.topology import LinkTable

from .utils import random_links


class SolveJointTestCase(SimpleTestCase):
    def test_lone_user_takes_every_budget(self):
        solution = solve_joint(LinkTable.from_rates([[1.0, 2.0]]))
        np.testing.assert_allclose(solution.allocation, [[1.0, 1.0]])
        np.testing.assert_allclose(solution.rates, [3.0])
        self.assertTrue(solution.converged)

    def test_one_bs_splits_equally(self):
        solution = solve_joint(LinkTable.from_rates([[0.7], [2.3]]))
        np.testing.assert_allclose(solution.allocation, [[0.5], [0.5]])

    def test_matches_grid_search(self):
        rng = np.random.default_rng(0)
        links = random_links(rng, 3, 2, low=0.5, high=4.0)
        solution = solve_joint(links, tol=1e-6)

        # Every BS spends its full budget at the optimum, so grid (y_0j, y_1j) per BS.
        step = 0.02
        ticks = np.round(np.arange(0.0, 1.0 + step / 2, step), 10)
        first, second = np.meshgrid(ticks, ticks, indexing='ij')
        keep = first + second <= 1.0 + 1e-12
        rest = np.maximum(1.0 - first[keep] - second[keep], 0.0)
        shares = np.stack([first[keep], second[keep], rest], axis=1)
        with np.errstate(divide='ignore'):
            total = np.zeros((shares.shape[0], shares.shape[0]))
            for i in range(3):
                rate = shares[:, i][:, None] * links.rate[i, 0] + shares[:, i][None, :] * links.rate[i, 1]
                total += np.log(rate)
        grid_best = float(total.max())
        self.assertLessEqual(grid_best, solution.utility + solution.gap + 1e-9)
        self.assertGreaterEqual(solution.utility, grid_best - 0.02)

    def test_feasible_and_positive(self):
        rng = np.random.default_rng(1)
        links = random_links(rng, 12, 4)
        solution = solve_joint(links, max_iter=300)
        self.assertTrue(np.all(solution.allocation.sum(axis=0) <= 1.0 + 1e-9))
        self.assertGreaterEqual(solution.allocation.min(), 0.0)
        self.assertLessEqual(solution.allocation.max(), 1.0)
        self.assertTrue(np.all(solution.rates > 0))

    def test_trace_is_non_decreasing(self):
        rng = np.random.default_rng(2)
        solution = solve_joint(random_links(rng, 10, 3), max_iter=200)
        values = [step.utility for step in solution.trace]
        for before, after in zip(values, values[1:]):
            self.assertGreaterEqual(after, before - 1e-12)

    def test_rows_export_user_rates(self):
        solution = solve_joint(LinkTable.from_rates([[1.0, 2.0]]))
        rows = list(solution.rows())
        self.assertEqual([(r[0], r[1]) for r in rows], [(0, 0), (0, 1)])
        self.assertAlmostEqual(rows[0][3], 3.0)

    def test_zero_rate_start_is_repaired(self):
        links = LinkTable.from_rates([[1.0, 2.0], [3.0, 1.0]])
        solution = solve_joint(links, init=np.array([[1.0, 0.0], [0.0, 0.0]]), max_iter=200)
        self.assertTrue(np.all(solution.rates > 0))

    def test_bad_initial_shape(self):
        with self.assertRaises(ValueError):
            solve_joint(LinkTable.from_rates([[1.0, 2.0]]), init=np.ones((2, 2)))


class GradientTestCase(SimpleTestCase):
    def test_gradient_matches_finite_differences(self):
        """Central differences agree with the analytic gradient at 50 interior points."""
        rng = np.random.default_rng(3)
        h = 1e-6
        for _ in range(50):
            links = random_links(rng, 4, 3)
            y = rng.dirichlet(np.ones(5), size=3).T[:4] * 0.9
            analytic = joint_gradient(y, links)
            for i in range(4):
                for j in range(3):
                    up, down = y.copy(), y.copy()
                    up[i, j] += h
                    down[i, j] -= h
                    numeric = (joint_objective(up, links) - joint_objective(down, links)) / (2 * h)
                    self.assertAlmostEqual(numeric / analytic[i, j], 1.0, delta=1e-5)


class AllocationTestCase(SimpleTestCase):
    def test_association_maps_to_shares(self):
        assoc = Association.from_choices([0, 0, 1], 3)
        np.testing.assert_allclose(
            allocation_from_association(assoc), [[0.5, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0]])

    def test_repair(self):
        repaired = repair_allocation([[1.0, 0.0], [0.0, 0.0]])
        self.assertTrue(np.all(repaired > 0))
        np.testing.assert_allclose(repaired.sum(axis=0), [1.0, 2e-6])


class DominanceTestCase(SimpleTestCase):
    def test_warm_start_dominates_fua(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            links = random_links(rng, 10, 4)
            fua = solve_fua(links, max_iter=300)
            joint = solve_joint(links, max_iter=300, init=fua.association)
            report = joint_dominates(joint, fua)
            self.assertGreaterEqual(report.gap, -1e-6 * 10)
            self.assertGreaterEqual(report.rate_ratio, 1.0 - 1e-6)

    def test_single_bs_has_no_gap(self):
        links = LinkTable.from_rates([[1.0], [2.5], [4.0]])
        fua = solve_fua(links)
        joint = solve_joint(links, init=fua.association)
        report = joint_dominates(joint, fua)
        self.assertAlmostEqual(report.gap, 0.0, places=9)
        self.assertAlmostEqual(report.rate_ratio, 1.0, places=9)

    def test_violation_raises(self):
        joint = JointSolution(
            allocation=np.full((2, 1), 0.5),
            rates=np.array([0.5, 0.5]),
            utility=-5.0,
            gap=0.0,
            iterations=0,
            converged=True,
        )
        with self.assertRaises(InvariantViolationError):
            joint_dominates(joint, SimpleNamespace(utility=0.0))
