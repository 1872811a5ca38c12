"""Tests for the dense simplex solver"""

import unittest
import os
import sys
from itertools import combinations

import numpy as np

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import AppConfig
from core.simplex import (INFEASIBLE, ITERATION_LIMIT, OPTIMAL, UNBOUNDED, LinearProgram,
                          LinearProgramError, solve)


def textbook_lp() -> LinearProgram:
    """max 3x1 + 5x2 with x1 <= 4, 2x2 <= 12, 3x1 + 2x2 <= 18, written as a minimization"""
    return LinearProgram(c=[-3.0, -5.0],
                         A_ge=[[-1.0, 0.0], [0.0, -2.0], [-3.0, -2.0]],
                         b_ge=[-4.0, -12.0, -18.0])


def vertex_optimum(c, A_ge, b_ge, upper):
    """Brute force over every basic solution of a bounded LP"""
    n = len(c)
    rows = [(a, b) for a, b in zip(A_ge, b_ge)]
    rows += [(np.eye(n)[j], 0.0) for j in range(n)]
    rows += [(-np.eye(n)[j], -upper[j]) for j in range(n)]
    best = np.inf
    for subset in combinations(range(len(rows)), n):
        M = np.array([rows[i][0] for i in subset])
        if abs(np.linalg.det(M)) < 1e-10:
            continue
        x = np.linalg.solve(M, np.array([rows[i][1] for i in subset]))
        if all(a @ x >= b - 1e-9 for a, b in rows):
            best = min(best, float(c @ x))
    return best


class TestSolve(unittest.TestCase):
    """Optimal, infeasible and unbounded outcomes"""

    def test_textbook(self):
        lp = textbook_lp()
        solution = solve(lp)
        self.assertEqual(solution.status, OPTIMAL)
        np.testing.assert_allclose(solution.x, [2.0, 6.0], atol=1e-10)
        self.assertAlmostEqual(solution.objective, -36.0, places=10)
        np.testing.assert_allclose(solution.duals_ge, [0.0, 1.5, 1.0], atol=1e-10)
        self.assertAlmostEqual(solution.dual_objective(lp), -36.0, places=10)

    def test_bland_pricing_agrees(self):
        solution = solve(textbook_lp(), pricing='bland')
        self.assertEqual(solution.status, OPTIMAL)
        self.assertAlmostEqual(solution.objective, -36.0, places=10)

    def test_equality_with_free_variable(self):
        lp = LinearProgram(c=[1.0, 1.0], A_eq=[[1.0, -1.0]], b_eq=[1.0], lower=[0.0, -np.inf])
        solution = solve(lp)
        self.assertEqual(solution.status, OPTIMAL)
        np.testing.assert_allclose(solution.x, [0.0, -1.0], atol=1e-10)
        self.assertAlmostEqual(solution.objective, -1.0, places=10)
        self.assertAlmostEqual(solution.dual_objective(lp), -1.0, places=10)

    def test_upper_bounds(self):
        lp = LinearProgram(c=[-1.0, -2.0], A_ge=[[-1.0, -1.0]], b_ge=[-3.0], upper=[2.0, 2.0])
        solution = solve(lp)
        self.assertEqual(solution.status, OPTIMAL)
        np.testing.assert_allclose(solution.x, [1.0, 2.0], atol=1e-10)
        self.assertAlmostEqual(solution.dual_objective(lp), solution.objective, places=10)
        self.assertGreater(solution.duals_upper[1], 0.0)

    def test_needs_phase_one(self):
        lp = LinearProgram(c=[1.0, 1.0], A_ge=[[1.0, 2.0], [3.0, 1.0]], b_ge=[4.0, 6.0])
        solution = solve(lp)
        self.assertEqual(solution.status, OPTIMAL)
        np.testing.assert_allclose(solution.x, [1.6, 1.2], atol=1e-10)
        self.assertAlmostEqual(solution.objective, 2.8, places=10)

    def test_infeasible(self):
        lp = LinearProgram(c=[1.0], A_ge=[[1.0]], b_ge=[2.0], upper=[1.0])
        self.assertEqual(solve(lp).status, INFEASIBLE)
        lp = LinearProgram(c=[1.0, 0.0], A_eq=[[1.0, 1.0], [1.0, 1.0]], b_eq=[1.0, 2.0])
        self.assertEqual(solve(lp).status, INFEASIBLE)

    def test_unbounded(self):
        self.assertEqual(solve(LinearProgram(c=[-1.0])).status, UNBOUNDED)
        lp = LinearProgram(c=[-1.0, 0.0], A_ge=[[1.0, -1.0]], b_ge=[0.0])
        self.assertEqual(solve(lp).status, UNBOUNDED)

    def test_redundant_equalities(self):
        lp = LinearProgram(c=[1.0, 2.0], A_eq=[[1.0, 1.0], [2.0, 2.0]], b_eq=[1.0, 2.0])
        solution = solve(lp)
        self.assertEqual(solution.status, OPTIMAL)
        np.testing.assert_allclose(solution.x, [1.0, 0.0], atol=1e-10)

    def test_degenerate_cycling_example_terminates(self):
        lp = LinearProgram(c=[-0.75, 20.0, -0.5, 6.0],
                           A_ge=[[-0.25, 8.0, 1.0, -9.0], [-0.5, 12.0, 0.5, -3.0]],
                           b_ge=[0.0, 0.0], upper=[np.inf, np.inf, 1.0, np.inf])
        solution = solve(lp)
        self.assertEqual(solution.status, OPTIMAL)
        self.assertAlmostEqual(solution.objective, -1.25, places=9)

    def test_pure_bland_on_cycling_example(self):
        lp = LinearProgram(c=[-0.75, 20.0, -0.5, 6.0],
                           A_ge=[[-0.25, 8.0, 1.0, -9.0], [-0.5, 12.0, 0.5, -3.0]],
                           b_ge=[0.0, 0.0], upper=[np.inf, np.inf, 1.0, np.inf])
        bland = solve(lp, pricing='bland')
        self.assertEqual(bland.status, OPTIMAL)
        self.assertAlmostEqual(bland.objective, -1.25, places=9)
        again = solve(lp, pricing='bland')
        np.testing.assert_array_equal(bland.x, again.x)
        self.assertEqual(bland.iterations, again.iterations)

    def test_default_pricing_is_dantzig(self):
        self.assertEqual(AppConfig.DEFAULT_PRICING, 'dantzig')
        lp = textbook_lp()
        default, dantzig = solve(lp), solve(lp, pricing='dantzig')
        np.testing.assert_array_equal(default.x, dantzig.x)
        self.assertEqual(default.iterations, dantzig.iterations)

    def test_iteration_limit(self):
        solution = solve(textbook_lp(), max_iterations=1)
        self.assertEqual(solution.status, ITERATION_LIMIT)
        self.assertIsNone(solution.x)

    def test_deterministic(self):
        lp = textbook_lp()
        a, b = solve(lp), solve(lp)
        np.testing.assert_array_equal(a.x, b.x)
        self.assertEqual(a.iterations, b.iterations)


class TestAgainstVertexEnumeration(unittest.TestCase):
    """Random small bounded LPs checked against brute force"""

    def test_random_programs(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            n = int(rng.integers(1, 5))
            m = int(rng.integers(1, 7))
            upper = rng.uniform(1.0, 5.0, size=n)
            A = rng.normal(size=(m, n))
            x0 = rng.uniform(0.0, 1.0, size=n) * upper
            b = A @ x0 - rng.uniform(0.0, 1.0, size=m)
            c = rng.normal(size=n)
            lp = LinearProgram(c=c, A_ge=A, b_ge=b, upper=upper)
            expected = vertex_optimum(c, A, b, upper)
            for pricing in ('dantzig', 'bland'):
                solution = solve(lp, pricing=pricing)
                self.assertEqual(solution.status, OPTIMAL)
                self.assertAlmostEqual(solution.objective, expected, delta=1e-7 * max(1.0, abs(expected)))
                self.assertTrue(np.all(A @ solution.x >= b - 1e-8))
                self.assertTrue(np.all(solution.x >= -1e-9) and np.all(solution.x <= upper + 1e-9))
                # strong duality and dual feasibility
                self.assertAlmostEqual(solution.dual_objective(lp), solution.objective,
                                       delta=1e-7 * max(1.0, abs(expected)))
                self.assertTrue(np.all(solution.duals_ge >= -1e-9))
                self.assertTrue(np.all(solution.duals_upper >= -1e-9))


class TestValidation(unittest.TestCase):
    """Malformed programs"""

    def test_shape_mismatch(self):
        with self.assertRaises(LinearProgramError):
            LinearProgram(c=[1.0, 2.0], A_ge=[[1.0, 2.0, 3.0]], b_ge=[1.0])
        with self.assertRaises(LinearProgramError):
            LinearProgram(c=[1.0, 2.0], A_ge=[[1.0, 2.0]], b_ge=[1.0, 2.0])

    def test_non_finite(self):
        with self.assertRaises(LinearProgramError):
            LinearProgram(c=[np.nan])
        with self.assertRaises(LinearProgramError):
            LinearProgram(c=[1.0], A_ge=[[np.inf]], b_ge=[0.0])

    def test_bounds(self):
        with self.assertRaises(LinearProgramError):
            LinearProgram(c=[1.0], lower=[2.0], upper=[1.0])
        with self.assertRaises(LinearProgramError):
            LinearProgram(c=[1.0], lower=[np.inf])

    def test_empty_objective_and_pricing(self):
        with self.assertRaises(LinearProgramError):
            LinearProgram(c=[])
        with self.assertRaises(LinearProgramError):
            solve(textbook_lp(), pricing='steepest')


if __name__ == '__main__':
    unittest.main()
