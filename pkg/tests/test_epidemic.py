"""Tests for the two-group SEIR dynamics"""

import unittest
import os
import sys
from dataclasses import replace

import numpy as np

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.epidemic import (DegeneratePopulationError, basic_reproduction_number, contact_probability,
                           detect_declaration, effective_contact_rate, reproduction_range, simulate,
                           simulate_batch, simulate_many, step)
from schema import ContagionTuple, GroupState
from helpers import example1_params, small_params


class TestMixing(unittest.TestCase):
    """Contact probability and effective contact rates"""

    def test_contact_probability_examples(self):
        g1 = GroupState(S=891000.0, E=0.0, I=9000.0, R=0.0)
        g2 = GroupState(S=19800.0, E=0.0, I=200.0, R=0.0)
        self.assertAlmostEqual(contact_probability((g1, g2), (30.0, 35.0)), 0.01, places=15)

        none = (GroupState(100.0, 5.0, 0.0, 1.0), GroupState(10.0, 0.0, 0.0, 0.0))
        self.assertEqual(contact_probability(none, (30.0, 35.0)), 0.0, "No infectives means no infectious contacts")

        everyone = (GroupState(0.0, 0.0, 50.0, 0.0), GroupState(0.0, 0.0, 7.0, 0.0))
        self.assertAlmostEqual(contact_probability(everyone, (3.0, 4.0)), 1.0, places=15)

    def test_degenerate_population(self):
        empty = (GroupState(0.0, 0.0, 0.0, 0.0), GroupState(0.0, 0.0, 0.0, 0.0))
        with self.assertRaises(DegeneratePopulationError) as ctx:
            contact_probability(empty, (30.0, 35.0))
        self.assertIn("degenerate population", str(ctx.exception))

    def test_effective_contact_rate(self):
        params = example1_params()
        healthy = GroupState(S=1000.0, E=0.0, I=0.0, R=0.0)
        self.assertAlmostEqual(effective_contact_rate(params, 1, healthy), 30.0)
        half = GroupState(S=400.0, E=50.0, I=500.0, R=50.0)
        self.assertAlmostEqual(effective_contact_rate(params, 1, half), 15.0)
        self.assertAlmostEqual(effective_contact_rate(params, 1, half, dampening_active=True), 10.5)
        self.assertAlmostEqual(effective_contact_rate(params, 2, healthy), 35.0)


class TestStep(unittest.TestCase):
    """One-day updates"""

    def test_fixed_point_without_infection(self):
        params = example1_params()
        states = (GroupState(1000.0, 0.0, 0.0, 20.0), GroupState(50.0, 0.0, 0.0, 3.0))
        after = step(states, params, 0.5)
        for before, new in zip(states, after):
            self.assertEqual((before.S, before.E, before.I, before.R), (new.S, new.E, new.I, new.R))

    def test_conservation_and_nonnegativity(self):
        """1,000 random parameter draws: compartments stay nonnegative, totals kept when f = 1"""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            f = 1.0 if rng.random() < 0.5 else rng.uniform(0.0, 1.0)
            params = replace(example1_params(),
                             Lambda1=rng.uniform(1, 60), Lambda2=rng.uniform(1, 60),
                             muE_inv=rng.uniform(0.5, 5), muRR_inv=rng.uniform(0.5, 8),
                             f=f, theta=rng.uniform(0.1, 1.0))
            states = tuple(GroupState(*rng.uniform(0, 1000, size=4)) for _ in range(2))
            totals = [s.total for s in states]
            p = rng.uniform(0.001, 0.99)
            damp = bool(rng.random() < 0.5)
            for _ in range(20):
                g1, g2 = states
                rates = (effective_contact_rate(params, 1, g1, damp), effective_contact_rate(params, 2, g2, damp))
                beta = contact_probability(states, rates)
                self.assertGreaterEqual(beta, 0.0)
                self.assertLessEqual(beta, 1.0 + 1e-15)
                states = step(states, params, p, damp)
                for s in states:
                    for value in (s.S, s.E, s.I, s.R):
                        self.assertGreaterEqual(value, 0.0, "Compartment went negative")
            if f == 1.0:
                for s, total in zip(states, totals):
                    self.assertAlmostEqual(s.total / total, 1.0, delta=1e-9, msg="Population not conserved")
            else:
                for s, total in zip(states, totals):
                    self.assertLessEqual(s.total, total * (1 + 1e-12))

    def test_conservation_over_long_run(self):
        params = small_params(horizon_T=500)
        trajectory = simulate(params, ContagionTuple(0.0125, 0.0125, 1))
        totals = trajectory.S + trajectory.E + trajectory.I + trajectory.R
        np.testing.assert_allclose(totals, np.broadcast_to([params.N1, params.N2], totals.shape), rtol=1e-9)
        self.assertTrue(np.all(trajectory.beta >= 0) and np.all(trajectory.beta <= 1))

    def test_single_group_reduction(self):
        """An empty workforce group leaves the one-group SEIR recursion"""
        params = small_params(Lambda2=30.0, N2=0.0, I0_2=0.0, theta=1.0)
        p = 0.0125
        states = params.initial_states()
        S, E, I, R = params.N1 - params.I0_1, 0.0, params.I0_1, 0.0
        for _ in range(100):
            N = S + E + I + R
            lam = params.Lambda1 * (S + E + R) / N
            beta = I / N
            escape = np.exp(-lam * beta * p)
            S, E, I, R = (S * escape,
                          E * np.exp(-params.muE) + S * (1 - escape),
                          I * params.f * np.exp(-params.muRR) + E * (1 - np.exp(-params.muE)),
                          R + I * (1 - np.exp(-params.muRR)))
            states = step(states, params, p)
            g1, g2 = states
            for mine, theirs in ((g1.S, S), (g1.E, E), (g1.I, I), (g1.R, R)):
                self.assertAlmostEqual(float(mine), theirs, delta=1e-12 * max(1.0, abs(theirs)))
            self.assertEqual(float(g2.total), 0.0)


class TestSimulation(unittest.TestCase):
    """Full-horizon runs, declaration and R0"""

    def test_constant_p_ignores_change_day(self):
        params = small_params()
        a = simulate(params, ContagionTuple(0.0125, 0.0125, 1))
        b = simulate(params, ContagionTuple(0.0125, 0.0125, 150))
        np.testing.assert_array_equal(a.I, b.I)
        self.assertEqual(a.declaration_day, b.declaration_day)

    def test_change_day_beyond_horizon_rejected(self):
        params = small_params()
        with self.assertRaises(ValueError):
            simulate(params, ContagionTuple(0.01, 0.01, params.horizon_T + 1))

    def test_p_switches_on_change_day(self):
        trajectory = simulate(small_params(), ContagionTuple(0.012, 0.013, 40))
        self.assertEqual(trajectory.p[38], 0.012)
        self.assertEqual(trajectory.p[39], 0.013)

    def test_batch_matches_single_runs(self):
        params = small_params()
        tuples = [ContagionTuple(0.012, 0.0135, 40), ContagionTuple(0.013, 0.0125, 44), ContagionTuple(0.0125, 0.013, 42)]
        for one, trajectory in zip(tuples, simulate_many(params, tuples)):
            single = simulate(params, one)
            np.testing.assert_allclose(trajectory.I, single.I, rtol=1e-12)
            self.assertEqual(trajectory.declaration_day, single.declaration_day)

    def test_declaration_is_idempotent(self):
        params = small_params()
        batch = simulate_batch(params, [ContagionTuple(0.012, 0.0125, 40), ContagionTuple(0.013, 0.0135, 44)])
        for m in range(len(batch)):
            trajectory = batch.item(m)
            self.assertIsNotNone(trajectory.declaration_day, "The small town epidemic should be declared")
            self.assertEqual(detect_declaration(trajectory), trajectory.declaration_day)

    def test_declaration_on_constructed_incidence(self):
        params = small_params(declaration_window=1, declaration_threshold=0.0093)
        trajectory = simulate(params, ContagionTuple(0.012, 0.012, 1))
        population = params.N1 + params.N2
        incidence = np.full(params.horizon_T, 0.009 * population)
        incidence[39] = 0.0095 * population
        incidence[40:] = 0.0
        constructed = replace(trajectory, exposures=incidence)
        self.assertEqual(detect_declaration(constructed, threshold=0.0093, window=1), 40)

    def test_no_infectives_never_declared(self):
        params = small_params(I0_1=0.0, I0_2=0.0)
        trajectory = simulate(params, ContagionTuple(0.012, 0.013, 40))
        self.assertIsNone(trajectory.declaration_day)
        self.assertIsNone(detect_declaration(trajectory))
        self.assertIsNone(trajectory.dampening_window())

    def test_dampening_window_starts_on_declaration(self):
        trajectory = simulate(small_params(), ContagionTuple(0.013, 0.0135, 44))
        start, end = trajectory.dampening_window()
        self.assertEqual(start, trajectory.declaration_day)
        self.assertEqual(int(trajectory.dampening.sum()), end - start + 1, "Dampening must be one contiguous window")

    def test_dampening_ends_on_total_infective_growth(self):
        params = small_params(dampening_off_threshold=0.03)
        trajectory = simulate(params, ContagionTuple(0.013, 0.0135, 44))
        start, end = trajectory.dampening_window()
        self.assertEqual(start, trajectory.declaration_day)
        self.assertLess(end, params.horizon_T)
        # rows hold the state at the start of each day; both groups count
        total = trajectory.I[:, 0] + trajectory.I[:, 1]

        def growth(day):
            return (total[day] - total[day - 1]) / total[day - 1]

        self.assertLess(growth(end), 0.03)
        for day in range(start + 1, end):
            self.assertGreaterEqual(growth(day), 0.03)

    def test_relative_days(self):
        trajectory = simulate(small_params(), ContagionTuple(0.013, 0.0135, 44))
        D = trajectory.declaration_day
        self.assertEqual(trajectory.relative_day(D), 1)
        self.assertEqual(trajectory.absolute_day(1), D)

    def test_attack_size_monotone_in_p(self):
        params = example1_params(theta=1.0)
        low = simulate(params, ContagionTuple(0.0115, 0.0115, 1))
        high = simulate(params, ContagionTuple(0.0125, 0.0125, 1))
        self.assertGreaterEqual(high.attack_size(), low.attack_size())

    def test_reproduction_number(self):
        params = example1_params()
        self.assertAlmostEqual(basic_reproduction_number(params, 0.01), 1.235, delta=0.001)
        self.assertAlmostEqual(basic_reproduction_number(params, 0.012), 1.482, delta=0.001)
        self.assertEqual(basic_reproduction_number(params, 0.0), 0.0)
        low, high = reproduction_range(params, [(0.01, 0.012), (0.0125, 0.0135)])
        self.assertAlmostEqual(low, 1.235, delta=0.001)
        self.assertGreater(high, 1.482)

    def test_reproduction_number_equal_rates(self):
        params = example1_params(Lambda1=25.0, Lambda2=25.0)
        self.assertAlmostEqual(basic_reproduction_number(params, 0.02), 25.0 * 0.02 * 4.1, places=12)


if __name__ == '__main__':
    unittest.main()
