"""Tests for the experiment runners, report files and the command line"""

import unittest
import contextlib
import filecmp
import io
import json
import logging
import os
import sys
import tempfile

import numpy as np
import pandas as pd

# Add parent directory to path for imports
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import AppConfig
from core.staffing import evaluate_cost
from core.costs import build_cost_fn
from core.epidemic import simulate
from experiments import (local_dips, out_of_sample_tuples, run_cost_benefit, run_evaluate, run_out_of_sample,
                         run_p_scan, run_solve)
from main import main
from metrics import PolicyName
from reports import ReportError, emit_reports, load_policy_csv, write_policy_csv
from schema import ContagionTuple, DeploymentVector, UncertaintySet
from helpers import SLOW, small_config

REPORT_FILES = ['policy.csv', 'naive_policy.csv', 'integral_policy.csv', 'convergence.csv',
                'policy_summary.csv', 'scenarios.csv', 'plot_data.json']


class TestSolve(unittest.TestCase):
    """The solve runner and its reports"""

    @classmethod
    def setUpClass(cls):
        cls.config = small_config()
        cls.result = run_solve(cls.config)
        cls.tmp = tempfile.TemporaryDirectory()
        cls.paths = emit_reports(cls.result, os.path.join(cls.tmp.name, 'first'))

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def test_result_shapes(self):
        self.assertTrue(self.result.policy.converged)
        self.assertEqual(len(self.result.policy.h), 30)
        self.assertEqual(list(self.result.summary.policy),
                         ['no_intervention', 'robust', 'naive', 'robust_integral'])
        # three scenarios, three policies each
        self.assertEqual(len(self.result.scenarios), 9)
        roles = self.result.scenarios.to_frame().role.unique().tolist()
        self.assertEqual(roles, ['no_action_worst', 'naive_worst', 'robust_worst'])

    def test_policy_ordering(self):
        worst = self.result.summary.set_index('policy').worst_cost
        self.assertLessEqual(worst['robust'], worst['naive'] * (1 + 1e-4) + 1e-9)
        self.assertLessEqual(worst['naive'], worst['no_intervention'] + 1e-9)
        self.assertAlmostEqual(worst['robust'], self.result.policy.upper, delta=1e-9 * max(1.0, worst['robust']))

    def test_integral_policy(self):
        integral = self.result.integral.h
        np.testing.assert_array_equal(integral, np.round(integral))
        self.assertLessEqual(integral.sum(), self.config.deployment.total_budget)

    def test_all_reports_written(self):
        for name in REPORT_FILES:
            self.assertTrue(os.path.exists(os.path.join(self.tmp.name, 'first', name)), name)
        with open(self.paths['plot_data'], encoding='utf-8') as f:
            plot = json.load(f)
        self.assertEqual(len(plot['scenarios']), 3)
        self.assertIn('robust', plot['scenarios'][0]['policies'])
        self.assertTrue(plot['bounds']['converged'])

    def test_reports_use_lf_line_endings(self):
        with open(self.paths['policy'], 'rb') as f:
            data = f.read()
        self.assertNotIn(b'\r\n', data)
        self.assertTrue(data.startswith(b'relative_day,callup\n'))

    def test_reports_are_byte_stable(self):
        second = run_solve(self.config)
        emit_reports(second, os.path.join(self.tmp.name, 'second'))
        match, mismatch, errors = filecmp.cmpfiles(os.path.join(self.tmp.name, 'first'),
                                                   os.path.join(self.tmp.name, 'second'),
                                                   REPORT_FILES, shallow=False)
        self.assertEqual(mismatch + errors, [])

    def test_policy_csv_round_trip(self):
        loaded = load_policy_csv(self.paths['policy'])
        self.assertEqual(loaded, self.result.policy.h)

    def test_convergence_rows_match_log(self):
        frame = pd.read_csv(self.paths['convergence'])
        self.assertEqual(len(frame), len(self.result.policy.log))
        self.assertNotIn('oracle_seconds', frame.columns)

    def test_reloaded_policy_reproduces_certified_cost(self):
        h = load_policy_csv(self.paths['policy'])
        cost_fn = build_cost_fn(self.config)
        bank = self.result.bank
        values = [evaluate_cost(h, t, cost_fn, self.config.epidemic, self.config.deployment) for t in bank.tuples]
        self.assertAlmostEqual(max(values), self.result.policy.upper, delta=1e-9 * max(1.0, max(values)))

    def test_evaluate_runner(self):
        frame = run_evaluate(self.result.policy.h, self.config)
        self.assertEqual(list(frame.columns), ['p1', 'p2', 'd', 'cost'])
        self.assertAlmostEqual(frame.cost.iloc[0], self.result.policy.upper,
                               delta=1e-9 * max(1.0, self.result.policy.upper))
        t = self.result.policy.worst_tuple
        frame = run_evaluate(self.result.policy.h, self.config, [t])
        self.assertAlmostEqual(frame.cost.iloc[0], self.result.policy.upper,
                               delta=1e-9 * max(1.0, self.result.policy.upper))

    def test_out_of_sample_inside_set_is_certified(self):
        policies = {PolicyName.NO_INTERVENTION.value: DeploymentVector.zeros(30),
                    PolicyName.ROBUST.value: self.result.policy.h}
        inside = self.result.bank.tuples[::9]
        report = run_out_of_sample(policies, self.config, inside, certified_upper=self.result.policy.upper)
        self.assertEqual(len(report), 2 * len(inside))
        for cost in report.costs(PolicyName.ROBUST.value):
            self.assertLessEqual(cost, self.result.policy.upper * (1 + 1e-9) + 1e-12)

    def test_out_of_sample_defaults(self):
        tuples = out_of_sample_tuples(self.config)
        self.assertEqual(tuples, [ContagionTuple(0.013, 0.014, d) for d in (44, 60, 90)])
        report = run_out_of_sample({PolicyName.ROBUST.value: self.result.policy.h}, self.config)
        frame = report.to_frame()
        self.assertEqual(len(frame), 3)
        self.assertTrue((frame.cost >= 0).all())
        self.assertTrue((frame.role == 'out_of_sample').all())

    def test_out_of_sample_cost_falls_as_change_comes_later(self):
        p1 = self.config.uncertainty.pU
        D = simulate(self.config.epidemic, ContagionTuple(p1, p1, 1)).declaration_day
        self.assertIsNotNone(D)
        # changes from D + 2 on leave the declaration day alone
        tuples = [ContagionTuple(p1, 0.015, d) for d in range(D + 2, D + 45, 3)]
        report = run_out_of_sample({PolicyName.ROBUST.value: self.result.policy.h}, self.config, tuples)
        frame = report.to_frame()
        self.assertTrue((frame.declaration_day == D).all())
        cost = frame.sort_values('d').cost.to_numpy()
        self.assertTrue(np.all(np.diff(cost) <= 1e-9 * max(1.0, cost.max())), cost)
        self.assertGreater(cost[0], cost[-1])


class TestPolicyFiles(unittest.TestCase):
    """Policy CSV reading and writing"""

    def test_empty_policy(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = write_policy_csv(DeploymentVector.zeros(4), os.path.join(tmp, 'policy.csv'))
            with open(path, encoding='utf-8') as f:
                self.assertEqual(f.read(), 'relative_day,callup\n1,0\n2,0\n3,0\n4,0\n')
            self.assertEqual(load_policy_csv(path), DeploymentVector.zeros(4))

    def test_exact_reload(self):
        h = DeploymentVector([0.1, 1.0 / 3.0, 2.5e-17, 12345.678901234567])
        with tempfile.TemporaryDirectory() as tmp:
            path = write_policy_csv(h, os.path.join(tmp, 'nested', 'policy.csv'))
            self.assertEqual(load_policy_csv(path), h)

    def test_bad_policy_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.csv')
            with open(path, 'w', encoding='utf-8') as f:
                f.write('day,staff\n1,0\n')
            with self.assertRaises(ReportError):
                load_policy_csv(path)
            with open(path, 'w', encoding='utf-8') as f:
                f.write('relative_day,callup\n1,0\n3,0\n')
            with self.assertRaises(ReportError):
                load_policy_csv(path)
            with self.assertRaises(ReportError):
                load_policy_csv(os.path.join(tmp, 'missing.csv'))


class TestStudies(unittest.TestCase):
    """Cost-benefit and p-scan studies"""

    def test_cost_benefit(self):
        config = small_config()
        frame = run_cost_benefit(config, [10.0, 10.0, 30.0])
        self.assertEqual(len(frame), 3)
        first, duplicate, last = (frame.iloc[i] for i in range(3))
        pd.testing.assert_series_equal(first, duplicate, check_names=False)
        self.assertTrue(np.isnan(first.marginal_benefit))
        self.assertLessEqual(last.robust_worst_cost, first.robust_worst_cost * (1 + 1e-4) + 1e-9)
        expected = (first.robust_worst_cost - last.robust_worst_cost) / 20.0
        self.assertAlmostEqual(last.marginal_benefit, expected, places=9)
        self.assertTrue((frame.staff_used <= frame.budget + 1e-6).all())
        self.assertTrue((frame.robust_worst_cost <= frame.naive_worst_cost * (1 + 1e-4) + 1e-9).all())

    def test_single_tuple_set_makes_robust_and_naive_agree(self):
        uncertainty = UncertaintySet(pL=0.013, pU=0.013, pL_hat=0.0135, pU_hat=0.0135, change_window=(44, 44), N=1)
        config = small_config().with_uncertainty(uncertainty).with_solver(grid_start=1, grid_max=1, tolerance=1e-9)
        result = run_solve(config)
        self.assertEqual(len(result.bank), 1)
        self.assertTrue(result.policy.converged)
        worst = result.summary.set_index('policy').worst_cost
        self.assertAlmostEqual(worst['robust'], worst['naive'], delta=1e-6 * max(1.0, worst['naive']))
        self.assertLess(worst['robust'], worst['no_intervention'])

    def test_cost_benefit_monotone_in_budget(self):
        budgets = [10.0, 20.0, 30.0, 45.0, 60.0]
        frame = run_cost_benefit(small_config(), budgets)
        self.assertEqual(frame.budget.tolist(), budgets)
        robust = frame.robust_worst_cost.to_numpy()
        naive = frame.naive_worst_cost.to_numpy()
        # the robust bound is only certified to the solver tolerance
        slack = 1e-4
        self.assertTrue(np.all(robust[1:] <= robust[:-1] * (1 + slack) + 1e-9), robust)
        self.assertTrue(np.all(robust <= naive * (1 + slack) + 1e-9), (robust, naive))

    def test_cost_benefit_rejects_unsorted(self):
        with self.assertRaises(ValueError):
            run_cost_benefit(small_config(), [30.0, 10.0])
        with self.assertRaises(ValueError):
            run_cost_benefit(small_config(), [])

    def test_p_scan(self):
        config = small_config()
        policies = {PolicyName.NO_INTERVENTION.value: DeploymentVector.zeros(30),
                    PolicyName.ROBUST.value: DeploymentVector(np.full(30, 1.0))}
        frame = run_p_scan(config, policies, p_grid=[0.012, 0.001, 0.013])
        self.assertEqual(list(frame.columns), ['p', 'no_intervention', 'robust'])
        self.assertEqual(frame.p.tolist(), [0.001, 0.012, 0.013])
        # below the epidemic threshold nothing is ever declared
        self.assertEqual(frame.no_intervention.iloc[0], 0.0)
        self.assertEqual(frame.robust.iloc[0], 0.0)
        self.assertTrue((frame.robust <= frame.no_intervention + 1e-12).all())

    def test_p_scan_default_grid(self):
        config = small_config()
        frame = run_p_scan(config, {PolicyName.NO_INTERVENTION.value: DeploymentVector.zeros(30)})
        self.assertEqual(len(frame), 5)
        self.assertAlmostEqual(frame.p.iloc[0], 0.012)
        self.assertAlmostEqual(frame.p.iloc[-1], 0.013)

    def test_local_dips(self):
        self.assertEqual(local_dips([1.0, 2.0, 1.5, 3.0, 2.0]), [2, 4])
        self.assertEqual(local_dips([0.0, 0.0, 1.0]), [])
        self.assertEqual(local_dips([5.0]), [])


class TestCommandLine(unittest.TestCase):
    """Exit codes of the command line"""

    def run_main(self, argv):
        out, err = io.StringIO(), io.StringIO()
        with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            code = main(['--log-dir', tmp, '--log-level', 'ERROR'] + argv)
        return code, out.getvalue(), err.getvalue()

    def test_validate_bundled_config(self):
        code, out, _ = self.run_main(['validate-config', 'example1'])
        self.assertEqual(code, 0)
        self.assertEqual(json.loads(out)['r0_range'], [1.235, 1.482])

    def test_invalid_config_exit_code(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.yaml')
            with open(path, 'w', encoding='utf-8') as f:
                f.write('schema_version: 1\nepidemic: {}\n')
            code, _, err = self.run_main(['validate-config', path])
        self.assertEqual(code, 2)
        self.assertIn('missing required', err)

    def test_missing_config_exit_code(self):
        code, _, err = self.run_main(['validate-config', os.path.join(tempfile.gettempdir(), 'nope.yaml')])
        self.assertEqual(code, 2)
        self.assertIn('Error:', err)

    def test_log_file_per_command(self):
        with tempfile.TemporaryDirectory() as tmp, contextlib.redirect_stdout(io.StringIO()):
            main(['--log-dir', tmp, '--log-level', 'ERROR', 'validate-config', 'example2'])
            logs = os.listdir(tmp)
            self.assertEqual(len(logs), 1)
            self.assertTrue(logs[0].startswith('surge_validate_config_'))
            for handler in logging.getLogger().handlers:
                handler.flush()
            with open(os.path.join(tmp, logs[0]), encoding='utf-8') as f:
                self.assertIn("Running 'validate-config'", f.read())

    def test_bundled_names_listed(self):
        self.assertIn('example1', AppConfig.get_bundled_experiments())


@unittest.skipUnless(SLOW, "set SURGE_SLOW_TESTS=1 to run the full example solves")
class TestExampleOne(unittest.TestCase):
    """Full-size solve of the bundled health-system example"""

    def test_robust_beats_naive(self):
        from core.config_loader import load_config
        config = load_config('example1').with_solver(grid_start=5, grid_max=5)
        result = run_solve(config)
        worst = result.summary.set_index('policy').worst_cost
        self.assertTrue(result.policy.converged)
        self.assertLess(worst['robust'], worst['naive'])
        self.assertLess(worst['naive'], worst['no_intervention'])

    def test_out_of_sample_cost_decays_with_change_day(self):
        from core.config_loader import load_config
        config = load_config('example1').with_solver(grid_start=5, grid_max=5)
        result = run_solve(config)
        p1 = config.uncertainty.pU
        tuples = [ContagionTuple(p1, 0.015, d) for d in range(150, 321, 10)]
        report = run_out_of_sample({PolicyName.ROBUST.value: result.policy.h}, config, tuples)
        cost = report.to_frame().sort_values('d').cost.to_numpy()
        self.assertEqual(len(cost), 18)
        self.assertTrue(np.all(np.diff(cost) <= 1e-9), cost)


if __name__ == '__main__':
    unittest.main()
