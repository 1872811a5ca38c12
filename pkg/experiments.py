"""
Experiment runners behind the command line

Each runner takes a validated ExperimentConfig and returns in-memory results;
writing files is left to reports.emit_reports.
"""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import AppConfig
from core.costs import DayCostFn, build_cost_fn
from metrics import PolicyName, ScenarioMetrics, ScenarioRole, daily_series, scenario_metrics
from schema import ContagionTuple, DeploymentVector, ExperimentConfig
from strategies.cutting_plane import RobustPolicy, refine_doubling
from strategies.naive import NaivePlan, naive_plan
from strategies.uncertainty import ScenarioBank
from utils.rounding import round_deployment

logger = logging.getLogger(__name__)

SCENARIO_COLUMNS = ['role', 'policy', 'p1', 'p2', 'd', 'declaration_day', 'cost',
                    'indicator_name', 'indicator', 'critical_days']


@dataclass
class ScenarioReport:
    """Policy performance per contagion tuple"""
    rows: List[Tuple[str, ScenarioMetrics]] = field(default_factory=list)

    def add(self, role: ScenarioRole, metrics: ScenarioMetrics):
        if metrics.cost < 0:
            raise ValueError(f"negative cost {metrics.cost} for {metrics.policy} at ({metrics.p1}, {metrics.p2}, {metrics.d})")
        self.rows.append((role.value, metrics))

    def __len__(self) -> int:
        return len(self.rows)

    def to_frame(self) -> pd.DataFrame:
        records = [dict(role=role, **metrics.to_dict()) for role, metrics in self.rows]
        return pd.DataFrame(records, columns=SCENARIO_COLUMNS)

    def costs(self, policy: str) -> List[float]:
        return [m.cost for _, m in self.rows if m.policy == policy]


@dataclass
class SolveResult:
    """Everything the solve verb reports"""
    config: ExperimentConfig
    policy: RobustPolicy
    naive: NaivePlan
    integral: DeploymentVector
    summary: pd.DataFrame
    scenarios: ScenarioReport
    plot_data: Dict[str, Any]

    @property
    def bank(self) -> ScenarioBank:
        return self.policy.bank


def _policy_summary(name: str, h: DeploymentVector, bank: ScenarioBank) -> Dict[str, Any]:
    i, cost = bank.worst(h.h)
    t = bank.tuples[i]
    row = {'policy': name, 'worst_cost': cost, 'p1': t.p1, 'p2': t.p2, 'd': int(t.d)}
    row.update(h.structure())
    return row


def compare_policies(policies: Mapping[str, DeploymentVector], bank: ScenarioBank,
                     cost_fn: DayCostFn) -> Tuple[pd.DataFrame, ScenarioReport, Dict[str, Any]]:
    """Summary table, three-scenario comparison and plot series for a set of policies

    The scenarios are the worst tuple under no action, under the naive policy
    and under the robust policy.
    """
    T = len(next(iter(policies.values())))
    zeros = np.zeros(T)
    summary = pd.DataFrame([_policy_summary(name, h, bank) for name, h in policies.items()])

    roles = [(ScenarioRole.NO_ACTION_WORST, bank.worst(zeros)[0])]
    if PolicyName.NAIVE.value in policies:
        roles.append((ScenarioRole.NAIVE_WORST, bank.worst(policies[PolicyName.NAIVE.value].h)[0]))
    if PolicyName.ROBUST.value in policies:
        roles.append((ScenarioRole.ROBUST_WORST, bank.worst(policies[PolicyName.ROBUST.value].h)[0]))

    report = ScenarioReport()
    series = []
    for role, i in roles:
        block = bank.block(i)
        entry = {'role': role.value, 'tuple': block.contagion.as_row(),
                 'declaration_day': block.declaration_day, 'indicator_name': cost_fn.indicator_name,
                 'policies': {}}
        for name, h in policies.items():
            report.add(role, scenario_metrics(block, h.h, cost_fn, name))
            entry['policies'][name] = daily_series(block, h.h, cost_fn)
        series.append(entry)
    return summary, report, {'scenarios': series}


def run_solve(config: ExperimentConfig, seed: int = 0, workers: Optional[int] = None) -> SolveResult:
    """Robust policy by hot start plus cutting planes with grid doubling, compared with the naive plan"""
    if workers:
        config = config.with_solver(workers=workers)
    cost_fn = build_cost_fn(config)
    started = time.perf_counter()
    policy = refine_doubling(config, cost_fn=cost_fn, seed=seed)
    naive = naive_plan(config, bank=policy.bank, cost_fn=cost_fn)
    integral = DeploymentVector(round_deployment(policy.h.h, config.deployment))

    T = config.deployment.planner_horizon
    policies = {
        PolicyName.NO_INTERVENTION.value: DeploymentVector.zeros(T),
        PolicyName.ROBUST.value: policy.h,
        PolicyName.NAIVE.value: naive.h,
    }
    summary, report, plot_data = compare_policies(policies, policy.bank, cost_fn)
    summary = pd.concat([summary, pd.DataFrame([_policy_summary(PolicyName.ROBUST_INTEGRAL.value, integral, policy.bank)])],
                        ignore_index=True)
    plot_data['bounds'] = {'lower': policy.lower, 'upper': policy.upper, 'converged': policy.converged,
                           'levels': [{'N': n, 'lower': w} for n, w in policy.values_by_grid()]}

    problems = policy.log.ledger_violations()
    for problem in problems:
        logger.warning(f"Bound ledger: {problem}")
    logger.info(f"Solve finished in {time.perf_counter() - started:.1f}s: robust worst {policy.upper:.10g}, "
                f"naive worst {float(summary.loc[summary.policy == PolicyName.NAIVE.value, 'worst_cost'].iloc[0]):.10g}")
    return SolveResult(config, policy, naive, integral, summary, report, plot_data)


def out_of_sample_tuples(config: ExperimentConfig) -> List[ContagionTuple]:
    """Override tuples from the experiments section; p1 defaults to the top of the initial interval"""
    settings = config.experiments.out_of_sample
    p1_values = settings.p1 or (config.uncertainty.pU,)
    p2_values = settings.p2 or (config.uncertainty.pU_hat,)
    days = settings.days or tuple(config.uncertainty.change_days)
    return [ContagionTuple(p1, p2, d) for p1, p2, d in itertools.product(p1_values, p2_values, days)]


def run_out_of_sample(policies: Mapping[str, DeploymentVector], config: ExperimentConfig,
                      tuples: Optional[Sequence[ContagionTuple]] = None,
                      certified_upper: Optional[float] = None) -> ScenarioReport:
    """Fixed policies priced at tuples that may lie outside the uncertainty set"""
    tuples = list(tuples) if tuples is not None else out_of_sample_tuples(config)
    cost_fn = build_cost_fn(config)
    bank = ScenarioBank(config.epidemic, config.deployment, cost_fn, tuples, workers=config.solver.workers)
    report = ScenarioReport()
    for i, t in enumerate(bank.tuples):
        block = bank.block(i)
        for name, h in policies.items():
            metrics = scenario_metrics(block, h.h, cost_fn, name)
            report.add(ScenarioRole.OUT_OF_SAMPLE, metrics)
            if (certified_upper is not None and name == PolicyName.ROBUST.value
                    and config.uncertainty.contains(t)
                    and metrics.cost > certified_upper * (1 + AppConfig.LEDGER_TOL) + AppConfig.GAP_EPS):
                logger.warning(f"{t} lies in the uncertainty set but costs {metrics.cost:.10g} "
                               f"above the certified bound {certified_upper:.10g}")
    logger.info(f"Out-of-sample: {len(bank)} tuples x {len(policies)} policies")
    return report


def run_cost_benefit(config: ExperimentConfig, budgets: Optional[Iterable[float]] = None,
                     seed: int = 0) -> pd.DataFrame:
    """Robust and naive policies re-solved per budget, with the marginal benefit of extra staff"""
    budgets = [float(b) for b in (budgets if budgets is not None else config.experiments.budgets)]
    if not budgets:
        raise ValueError("cost-benefit needs at least one budget")
    if any(b <= 0 for b in budgets) or budgets != sorted(budgets):
        raise ValueError(f"budgets must be positive and sorted, got {budgets}")
    cost_fn = build_cost_fn(config)
    T = config.deployment.planner_horizon
    zeros = np.zeros(T)

    solved: Dict[float, Dict[str, Any]] = {}
    for budget in dict.fromkeys(budgets):
        cfg = config.with_budget(budget)
        policy = refine_doubling(cfg, cost_fn=cost_fn, seed=seed)
        bank = policy.bank
        naive = naive_plan(cfg, bank=bank, cost_fn=cost_fn)
        i_robust, robust_cost = bank.worst(policy.h.h)
        i_naive, naive_cost = bank.worst(naive.h.h)
        robust_metrics = scenario_metrics(bank.block(i_robust), policy.h.h, cost_fn, PolicyName.ROBUST)
        naive_metrics = scenario_metrics(bank.block(i_naive), naive.h.h, cost_fn, PolicyName.NAIVE)
        t = bank.tuples[i_robust]
        solved[budget] = {
            'budget': budget,
            'robust_worst_cost': robust_cost,
            'robust_p1': t.p1, 'robust_p2': t.p2, 'robust_d': int(t.d),
            'robust_indicator': robust_metrics.indicator,
            'robust_critical_days': robust_metrics.critical_days,
            'naive_worst_cost': naive_cost,
            'naive_indicator': naive_metrics.indicator,
            'naive_critical_days': naive_metrics.critical_days,
            'no_intervention_cost': bank.block(i_robust).value(zeros),
            'staff_used': policy.h.total,
        }
        logger.info(f"Budget {budget:g}: robust worst {robust_cost:.10g}, naive worst {naive_cost:.10g}")

    distinct = list(solved)
    marginal = {distinct[0]: float('nan')}
    for previous, budget in zip(distinct, distinct[1:]):
        drop = solved[previous]['robust_worst_cost'] - solved[budget]['robust_worst_cost']
        marginal[budget] = drop / (budget - previous)
    rows = [dict(solved[b], marginal_benefit=marginal[b]) for b in budgets]

    final = rows[-1]['robust_worst_cost']
    if final > 0:
        logger.warning(f"Worst-case cost is still {final:.10g} at the largest budget {budgets[-1]:g}")
    return pd.DataFrame(rows)


def local_dips(values: Sequence[float], tol: float = 1e-12) -> List[int]:
    """Indices where a curve decreases from the previous point"""
    values = np.asarray(values, dtype=float)
    return [int(i) for i in np.nonzero(np.diff(values) < -tol * np.maximum(1.0, np.abs(values[:-1])))[0] + 1]


def run_p_scan(config: ExperimentConfig, policies: Mapping[str, DeploymentVector],
               p_grid: Optional[Sequence[float]] = None) -> pd.DataFrame:
    """Cost as a function of a constant contagion probability, one column per policy"""
    if p_grid is None:
        scan = config.experiments.p_scan
        p_grid = np.linspace(scan.p_min, scan.p_max, scan.points)
    tuples = [ContagionTuple(float(p), float(p), 1) for p in p_grid]
    cost_fn = build_cost_fn(config)
    bank = ScenarioBank(config.epidemic, config.deployment, cost_fn, tuples, workers=config.solver.workers)
    frame = pd.DataFrame({'p': [t.p1 for t in bank.tuples]})
    for name, h in policies.items():
        frame[name] = bank.values(h.h)
        dips = local_dips(frame[name].to_numpy())
        if name == PolicyName.NO_INTERVENTION.value:
            if dips:
                logger.warning(f"No-intervention cost decreases in p at {[bank.tuples[i].p1 for i in dips]}")
        elif dips:
            logger.info(f"{name}: cost is not monotone in p, dips at {[round(bank.tuples[i].p1, 8) for i in dips]}")
        else:
            logger.info(f"{name}: no local dip on this p grid")
    return frame


def run_evaluate(h: DeploymentVector, config: ExperimentConfig,
                 tuples: Optional[Sequence[ContagionTuple]] = None) -> pd.DataFrame:
    """Cost of a saved policy at explicit tuples, or its worst tuple over the configured grid"""
    cost_fn = build_cost_fn(config)
    if tuples:
        bank = ScenarioBank(config.epidemic, config.deployment, cost_fn, tuples, workers=config.solver.workers)
        values = bank.values(h.h)
        rows = [dict(t.as_row(), cost=float(v)) for t, v in zip(bank.tuples, values)]
    else:
        bank = ScenarioBank.from_config(config, cost_fn, config.uncertainty.with_grid(config.solver.grid_max))
        i, value = bank.worst(h.h)
        rows = [dict(bank.tuples[i].as_row(), cost=value)]
        logger.info(f"Worst tuple over {len(bank)} grid points: {bank.tuples[i]} -> {value:.10g}")
    return pd.DataFrame(rows, columns=['p1', 'p2', 'd', 'cost'])
