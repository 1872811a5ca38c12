"""
Robust deployment by cutting planes over a discretized uncertainty set

The loop alternates a master LP, which gives a lower bound W and a candidate
deployment, with the worst-case oracle, which prices that candidate over the
grid and supplies an upper bound plus a new subgradient cut. The hot start
embeds full scenario blocks instead of cuts for the first few worst tuples.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config import AppConfig
from core.costs import DayCostFn, build_cost_fn
from core.staffing import Cut
from schema import ContagionTuple, DeploymentConstraints, DeploymentVector, ExperimentConfig
from strategies.master import MasterState, solve_master
from strategies.uncertainty import ScenarioBank
from tracking.convergence_logger import ConvergenceLog, IterationRecord, relative_gap

logger = logging.getLogger(__name__)


@dataclass
class GridLevel:
    N: int
    n_tuples: int
    lower: float
    upper: float
    iterations: int


@dataclass
class RobustPolicy:
    """Deployment with certified bounds on its worst-case cost over the grid"""
    h: DeploymentVector
    lower: float
    upper: float
    worst_tuple: Optional[ContagionTuple]
    converged: bool
    log: ConvergenceLog
    levels: List[GridLevel] = field(default_factory=list)
    bank: Optional[ScenarioBank] = field(default=None, repr=False)

    @property
    def gap(self) -> float:
        return relative_gap(self.lower, self.upper)

    @property
    def worst_cost(self) -> float:
        return self.upper

    def values_by_grid(self) -> List[Tuple[int, float]]:
        """Certified lower bound reached at each grid granularity"""
        return [(level.N, level.lower) for level in self.levels]


def _random_deployments(constraints: DeploymentConstraints, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random points of H: scaled Dirichlet draws over the deployable days"""
    T = constraints.planner_horizon
    n = max(1, constraints.deployable_days)
    draws = np.zeros((count, T))
    shares = rng.dirichlet(np.ones(n), size=count)
    totals = rng.uniform(0.0, constraints.total_budget, size=(count, 1))
    draws[:, :n] = shares * totals
    if constraints.per_period_cap is not None:
        draws = np.minimum(draws, constraints.per_period_cap)
    return draws


def verify_cut(cut: Cut, bank: ScenarioBank, constraints: DeploymentConstraints, count: int,
               rng: np.random.Generator) -> int:
    """Spot-check V(h|p) >= g.h + b at random feasible h; returns the number of violations"""
    block = bank.block_for(cut.source_tuple)
    failures = 0
    for h in _random_deployments(constraints, count, rng):
        value = block.value(h)
        bound = cut(h)
        if value < bound - 1e-9 * max(1.0, abs(value)):
            failures += 1
            logger.warning(f"Cut from {cut.source_tuple} overshoots: V={value:.12g} < bound {bound:.12g}")
    return failures


def procedure_a(bank: ScenarioBank, constraints: DeploymentConstraints, K: int, epsilon: float,
                state: Optional[MasterState] = None, grid: int = 0,
                pricing: str = AppConfig.DEFAULT_PRICING) -> MasterState:
    """Hot start: embed the worst scenario at the current candidate, re-solve, up to K times"""
    if K < 1 or epsilon <= 0:
        raise ValueError(f"hot start needs K >= 1 and epsilon > 0, got K={K}, epsilon={epsilon}")
    state = state or MasterState()
    h = state.candidate if state.candidate is not None else np.zeros(constraints.planner_horizon)
    for r in range(1, K + 1):
        started = time.perf_counter()
        i, value = bank.worst(h)
        oracle_seconds = time.perf_counter() - started
        contagion = bank.tuples[i]
        state.offer_upper(h, value, contagion)
        state.embed(bank.block(i))

        started = time.perf_counter()
        h, W = solve_master(state, constraints, pricing)
        master_seconds = time.perf_counter() - started
        state.record_lower(W)
        state.candidate = h
        state.log.log_iteration(IterationRecord(
            'hot_start', grid, r, contagion.p1, contagion.p2, contagion.d,
            W, state.upper, oracle_seconds, master_seconds))
        if abs(state.upper - W) <= epsilon * max(W, AppConfig.GAP_EPS):
            break
    return state


def algorithm_b(bank: ScenarioBank, constraints: DeploymentConstraints, tolerance: float,
                state: Optional[MasterState] = None, max_iterations: int = AppConfig.DEFAULT_MAX_ITERATIONS,
                grid: int = 0, pricing: str = AppConfig.DEFAULT_PRICING, verify_cuts: int = 0,
                rng: Optional[np.random.Generator] = None) -> RobustPolicy:
    """Cutting-plane loop until the relative bound gap drops below tolerance"""
    state = state or MasterState()
    rng = rng or np.random.default_rng(0)
    converged = False
    iterations = 0
    for r in range(1, max_iterations + 1):
        iterations = r
        started = time.perf_counter()
        h, W = solve_master(state, constraints, pricing)
        master_seconds = time.perf_counter() - started
        state.record_lower(W)
        state.candidate = h

        started = time.perf_counter()
        i, value = bank.worst(h)
        oracle_seconds = time.perf_counter() - started
        contagion = bank.tuples[i]
        state.offer_upper(h, value, contagion)
        state.log.log_iteration(IterationRecord(
            'cutting_plane', grid, r, contagion.p1, contagion.p2, contagion.d,
            W, state.upper, oracle_seconds, master_seconds))

        if relative_gap(state.lower, state.upper) < tolerance:
            converged = True
            break
        cut = bank.block(i).cut(h)
        if verify_cuts:
            verify_cut(cut, bank, constraints, verify_cuts, rng)
        state.add_cut(cut)

    if not converged:
        logger.warning(f"Cutting plane stopped after {iterations} iterations with gap "
                       f"{relative_gap(state.lower, state.upper):.3e} above {tolerance:.1e}")
    return RobustPolicy(
        h=DeploymentVector(state.incumbent),
        lower=state.lower, upper=state.upper,
        worst_tuple=state.incumbent_tuple, converged=converged, log=state.log,
        levels=[GridLevel(grid, len(bank), state.lower, state.upper, iterations)],
        bank=bank,
    )


def refine_doubling(config: ExperimentConfig, N0: Optional[int] = None, N_max: Optional[int] = None,
                    tolerance: Optional[float] = None, cost_fn: Optional[DayCostFn] = None,
                    seed: int = 0) -> RobustPolicy:
    """Solve at N0, 2 N0, ... up to N_max, carrying cuts and scenarios to each finer grid"""
    settings = config.solver
    N = N0 or settings.grid_start
    N_max = N_max or settings.grid_max
    tolerance = tolerance or settings.tolerance
    if N < 1:
        raise ValueError(f"grid granularity must be at least 1, got {N}")
    cost_fn = cost_fn or build_cost_fn(config)
    rng = np.random.default_rng(seed)

    state = MasterState()
    levels: List[GridLevel] = []
    bank: Optional[ScenarioBank] = None
    policy: Optional[RobustPolicy] = None
    while True:
        bank = ScenarioBank.from_config(config, cost_fn, config.uncertainty.with_grid(N), previous=bank)
        if policy is None:
            if settings.hot_start_iterations > 0:
                procedure_a(bank, config.deployment, settings.hot_start_iterations, settings.hot_start_gap,
                            state=state, grid=N, pricing=settings.pricing)
        else:
            state.reset_upper()
        policy = algorithm_b(bank, config.deployment, tolerance, state=state,
                             max_iterations=settings.max_iterations, grid=N, pricing=settings.pricing,
                             verify_cuts=settings.verify_cuts, rng=rng)
        levels.extend(policy.levels)
        logger.info(f"N={N}: {len(bank)} tuples, bounds [{policy.lower:.10g}, {policy.upper:.10g}], "
                    f"{'converged' if policy.converged else 'not converged'}")
        if N * 2 > N_max:
            break
        N *= 2
    policy.levels = levels
    policy.bank = bank
    return policy
