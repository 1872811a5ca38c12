"""
Master problem of the cutting-plane method

    min z  over h in H
    s.t. z >= g_k.h + b_k                          for every pooled cut
         z >= sum_t z_t^q                          for every embedded scenario q
         z_t^q >= sigma_i (c_t^q + A_t^q h) + k_i  for the pieces that can be active

Every day cost is largest at h = 0, so z and z_t^q are written as their
h = 0 values minus nonnegative decrements. The origin is then a basic
feasible point and the simplex starts directly in phase 2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config import AppConfig
from core import simplex
from core.staffing import Cut, ScenarioBlock
from schema import ContagionTuple, DeploymentConstraints
from tracking.convergence_logger import BoundLedgerError, ConvergenceLog

logger = logging.getLogger(__name__)


class MasterProblemError(RuntimeError):
    """The master LP did not reach optimality"""


@dataclass
class EmbeddedScenario:
    block: ScenarioBlock
    rows: np.ndarray          # (T, T) dense workforce coefficients
    days: np.ndarray          # days with positive cost at h = 0
    base: np.ndarray          # day costs at h = 0 on those days
    pieces: List[np.ndarray]  # piece indices that can be active on each of those days


def embed_block(block: ScenarioBlock) -> EmbeddedScenario:
    base = block.base_costs()
    days = np.nonzero(base > 0)[0]
    c = block.workforce.constant
    pieces = []
    for t in days:
        values = block.slopes[t] * c[t] + block.intercepts[t]
        active = int(np.argmax(values))
        # omega never drops below c_t, so pieces steeper than the active one stay dominated
        candidates = np.nonzero(block.slopes[t] >= block.slopes[t, active])[0]
        nonzero = (block.slopes[t, candidates] != 0) | (block.intercepts[t, candidates] > 0)
        pieces.append(candidates[nonzero])
    return EmbeddedScenario(block=block, rows=block.workforce.matrix(), days=days, base=base[days], pieces=pieces)


@dataclass
class MasterState:
    """Cut pool, embedded scenarios and bound bookkeeping shared by all solve phases"""
    cuts: List[Cut] = field(default_factory=list)
    scenarios: List[EmbeddedScenario] = field(default_factory=list)
    incumbent: Optional[np.ndarray] = None
    incumbent_tuple: Optional[ContagionTuple] = None
    candidate: Optional[np.ndarray] = None
    lower: float = 0.0
    upper: float = float('inf')
    log: ConvergenceLog = field(default_factory=ConvergenceLog)

    @property
    def embedded_tuples(self) -> List[ContagionTuple]:
        return [s.block.contagion for s in self.scenarios]

    def add_cut(self, cut: Cut):
        self.cuts.append(cut)

    def embed(self, block: ScenarioBlock) -> bool:
        """Embed a scenario once; returns False when it is already present"""
        if block.contagion in self.embedded_tuples:
            return False
        self.scenarios.append(embed_block(block))
        logger.debug(f"Embedded scenario {block.contagion}, {len(self.scenarios)} in the master")
        return True

    def record_lower(self, value: float):
        slack = AppConfig.LEDGER_TOL * max(1.0, abs(self.lower))
        if value < self.lower - slack:
            raise BoundLedgerError(f"master bound decreased from {self.lower:.12g} to {value:.12g}")
        self.lower = max(self.lower, value)
        self._check_sandwich()

    def offer_upper(self, h: np.ndarray, value: float, contagion: ContagionTuple) -> bool:
        """Keep h as the incumbent when its worst-case cost improves the upper bound"""
        improved = value < self.upper
        if improved:
            self.upper = value
            self.incumbent = np.array(h, dtype=float)
            self.incumbent_tuple = contagion
        self._check_sandwich()
        return improved

    def reset_upper(self):
        """Forget the upper bound when the tuple grid grows; cuts and scenarios stay valid"""
        self.upper = float('inf')
        if self.incumbent is not None:
            self.candidate = self.incumbent
        self.incumbent = None
        self.incumbent_tuple = None

    def _check_sandwich(self):
        if self.lower > self.upper + AppConfig.LEDGER_TOL * max(1.0, abs(self.upper)):
            raise BoundLedgerError(f"lower bound {self.lower:.12g} exceeds upper bound {self.upper:.12g}")


def solve_master(state: MasterState, constraints: DeploymentConstraints,
                 pricing: str = AppConfig.DEFAULT_PRICING) -> Tuple[np.ndarray, float]:
    """Optimal call-up vector and lower bound W for the current cuts and scenarios

    W is unique, h need not be: when several deployments reach W the one
    returned is the simplex vertex reached by index-ordered pivoting, so the
    same cuts and scenarios in the same order always give the same h. An
    empty master, or one whose cuts are all flat at zero, returns h = 0. No
    secondary objective is added because any penalty on h would bias W upward.
    """
    T = constraints.planner_horizon
    n_h = constraints.deployable_days
    h = np.zeros(T)

    top = max([0.0] + [cut.b for cut in state.cuts] + [float(s.base.sum()) for s in state.scenarios])
    if n_h == 0 or top == 0.0:
        return h, top

    n_w = sum(len(s.days) for s in state.scenarios)
    n_vars = n_h + 1 + n_w
    v = n_h
    rows: List[np.ndarray] = []
    rhs: List[float] = []

    for cut in state.cuts:
        r = np.zeros(n_vars)
        r[:n_h] = -cut.g[:n_h]
        r[v] = -1.0
        rows.append(r)
        rhs.append(cut.b - top)

    upper_w = []
    w = v + 1
    for scenario in state.scenarios:
        total = np.zeros(n_vars)
        total[v] = -1.0
        for t, u, pieces in zip(scenario.days, scenario.base, scenario.pieces):
            total[w] = 1.0
            upper_w.append(u)
            c_t = scenario.block.workforce.constant[t]
            for i in pieces:
                sigma = scenario.block.slopes[t, i]
                r = np.zeros(n_vars)
                r[w] = -1.0
                r[:n_h] = -sigma * scenario.rows[t, :n_h]
                rows.append(r)
                rhs.append(sigma * c_t + scenario.block.intercepts[t, i] - u)
            w += 1
        rows.append(total)
        rhs.append(float(scenario.base.sum()) - top)

    budget = np.zeros(n_vars)
    budget[:n_h] = -1.0
    rows.append(budget)
    rhs.append(-constraints.total_budget)

    cap = np.inf if constraints.per_period_cap is None else constraints.per_period_cap
    upper = np.concatenate([np.full(n_h, cap), [top], upper_w])
    c = np.zeros(n_vars)
    c[v] = -1.0

    lp = simplex.LinearProgram(c=c, A_ge=np.array(rows), b_ge=np.array(rhs), upper=upper)
    solution = simplex.solve(lp, pricing=pricing)
    if not solution.is_optimal:
        raise MasterProblemError(f"master LP ended with status {solution.status}")

    h[:n_h] = np.clip(solution.x[:n_h], 0.0, None)
    W = top + solution.objective
    logger.debug(f"Master: {len(state.cuts)} cuts, {len(state.scenarios)} scenarios, {len(rows)} rows, "
                 f"{solution.iterations} pivots, W={W:.10g}")
    return h, W
