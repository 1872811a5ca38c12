"""Single-scenario baseline: plan against the tuple that is worst when nobody is deployed"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.costs import DayCostFn, build_cost_fn
from schema import ContagionTuple, DeploymentVector, ExperimentConfig
from strategies.master import MasterState, solve_master
from strategies.uncertainty import ScenarioBank

logger = logging.getLogger(__name__)


@dataclass
class NaivePlan:
    h: DeploymentVector
    planned_tuple: ContagionTuple
    planned_cost: float
    no_action_cost: float


def naive_plan(config: ExperimentConfig, bank: Optional[ScenarioBank] = None,
               cost_fn: Optional[DayCostFn] = None) -> NaivePlan:
    """Optimal deployment for the no-action worst tuple alone"""
    cost_fn = cost_fn or build_cost_fn(config)
    bank = bank or ScenarioBank.from_config(config, cost_fn, config.uncertainty.with_grid(config.solver.grid_max))
    i, no_action = bank.worst(np.zeros(config.deployment.planner_horizon))
    state = MasterState()
    state.embed(bank.block(i))
    h, W = solve_master(state, config.deployment, config.solver.pricing)
    logger.info(f"Naive plan against {bank.tuples[i]}: cost {no_action:.10g} -> {W:.10g} with {h.sum():.6g} staff")
    return NaivePlan(DeploymentVector(h), bank.tuples[i], W, no_action)


def naive_worst_case_policy(config: ExperimentConfig, bank: Optional[ScenarioBank] = None) -> DeploymentVector:
    return naive_plan(config, bank).h
