"""Shared parameter sets for the test suites"""

import os
import sys
from dataclasses import replace

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from schema import (DeploymentConstraints, ExperimentConfig, ExperimentSettings, OutOfSampleSettings,
                    PScanSettings, QueueingCostSpec, SeirParams, SolverSettings, UncertaintySet)

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SLOW = os.getenv('SURGE_SLOW_TESTS') == '1'


def example1_params(**changes) -> SeirParams:
    params = SeirParams(
        Lambda1=30.0, Lambda2=35.0, muE_inv=1.9, muRR_inv=4.1, f=1.0, theta=0.7,
        N1=900000.0, N2=20000.0, I0_1=5.0, I0_2=0.0,
        declaration_threshold=0.024, dampening_off_threshold=0.0, horizon_T=320,
        declaration_window=7,
    )
    return replace(params, **changes)


def small_params(**changes) -> SeirParams:
    """A town of 50,000 with a 1,000-strong workforce; declares within the first 100 days"""
    params = SeirParams(
        Lambda1=30.0, Lambda2=35.0, muE_inv=1.9, muRR_inv=4.1, f=1.0, theta=0.7,
        N1=50000.0, N2=1000.0, I0_1=5.0, I0_2=0.0,
        declaration_threshold=0.01, dampening_off_threshold=0.0, horizon_T=200,
        declaration_window=7,
    )
    return replace(params, **changes)


def small_queueing() -> QueueingCostSpec:
    return QueueingCostSpec(zeta_bar=500.0, mu=30.0, rho0=0.95, delta_demand=0.01)


def small_config(budget: float = 30.0, planner_horizon: int = 30, **solver_changes) -> ExperimentConfig:
    """Queueing model starting at the first breakpoint so every declared day carries some cost"""
    solver = replace(SolverSettings(grid_start=2, grid_max=2, tolerance=1e-4, hot_start_iterations=5,
                                    hot_start_gap=0.05, max_iterations=100, workers=2),
                     **solver_changes)
    return ExperimentConfig(
        name='small',
        epidemic=small_params(),
        cost_model='queueing',
        deployment=DeploymentConstraints(total_budget=budget, tau=7, lag=1, planner_horizon=planner_horizon),
        uncertainty=UncertaintySet(pL=0.012, pU=0.013, pL_hat=0.0125, pU_hat=0.0135,
                                   change_window=(40, 44), N=solver.grid_start),
        queueing=small_queueing(),
        solver=solver,
        experiments=ExperimentSettings(
            out_of_sample=OutOfSampleSettings(p1=(0.013,), p2=(0.014,), days=(44, 60, 90)),
            budgets=(10.0, 30.0, 60.0),
            p_scan=PScanSettings(p_min=0.012, p_max=0.013, points=5),
        ),
        output_dir=os.path.join(ROOT, 'results', 'small'),
    )
