"""
Scenario metrics for the surge staffing planner
===============================================

Operating indicators of a deployment under one contagion tuple: total cost,
the extreme daily indicator (peak utilization for queueing costs, lowest
workforce for threshold costs) and the number of critical days.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, asdict
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np

from core.costs import DayCostFn
from core.staffing import ScenarioBlock

logger = logging.getLogger(__name__)

# ─────────────────────────────────────────────────────────────────
# Policy labels
# ─────────────────────────────────────────────────────────────────


class PolicyName(str, Enum):
    NO_INTERVENTION = "no_intervention"
    ROBUST = "robust"
    NAIVE = "naive"
    ROBUST_INTEGRAL = "robust_integral"


class ScenarioRole(str, Enum):
    NO_ACTION_WORST = "no_action_worst"
    NAIVE_WORST = "naive_worst"
    ROBUST_WORST = "robust_worst"
    OUT_OF_SAMPLE = "out_of_sample"
    P_SCAN = "p_scan"


# ─────────────────────────────────────────────────────────────────
# Per-scenario metrics
# ─────────────────────────────────────────────────────────────────


@dataclass(frozen=True)
class ScenarioMetrics:
    policy: str
    p1: float
    p2: float
    d: int
    declaration_day: Optional[int]
    cost: float
    indicator_name: str
    indicator: Optional[float]
    critical_days: int

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def daily_series(block: ScenarioBlock, h, cost_fn: DayCostFn) -> Dict[str, List[float]]:
    """Workforce, indicator and cost per planner day inside the valid window"""
    z, _, omega = block.day_costs(h)
    valid = block.valid
    indicator = cost_fn.indicator(omega[valid], block.infectives[valid])
    return {
        'relative_day': [int(d) + 1 for d in np.nonzero(valid)[0]],
        'workforce': [float(x) for x in omega[valid]],
        'indicator': [float(x) for x in np.atleast_1d(indicator)],
        'cost': [float(x) for x in z[valid]],
    }


def scenario_metrics(block: ScenarioBlock, h, cost_fn: DayCostFn, policy: str) -> ScenarioMetrics:
    z, _, omega = block.day_costs(h)
    valid = block.valid
    t = block.contagion
    if valid.any():
        indicator = np.atleast_1d(cost_fn.indicator(omega[valid], block.infectives[valid]))
        extreme = float(indicator.max() if cost_fn.indicator_name == 'max_rho' else indicator.min())
        critical = int(np.count_nonzero(cost_fn.is_critical(indicator)))
    else:
        extreme, critical = None, 0
    return ScenarioMetrics(
        policy=str(policy.value if isinstance(policy, Enum) else policy),
        p1=t.p1, p2=t.p2, d=int(t.d),
        declaration_day=block.declaration_day,
        cost=float(z.sum()),
        indicator_name=cost_fn.indicator_name,
        indicator=extreme,
        critical_days=critical,
    )
