"""Integral call-ups from an LP-relaxed deployment"""

import logging

import numpy as np

from schema import DeploymentConstraints

logger = logging.getLogger(__name__)


def round_deployment(h, constraints: DeploymentConstraints) -> np.ndarray:
    """Floor every day, then hand the remaining staff to the largest fractional parts

    The total is the rounded relaxed total, never above the budget; per-day caps
    are respected and ties go to the earlier day.
    """
    h = np.clip(np.asarray(h, dtype=float), 0.0, None)
    floor = np.floor(h + 1e-9)
    remainders = np.clip(h - floor, 0.0, None)
    target = min(int(np.floor(constraints.total_budget + 1e-9)), int(round(h.sum())))
    extra = target - int(floor.sum())
    if extra <= 0:
        return floor
    order = np.lexsort((np.arange(len(h)), -remainders))
    for i in order:
        if extra == 0 or remainders[i] <= 0:
            break
        if constraints.per_period_cap is not None and floor[i] + 1 > constraints.per_period_cap + 1e-9:
            continue
        floor[i] += 1
        extra -= 1
    if extra:
        logger.warning(f"Rounding left {extra} staff unassigned under the per-day cap")
    return floor
