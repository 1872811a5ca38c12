"""
Convex piecewise-linear day costs

Both cost families reduce to a maximum of affine functions of the available
workforce on each day, which keeps the total cost of a deployment an LP value.
The queueing family is linearized directly in the workforce: each utilization
breakpoint rho_b maps to the tangent of g(K_t / omega) at omega = K_t / rho_b,
where K_t is the day's load.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple, Union

import numpy as np

from schema import QueueingCostSpec, ThresholdCostSpec

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class CostModelError(ValueError):
    """Raised for malformed cost functions or impossible operating points"""


@dataclass(frozen=True)
class PiecewiseLinearConvex:
    """max_i (slope_i * x + intercept_i)"""
    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        slopes = np.asarray(self.slopes, dtype=float).reshape(-1)
        intercepts = np.asarray(self.intercepts, dtype=float).reshape(-1)
        if slopes.shape != intercepts.shape:
            raise CostModelError("slopes and intercepts differ in length")
        object.__setattr__(self, 'slopes', slopes)
        object.__setattr__(self, 'intercepts', intercepts)

    @classmethod
    def from_pieces(cls, pieces: Iterable[Sequence[float]]) -> 'PiecewiseLinearConvex':
        pieces = [tuple(p) for p in pieces]
        return cls(np.array([p[0] for p in pieces], dtype=float),
                   np.array([p[1] for p in pieces], dtype=float))

    @property
    def pieces(self) -> List[Tuple[float, float]]:
        return [(float(s), float(k)) for s, k in zip(self.slopes, self.intercepts)]

    def __len__(self) -> int:
        return len(self.slopes)

    def __call__(self, x: ArrayLike) -> ArrayLike:
        return eval_pwl(self, x)[0]


def eval_pwl(f: PiecewiseLinearConvex, x: ArrayLike):
    """Value and active piece; ties go to the smallest index"""
    if len(f) == 0:
        raise CostModelError("empty piece list")
    values = np.multiply.outer(np.asarray(x, dtype=float), f.slopes) + f.intercepts
    active = np.argmax(values, axis=-1)
    value = np.take_along_axis(values, active[..., None], axis=-1)[..., 0]
    if np.ndim(x) == 0:
        return float(value), int(active)
    return value, active


def utilization(spec: QueueingCostSpec, workforce: ArrayLike, infectives: ArrayLike, base_workforce: float) -> ArrayLike:
    """Arrival rate over service capacity; servers scale with the available workforce"""
    workforce = np.asarray(workforce, dtype=float)
    if np.any(workforce <= 0):
        raise CostModelError("no servers")
    servers = spec.base_servers * workforce / base_workforce
    rho = (spec.zeta_bar + spec.delta_demand * np.asarray(infectives, dtype=float)) / (servers * spec.mu)
    return float(rho) if rho.ndim == 0 else rho


def exp_cost(rho: ArrayLike, exp_shift: float, rho_min: float) -> ArrayLike:
    """e^(rho - shift) shifted to vanish at rho_min"""
    return np.exp(np.asarray(rho, dtype=float) - exp_shift) - np.exp(rho_min - exp_shift)


def linearize_exp(exp_shift: float, breakpoints: Sequence[float]) -> PiecewiseLinearConvex:
    """Zero piece plus tangents of the shifted exponential at each breakpoint"""
    bp = np.asarray(breakpoints, dtype=float)
    if bp.size < 2:
        raise CostModelError("at least 2 breakpoints are needed")
    if np.any(np.diff(bp) <= 0):
        raise CostModelError("breakpoints must be strictly increasing")
    slopes = np.exp(bp - exp_shift)
    values = exp_cost(bp, exp_shift, bp[0])
    return PiecewiseLinearConvex(
        np.concatenate([[0.0], slopes]),
        np.concatenate([[0.0], values - slopes * bp]),
    )


# ─────────────────────────────────────────────────────────────────
# Day cost evaluators
# ─────────────────────────────────────────────────────────────────

class DayCostFn(ABC):
    """Maps (available workforce, group-1 infectives) to a day cost z_t"""

    kind: str = ''
    indicator_name: str = ''

    @abstractmethod
    def day_pieces(self, infectives: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """Slopes and intercepts in the workforce, shape infectives.shape + (L,)"""

    @abstractmethod
    def indicator(self, workforce: ArrayLike, infectives: ArrayLike) -> ArrayLike:
        """Operating indicator reported per day (utilization or workforce)"""

    @abstractmethod
    def is_critical(self, indicator: ArrayLike) -> ArrayLike:
        """Days counted as critical in scenario reports"""

    @property
    @abstractmethod
    def n_pieces(self) -> int:
        pass

    def evaluate(self, workforce: ArrayLike, infectives: ArrayLike):
        """Day cost and active piece (smallest index on ties)"""
        slopes, intercepts = self.day_pieces(infectives)
        workforce = np.asarray(workforce, dtype=float)
        values = slopes * workforce[..., None] + intercepts
        active = np.argmax(values, axis=-1)
        value = np.take_along_axis(values, active[..., None], axis=-1)[..., 0]
        return value, active

    def __call__(self, workforce: ArrayLike, infectives: ArrayLike) -> ArrayLike:
        value = self.evaluate(workforce, infectives)[0]
        return float(value) if np.ndim(value) == 0 else value


class ThresholdCost(DayCostFn):
    """Cost grows as the workforce falls below staffing thresholds; infectives are ignored"""

    kind = 'threshold'
    indicator_name = 'min_workforce'

    def __init__(self, spec: ThresholdCostSpec):
        self.pwl = PiecewiseLinearConvex.from_pieces(spec.pieces)
        if len(self.pwl) == 0:
            raise CostModelError("empty piece list")
        if np.any(self.pwl.slopes > 0):
            raise CostModelError("threshold cost slopes must be nonpositive")
        self.staffing_threshold = spec.staffing_threshold if spec.staffing_threshold is not None else self._zero_crossing()

    def _zero_crossing(self) -> float:
        crossings = [-k / s for s, k in self.pwl.pieces if s < 0]
        return max(crossings) if crossings else 0.0

    @property
    def n_pieces(self) -> int:
        return len(self.pwl)

    def day_pieces(self, infectives: ArrayLike):
        shape = np.shape(infectives) + (len(self.pwl),)
        return np.broadcast_to(self.pwl.slopes, shape), np.broadcast_to(self.pwl.intercepts, shape)

    def indicator(self, workforce, infectives):
        return workforce

    def is_critical(self, indicator):
        return np.asarray(indicator) < self.staffing_threshold


class QueueingCost(DayCostFn):
    """Exponential utilization cost, linearized in the workforce day by day"""

    kind = 'queueing'
    indicator_name = 'max_rho'

    def __init__(self, spec: QueueingCostSpec, base_workforce: float):
        if base_workforce <= 0:
            raise CostModelError("no servers")
        self.spec = spec
        self.base_workforce = float(base_workforce)
        self.rho_pwl = linearize_exp(spec.exp_shift, spec.breakpoints)
        self._bp = np.asarray(spec.breakpoints, dtype=float)
        self._tangent_slope = np.exp(self._bp - spec.exp_shift)
        self._tangent_value = exp_cost(self._bp, spec.exp_shift, self._bp[0])

    @property
    def n_pieces(self) -> int:
        return len(self._bp) + 1

    def load(self, infectives: ArrayLike) -> ArrayLike:
        """K_t such that utilization equals K_t / workforce"""
        demand = self.spec.zeta_bar + self.spec.delta_demand * np.asarray(infectives, dtype=float)
        return demand * self.spec.rho0 * self.base_workforce / self.spec.zeta_bar

    def day_pieces(self, infectives: ArrayLike):
        load = np.asarray(self.load(infectives))[..., None]
        bp = self._bp
        slopes = -self._tangent_slope * bp * bp / load
        intercepts = np.broadcast_to(self._tangent_value + self._tangent_slope * bp, slopes.shape)
        zeros = np.zeros(slopes.shape[:-1] + (1,))
        return np.concatenate([zeros, slopes], axis=-1), np.concatenate([zeros, intercepts], axis=-1)

    def indicator(self, workforce, infectives):
        return utilization(self.spec, workforce, infectives, self.base_workforce)

    def is_critical(self, indicator):
        return np.asarray(indicator) >= 1.0


def threshold_cost_fn(pieces: Union[ThresholdCostSpec, Iterable[Sequence[float]]]) -> ThresholdCost:
    spec = pieces if isinstance(pieces, ThresholdCostSpec) else ThresholdCostSpec(tuple(tuple(p) for p in pieces))
    return ThresholdCost(spec)


def queueing_cost_fn(spec: QueueingCostSpec, base_workforce: float) -> QueueingCost:
    return QueueingCost(spec, base_workforce)


def build_cost_fn(config) -> DayCostFn:
    """Day cost evaluator selected by an ExperimentConfig"""
    if config.cost_model == 'queueing':
        return queueing_cost_fn(config.queueing, config.epidemic.N2 - config.epidemic.I0_2)
    if config.cost_model == 'threshold':
        return threshold_cost_fn(config.threshold)
    raise CostModelError(f"unknown cost model {config.cost_model!r}")
