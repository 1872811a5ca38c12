"""
Domain records and validation for surge staffing experiments
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace, asdict
from typing import List, Optional, Dict, Any, Tuple
import logging
import math

import numpy as np

from config import AppConfig

logger = logging.getLogger(__name__)

INCIDENCE_FLOWS = ('exposure', 'onset')
COST_MODELS = ('queueing', 'threshold')
PRICING_RULES = ('bland', 'dantzig')


@dataclass(frozen=True)
class SeirParams:
    """Epidemiological constants for the general population (group 1) and the workforce (group 2)"""
    Lambda1: float            # base contact rate, group 1 (contacts/day)
    Lambda2: float            # base contact rate, group 2
    muE_inv: float            # latent period (days)
    muRR_inv: float           # infectious period (days)
    f: float                  # survival fraction
    theta: float              # social-distancing dampening multiplier
    N1: float
    N2: float
    I0_1: float
    I0_2: float
    declaration_threshold: float
    dampening_off_threshold: float
    horizon_T: int
    declaration_window: int = 1
    incidence_flow: str = 'exposure'

    @property
    def contact_rates(self) -> Tuple[float, float]:
        return (self.Lambda1, self.Lambda2)

    @property
    def populations(self) -> Tuple[float, float]:
        return (self.N1, self.N2)

    @property
    def muE(self) -> float:
        return 1.0 / self.muE_inv

    @property
    def muRR(self) -> float:
        return 1.0 / self.muRR_inv

    def initial_states(self) -> Tuple['GroupState', 'GroupState']:
        """Everyone susceptible except the seeded infectives"""
        return (
            GroupState(S=self.N1 - self.I0_1, E=0.0, I=self.I0_1, R=0.0),
            GroupState(S=self.N2 - self.I0_2, E=0.0, I=self.I0_2, R=0.0),
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SeirParams':
        return cls(**data)


@dataclass(frozen=True)
class GroupState:
    """Compartment sizes of one group; fields may hold floats or equally shaped arrays"""
    S: Any
    E: Any
    I: Any
    R: Any

    @property
    def total(self):
        return self.S + self.E + self.I + self.R

    @property
    def non_infective(self):
        return self.S + self.E + self.R


@dataclass(frozen=True, order=True)
class ContagionTuple:
    """Adversary's choice: contagion probability before and after absolute day d"""
    p1: float
    p2: float
    d: int

    def __post_init__(self):
        if not (0.0 < self.p1 < 1.0 and 0.0 < self.p2 < 1.0):
            raise ValueError(f"Contagion probabilities must lie in (0, 1), got ({self.p1}, {self.p2})")
        if int(self.d) != self.d or self.d < 1:
            raise ValueError(f"Change day must be a positive integer, got {self.d}")

    def p_at(self, day: int) -> float:
        """Contagion probability in force on absolute day `day`"""
        return self.p1 if day < self.d else self.p2

    def as_row(self) -> Dict[str, Any]:
        return {'p1': self.p1, 'p2': self.p2, 'd': int(self.d)}

    def __str__(self) -> str:
        return f"({self.p1:.6g}, {self.p2:.6g}, {int(self.d)})"


def default_breakpoints() -> Tuple[float, ...]:
    """12 utilization breakpoints spread evenly over [0.95, 1.10]"""
    return tuple(float(x) for x in np.linspace(0.95, 1.10, 12))


@dataclass(frozen=True)
class QueueingCostSpec:
    """Utilization-driven cost with epidemic demand surge"""
    zeta_bar: float           # baseline arrivals per day
    mu: float                 # services per server per day
    rho0: float               # occupancy at full staffing
    delta_demand: float       # extra arrivals per group-1 infective per day
    exp_shift: float = 0.95
    breakpoints: Tuple[float, ...] = field(default_factory=default_breakpoints)

    @property
    def base_servers(self) -> float:
        return self.zeta_bar / (self.rho0 * self.mu)


@dataclass(frozen=True)
class ThresholdCostSpec:
    """Convex piecewise-linear cost of the available workforce, pieces as (slope, intercept)"""
    pieces: Tuple[Tuple[float, float], ...]
    staffing_threshold: Optional[float] = None


@dataclass(frozen=True)
class DeploymentConstraints:
    """The feasible set of surge call-up vectors"""
    total_budget: float
    tau: int
    lag: int
    per_period_cap: Optional[float] = None
    planner_horizon: int = 150
    start_offset: int = 0

    @property
    def arrival_offset(self) -> int:
        """Days between a call-up and the first day of service"""
        return self.lag + self.start_offset

    @property
    def deployable_days(self) -> int:
        """Call-up days whose arrival still falls inside the planner window"""
        return max(0, self.planner_horizon - self.arrival_offset)


@dataclass(frozen=True)
class DeploymentVector:
    """Surge staff called up on each relative day after the declaration"""
    h: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.h, dtype=float).reshape(-1)
        values.setflags(write=False)
        object.__setattr__(self, 'h', values)

    @classmethod
    def zeros(cls, length: int) -> 'DeploymentVector':
        return cls(np.zeros(length))

    @property
    def total(self) -> float:
        return float(self.h.sum())

    def __len__(self) -> int:
        return len(self.h)

    def __eq__(self, other) -> bool:
        return isinstance(other, DeploymentVector) and np.array_equal(self.h, other.h)

    def __hash__(self) -> int:
        return hash(self.h.tobytes())

    def to_list(self) -> List[float]:
        return [float(x) for x in self.h]

    def structure(self) -> Dict[str, Any]:
        """First and last call-up day, number of call-up days and the mass center"""
        active = np.nonzero(self.h > 1e-9)[0]
        if len(active) == 0:
            return {'first_day': None, 'last_day': None, 'callup_days': 0, 'mass_center': None, 'total': 0.0}
        days = np.arange(1, len(self.h) + 1)
        return {
            'first_day': int(days[active[0]]),
            'last_day': int(days[active[-1]]),
            'callup_days': int(len(active)),
            'mass_center': float((days * self.h).sum() / self.h.sum()),
            'total': self.total,
        }


@dataclass(frozen=True)
class UncertaintySet:
    """Box of contagion probabilities before/after the change plus the change-day window"""
    pL: float
    pU: float
    pL_hat: float
    pU_hat: float
    change_window: Tuple[int, int]
    N: int = AppConfig.DEFAULT_GRID

    def __post_init__(self):
        errors = ConfigValidator.validate_uncertainty(self)
        if errors:
            raise ValueError('; '.join(errors))

    def with_grid(self, N: int) -> 'UncertaintySet':
        return replace(self, N=N)

    @property
    def change_days(self) -> List[int]:
        return list(range(self.change_window[0], self.change_window[1] + 1))

    def contains(self, t: ContagionTuple, tol: float = 1e-12) -> bool:
        """Membership in the continuous box, not just the grid"""
        return (self.pL - tol <= t.p1 <= self.pU + tol
                and self.pL_hat - tol <= t.p2 <= self.pU_hat + tol
                and self.change_window[0] <= t.d <= self.change_window[1])


@dataclass(frozen=True)
class SolverSettings:
    """Cutting-plane controls"""
    grid_start: int = AppConfig.DEFAULT_GRID
    grid_max: int = AppConfig.DEFAULT_GRID
    tolerance: float = AppConfig.DEFAULT_TOLERANCE
    hot_start_iterations: int = AppConfig.DEFAULT_HOT_START_ITERATIONS
    hot_start_gap: float = AppConfig.DEFAULT_HOT_START_GAP
    max_iterations: int = AppConfig.DEFAULT_MAX_ITERATIONS
    workers: int = AppConfig.WORKERS
    pricing: str = AppConfig.DEFAULT_PRICING
    report_timings: bool = False
    verify_cuts: int = 0


@dataclass(frozen=True)
class OutOfSampleSettings:
    p1: Tuple[float, ...] = ()
    p2: Tuple[float, ...] = ()
    days: Tuple[int, ...] = ()


@dataclass(frozen=True)
class PScanSettings:
    p_min: float = 0.0115
    p_max: float = 0.0125
    points: int = 11


@dataclass(frozen=True)
class ExperimentSettings:
    """Inputs for the out-of-sample, cost-benefit and p-scan studies"""
    out_of_sample: OutOfSampleSettings = field(default_factory=OutOfSampleSettings)
    budgets: Tuple[float, ...] = ()
    p_scan: PScanSettings = field(default_factory=PScanSettings)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs, validated before use"""
    name: str
    epidemic: SeirParams
    cost_model: str
    deployment: DeploymentConstraints
    uncertainty: UncertaintySet
    queueing: Optional[QueueingCostSpec] = None
    threshold: Optional[ThresholdCostSpec] = None
    solver: SolverSettings = field(default_factory=SolverSettings)
    experiments: ExperimentSettings = field(default_factory=ExperimentSettings)
    output_dir: str = AppConfig.OUTPUT_DIR

    def with_budget(self, budget: float) -> 'ExperimentConfig':
        return replace(self, deployment=replace(self.deployment, total_budget=float(budget)))

    def with_uncertainty(self, uncertainty: UncertaintySet) -> 'ExperimentConfig':
        return replace(self, uncertainty=uncertainty)

    def with_solver(self, **changes) -> 'ExperimentConfig':
        return replace(self, solver=replace(self.solver, **changes))


class ConfigValidator:
    """Semantic validation of experiment records; every check returns a list of error messages"""

    @staticmethod
    def _positive(name: str, value, errors: List[str]):
        if value is None or not math.isfinite(value) or value <= 0:
            errors.append(f"{name} must be strictly positive, got {value}")

    @staticmethod
    def validate_seir_params(params: SeirParams) -> List[str]:
        errors: List[str] = []
        for name in ('Lambda1', 'Lambda2', 'muE_inv', 'muRR_inv'):
            ConfigValidator._positive(f"epidemic.{name}", getattr(params, name), errors)
        if not 0.0 <= params.f <= 1.0:
            errors.append(f"epidemic.f must lie in [0, 1], got {params.f}")
        if not 0.0 < params.theta <= 1.0:
            errors.append(f"epidemic.theta must lie in (0, 1], got {params.theta}")
        if params.N1 <= 0:
            errors.append(f"epidemic.N1 must be positive, got {params.N1}")
        if params.N2 < 0:
            errors.append(f"epidemic.N2 must be nonnegative, got {params.N2}")
        for j, (i0, n) in enumerate(((params.I0_1, params.N1), (params.I0_2, params.N2)), start=1):
            if i0 < 0 or i0 > n:
                errors.append(f"epidemic.I0_{j} must lie in [0, N{j}], got {i0}")
        if not 0.0 < params.declaration_threshold < 1.0:
            errors.append(f"epidemic.declaration_threshold must lie in (0, 1), got {params.declaration_threshold}")
        if int(params.declaration_window) != params.declaration_window or params.declaration_window < 1:
            errors.append(f"epidemic.declaration_window must be a positive integer, got {params.declaration_window}")
        if params.incidence_flow not in INCIDENCE_FLOWS:
            errors.append(f"epidemic.incidence_flow must be one of {INCIDENCE_FLOWS}, got {params.incidence_flow!r}")
        if int(params.horizon_T) != params.horizon_T or params.horizon_T < 1:
            errors.append(f"epidemic.horizon_T must be a positive integer, got {params.horizon_T}")
        return errors

    @staticmethod
    def validate_queueing(spec: QueueingCostSpec) -> List[str]:
        errors: List[str] = []
        ConfigValidator._positive('cost.queueing.zeta_bar', spec.zeta_bar, errors)
        ConfigValidator._positive('cost.queueing.mu', spec.mu, errors)
        if not 0.0 < spec.rho0 < 1.0:
            errors.append(f"cost.queueing.rho0 must lie in (0, 1), got {spec.rho0}")
        if spec.delta_demand < 0:
            errors.append(f"cost.queueing.delta_demand must be nonnegative, got {spec.delta_demand}")
        bp = list(spec.breakpoints)
        if len(bp) < 2:
            errors.append("cost.queueing.breakpoints needs at least 2 values")
        elif any(b >= a for a, b in zip(bp[1:], bp[:-1])) or any(b <= 0 for b in bp):
            errors.append("cost.queueing.breakpoints must be positive and strictly increasing")
        return errors

    @staticmethod
    def validate_threshold(spec: ThresholdCostSpec) -> List[str]:
        errors: List[str] = []
        pieces = list(spec.pieces)
        if not pieces:
            return ["cost.threshold.pieces must not be empty"]
        if tuple(pieces[0]) != (0.0, 0.0):
            errors.append("cost.threshold.pieces must start with the zero piece [0, 0]")
        slopes = [s for s, _ in pieces]
        intercepts = [k for _, k in pieces]
        if any(b >= a for a, b in zip(slopes, slopes[1:])):
            errors.append("cost.threshold.pieces slopes must be strictly decreasing from 0")
        if any(b <= a for a, b in zip(intercepts, intercepts[1:])):
            errors.append("cost.threshold.pieces intercepts must be strictly increasing from 0")
        if spec.staffing_threshold is not None and spec.staffing_threshold <= 0:
            errors.append(f"cost.threshold.staffing_threshold must be positive, got {spec.staffing_threshold}")
        return errors

    @staticmethod
    def validate_deployment(constraints: DeploymentConstraints) -> List[str]:
        errors: List[str] = []
        if constraints.total_budget < 0:
            errors.append(f"deployment.total_budget must be nonnegative, got {constraints.total_budget}")
        if constraints.tau < 1:
            errors.append(f"deployment.tau must be at least 1, got {constraints.tau}")
        if constraints.lag < 0:
            errors.append(f"deployment.lag must be nonnegative, got {constraints.lag}")
        if constraints.start_offset < 0:
            errors.append(f"deployment.start_offset must be nonnegative, got {constraints.start_offset}")
        if constraints.planner_horizon < 1:
            errors.append(f"deployment.planner_horizon must be at least 1, got {constraints.planner_horizon}")
        if constraints.per_period_cap is not None and constraints.per_period_cap < 0:
            errors.append(f"deployment.per_period_cap must be nonnegative, got {constraints.per_period_cap}")
        return errors

    @staticmethod
    def validate_uncertainty(u: UncertaintySet) -> List[str]:
        errors: List[str] = []
        for name in ('pL', 'pU', 'pL_hat', 'pU_hat'):
            value = getattr(u, name)
            if not 0.0 < value < 1.0:
                errors.append(f"uncertainty.{name} must lie in (0, 1), got {value}")
        if u.pL > u.pU:
            errors.append(f"uncertainty.initial_interval is reversed: [{u.pL}, {u.pU}]")
        if u.pL_hat > u.pU_hat:
            errors.append(f"uncertainty.later_interval is reversed: [{u.pL_hat}, {u.pU_hat}]")
        lo, hi = u.change_window
        if lo < 1 or hi < lo:
            errors.append(f"uncertainty.change_window must be a nonempty range of days >= 1, got [{lo}, {hi}]")
        if int(u.N) != u.N or u.N < 1:
            errors.append(f"uncertainty grid N must be a positive integer, got {u.N}")
        return errors

    @staticmethod
    def validate_solver(s: SolverSettings) -> List[str]:
        errors: List[str] = []
        if s.grid_start < 1:
            errors.append(f"solver.grid_start must be at least 1, got {s.grid_start}")
        if s.grid_max < s.grid_start:
            errors.append(f"solver.grid_max ({s.grid_max}) is below solver.grid_start ({s.grid_start})")
        if s.tolerance <= 0:
            errors.append(f"solver.tolerance must be positive, got {s.tolerance}")
        if s.hot_start_iterations < 0:
            errors.append(f"solver.hot_start_iterations must be nonnegative, got {s.hot_start_iterations}")
        if s.hot_start_gap <= 0:
            errors.append(f"solver.hot_start_gap must be positive, got {s.hot_start_gap}")
        if s.max_iterations < 1:
            errors.append(f"solver.max_iterations must be at least 1, got {s.max_iterations}")
        if s.workers < 1:
            errors.append(f"solver.workers must be at least 1, got {s.workers}")
        if s.pricing not in PRICING_RULES:
            errors.append(f"solver.pricing must be one of {PRICING_RULES}, got {s.pricing!r}")
        if s.verify_cuts < 0:
            errors.append(f"solver.verify_cuts must be nonnegative, got {s.verify_cuts}")
        return errors

    @staticmethod
    def validate_experiment(config: ExperimentConfig) -> List[str]:
        """All problems of a fully built config"""
        errors = ConfigValidator.validate_seir_params(config.epidemic)
        if config.cost_model not in COST_MODELS:
            errors.append(f"cost.model must be one of {COST_MODELS}, got {config.cost_model!r}")
        elif config.cost_model == 'queueing':
            if config.queueing is None:
                errors.append("cost.queueing section is required for the queueing model")
            else:
                errors.extend(ConfigValidator.validate_queueing(config.queueing))
            if config.epidemic.N2 <= 0:
                errors.append("the queueing model needs a regular workforce (epidemic.N2 > 0)")
        else:
            if config.threshold is None:
                errors.append("cost.threshold section is required for the threshold model")
            else:
                errors.extend(ConfigValidator.validate_threshold(config.threshold))
        errors.extend(ConfigValidator.validate_deployment(config.deployment))
        errors.extend(ConfigValidator.validate_solver(config.solver))
        if config.uncertainty.change_window[1] > config.epidemic.horizon_T:
            errors.append(
                f"uncertainty.change_window ends on day {config.uncertainty.change_window[1]} "
                f"after the simulation horizon {config.epidemic.horizon_T}"
            )
        budgets = list(config.experiments.budgets)
        if any(b <= 0 for b in budgets):
            errors.append("experiments.cost_benefit.budgets must be positive")
        if budgets != sorted(budgets):
            errors.append("experiments.cost_benefit.budgets must be sorted")
        scan = config.experiments.p_scan
        if not 0.0 < scan.p_min <= scan.p_max < 1.0 or scan.points < 1:
            errors.append("experiments.p_scan needs 0 < p_min <= p_max < 1 and points >= 1")
        for day in config.experiments.out_of_sample.days:
            if not 1 <= day <= config.epidemic.horizon_T:
                errors.append(f"experiments.out_of_sample day {day} is outside [1, {config.epidemic.horizon_T}]")
        for p in list(config.experiments.out_of_sample.p1) + list(config.experiments.out_of_sample.p2):
            if not 0.0 < p < 1.0:
                errors.append(f"experiments.out_of_sample probability {p} is outside (0, 1)")
        for e in errors:
            logger.warning(f"Config validation: {e}")
        return errors
