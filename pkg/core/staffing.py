"""
Surge-staff cohorts, the affine workforce map and cost evaluation of a deployment

Surge staff do not change the epidemic, so one trajectory fixes everything
except h, and the available workforce on each planner day is affine in h.
The map is stored as a band: column s only touches the tau days starting at
its arrival day, with weight equal to the share of the unit cohort still
susceptible or exposed.

Planner days are 0-based in this module: index r is relative day r + 1, the
declaration day being relative day 1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from config import AppConfig
from core.costs import DayCostFn
from core.epidemic import Trajectory, TrajectoryBatch, simulate
from core.simplex import LinearProgram
from schema import ContagionTuple, DeploymentConstraints, DeploymentVector, SeirParams

logger = logging.getLogger(__name__)


class InfeasibleDeploymentError(ValueError):
    """Raised when a call-up vector violates the deployment constraints"""


# ─────────────────────────────────────────────────────────────────
# Planner window
# ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PlannerWindow:
    """Trajectory quantities seen by the planner, one entry per relative day"""
    declaration_day: Optional[int]
    regular: np.ndarray       # S2 + E2 + R2
    survival: np.ndarray      # exp(-lambda2 * beta * p), one day of surge attrition
    infectives: np.ndarray    # I1
    valid: np.ndarray         # inside the simulated horizon and after a declaration
    latent_stay: float        # exp(-muE)

    @property
    def n_days(self) -> int:
        return len(self.regular)


def _gather_windows(regular, force, infectives, declared, n_days: int):
    """Shift absolute-day arrays (T, M) onto each tuple's relative timeline (M, n_days)"""
    T = regular.shape[0]
    start = np.maximum(declared - 1, 0)
    index = start[:, None] + np.arange(n_days)[None, :]
    valid = (declared[:, None] > 0) & (index < T)
    index = np.minimum(index, T - 1)
    take = lambda a: np.take_along_axis(a.T, index, axis=1)
    survival = np.where(valid, np.exp(-take(force)), 1.0)
    return take(regular), survival, np.where(valid, take(infectives), 0.0), valid


def batch_windows(batch: TrajectoryBatch, constraints: DeploymentConstraints):
    """Relative-day arrays for every tuple of a batch, each of shape (M, planner_horizon)"""
    regular = batch.S[:, 1] + batch.E[:, 1] + batch.R[:, 1]
    force = batch.rates[:, 1] * batch.beta * batch.p
    return _gather_windows(regular, force, batch.I[:, 0], batch.declaration_days,
                           constraints.planner_horizon)


def planner_window(trajectory: Trajectory, constraints: DeploymentConstraints) -> PlannerWindow:
    regular = (trajectory.S[:, 1] + trajectory.E[:, 1] + trajectory.R[:, 1])[:, None]
    force = (trajectory.rates[:, 1] * trajectory.beta * trajectory.p)[:, None]
    declared = np.array([trajectory.declaration_day or 0])
    c, q, infectives, valid = _gather_windows(regular, force, trajectory.I[:, 0][:, None],
                                              declared, constraints.planner_horizon)
    return PlannerWindow(
        declaration_day=trajectory.declaration_day,
        regular=c[0], survival=q[0], infectives=infectives[0], valid=valid[0],
        latent_stay=float(np.exp(-trajectory.params.muE)),
    )


# ─────────────────────────────────────────────────────────────────
# Banded affine map
# ─────────────────────────────────────────────────────────────────

def band_weights(survival: np.ndarray, offset: int, tau: int, latent_stay: float) -> np.ndarray:
    """Availability of a unit cohort by call-up day and age, shape survival.shape[:-1] + (n, tau)"""
    n = survival.shape[-1]
    padded = np.concatenate([survival, np.ones(survival.shape[:-1] + (offset + tau,))], axis=-1)
    calls = np.arange(n)
    out = np.zeros(survival.shape[:-1] + (n, tau))
    susceptible = np.ones(survival.shape[:-1] + (n,))
    exposed = np.zeros_like(susceptible)
    for k in range(tau):
        if k > 0:
            q = padded[..., calls + offset + k - 1]
            susceptible, exposed = q * susceptible, (1.0 - q) * susceptible + latent_stay * exposed
        inside = calls + offset + k < n
        out[..., :, k] = np.where(inside, susceptible + exposed, 0.0)
    return out


def apply_band(band: np.ndarray, h: np.ndarray, offset: int) -> np.ndarray:
    """Surge availability per day, band (..., n, tau) times h (n,)"""
    n, tau = band.shape[-2:]
    out = np.zeros(band.shape[:-2] + (n,))
    calls = np.arange(n)
    for k in range(tau):
        days = calls + offset + k
        inside = days < n
        out[..., days[inside]] += band[..., inside, k] * h[inside]
    return out


def adjoint_band(band: np.ndarray, weights: np.ndarray, offset: int) -> np.ndarray:
    """Transpose of apply_band: g_s = sum_t weights_t * A_{t,s}"""
    n, tau = band.shape[-2:]
    out = np.zeros(band.shape[:-2] + (n,))
    calls = np.arange(n)
    for k in range(tau):
        days = calls + offset + k
        inside = days < n
        out[..., inside] += band[..., inside, k] * weights[..., days[inside]]
    return out


@dataclass(frozen=True)
class AffineWorkforce:
    """omega(h) = constant + A h with A stored as a band"""
    constant: np.ndarray      # (T,)
    band: np.ndarray          # (T, tau)
    offset: int

    @property
    def n_days(self) -> int:
        return len(self.constant)

    def surge(self, h: np.ndarray) -> np.ndarray:
        return apply_band(self.band, np.asarray(h, dtype=float), self.offset)

    def workforce(self, h: np.ndarray) -> np.ndarray:
        return self.constant + self.surge(h)

    def adjoint(self, weights: np.ndarray) -> np.ndarray:
        return adjoint_band(self.band, np.asarray(weights, dtype=float), self.offset)

    def matrix(self) -> np.ndarray:
        """Dense (T, T) coefficient matrix"""
        n, tau = self.band.shape
        A = np.zeros((n, n))
        calls = np.arange(n)
        for k in range(tau):
            days = calls + self.offset + k
            inside = days < n
            A[days[inside], calls[inside]] = self.band[inside, k]
        return A


def affine_workforce(trajectory: Trajectory, constraints: DeploymentConstraints) -> AffineWorkforce:
    window = planner_window(trajectory, constraints)
    return _affine_from_window(window, constraints)


def _affine_from_window(window: PlannerWindow, constraints: DeploymentConstraints) -> AffineWorkforce:
    band = band_weights(window.survival, constraints.arrival_offset, constraints.tau, window.latent_stay)
    return AffineWorkforce(constant=window.regular, band=band, offset=constraints.arrival_offset)


def surge_cohort_propagate(trajectory: Trajectory, constraints: DeploymentConstraints, h) -> Tuple[np.ndarray, np.ndarray]:
    """Day-by-day surge cohorts; column j holds cohorts of age j + 1

    S3[t, 0] is the call-up arriving on day t; each day a susceptible cohort keeps
    a survival share and loses the rest to the exposed cohort, which in turn
    leaves at the latent rate. Cohorts older than tau days are dropped.
    """
    window = planner_window(trajectory, constraints)
    h = np.asarray(h, dtype=float)
    n = window.n_days
    if len(h) < n:
        raise InfeasibleDeploymentError(f"deployment vector covers {len(h)} days, the planner window has {n}")
    tau = constraints.tau
    offset = constraints.arrival_offset
    S3 = np.zeros((n, tau))
    E3 = np.zeros((n, tau))
    for t in range(n):
        if 0 <= t - offset < n:
            S3[t, 0] = h[t - offset]
        if t == 0:
            continue
        q = window.survival[t - 1]
        S3[t, 1:] = q * S3[t - 1, :-1]
        E3[t, 1:] = (1.0 - q) * S3[t - 1, :-1] + window.latent_stay * E3[t - 1, :-1]
    return S3, E3


# ─────────────────────────────────────────────────────────────────
# Deployment feasibility
# ─────────────────────────────────────────────────────────────────

def deployment_violations(h, constraints: DeploymentConstraints) -> List[str]:
    """Every violated constraint of H, empty when h is feasible"""
    h = np.asarray(h, dtype=float)
    errors: List[str] = []
    if h.ndim != 1 or len(h) != constraints.planner_horizon:
        errors.append(f"deployment vector must have length {constraints.planner_horizon}, got shape {h.shape}")
        return errors
    if not np.all(np.isfinite(h)):
        errors.append("deployment vector contains non-finite entries")
        return errors
    tol = AppConfig.FEASIBILITY_TOL
    negative = np.nonzero(h < -tol)[0]
    if len(negative):
        errors.append(f"negative call-up on relative days {[int(i) + 1 for i in negative[:10]]}")
    total = float(h.sum())
    if total > constraints.total_budget + tol * max(1.0, constraints.total_budget):
        errors.append(f"total call-up {total:.6g} exceeds the budget {constraints.total_budget:.6g}")
    if constraints.per_period_cap is not None:
        over = np.nonzero(h > constraints.per_period_cap + tol)[0]
        if len(over):
            errors.append(f"call-up above the per-day cap {constraints.per_period_cap:.6g} on relative days "
                          f"{[int(i) + 1 for i in over[:10]]}")
    return errors


def check_deployment(h, constraints: DeploymentConstraints) -> np.ndarray:
    errors = deployment_violations(h, constraints)
    if errors:
        raise InfeasibleDeploymentError('; '.join(errors))
    return np.asarray(h, dtype=float)


def _as_array(h) -> np.ndarray:
    return h.h if isinstance(h, DeploymentVector) else np.asarray(h, dtype=float)


# ─────────────────────────────────────────────────────────────────
# Scenario blocks, costs and cuts
# ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Cut:
    """V(h|p) >= g.h + b for every h, tight at the generation point"""
    g: np.ndarray
    b: float
    source_tuple: ContagionTuple
    value: float
    point: np.ndarray

    def __call__(self, h) -> float:
        return float(self.g @ _as_array(h) + self.b)


@dataclass(frozen=True)
class ScenarioBlock:
    """Everything needed to price deployments against one contagion tuple"""
    contagion: ContagionTuple
    declaration_day: Optional[int]
    workforce: AffineWorkforce
    infectives: np.ndarray
    slopes: np.ndarray        # (T, L), zero outside the valid window
    intercepts: np.ndarray
    valid: np.ndarray
    survival: np.ndarray
    latent_stay: float

    def day_costs(self, h) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-day cost, active piece and workforce"""
        omega = self.workforce.workforce(_as_array(h))
        values = self.slopes * omega[:, None] + self.intercepts
        active = np.argmax(values, axis=1)
        return values[np.arange(len(omega)), active], active, omega

    def value(self, h) -> float:
        return float(self.day_costs(h)[0].sum())

    def base_costs(self) -> np.ndarray:
        """Day costs with no surge staff, an upper bound on every day cost for h >= 0"""
        values = self.slopes * self.workforce.constant[:, None] + self.intercepts
        return values.max(axis=1)

    def cut(self, h) -> Cut:
        h = _as_array(h)
        z, active, _ = self.day_costs(h)
        sigma = self.slopes[np.arange(len(z)), active]
        g = self.workforce.adjoint(sigma)
        value = float(z.sum())
        return Cut(g=g, b=value - float(g @ h), source_tuple=self.contagion, value=value, point=h.copy())


def block_from_arrays(contagion: ContagionTuple, declaration_day: Optional[int], regular, survival,
                      infectives, valid, latent_stay: float, cost_fn: DayCostFn,
                      constraints: DeploymentConstraints) -> ScenarioBlock:
    window = PlannerWindow(declaration_day, regular, survival, infectives, valid, latent_stay)
    workforce = _affine_from_window(window, constraints)
    slopes, intercepts = cost_fn.day_pieces(infectives)
    slopes = np.where(valid[:, None], slopes, 0.0)
    intercepts = np.where(valid[:, None], intercepts, 0.0)
    return ScenarioBlock(contagion, declaration_day, workforce, np.asarray(infectives), slopes, intercepts,
                         np.asarray(valid), np.asarray(survival), float(latent_stay))


def scenario_block(trajectory: Trajectory, constraints: DeploymentConstraints, cost_fn: DayCostFn) -> ScenarioBlock:
    window = planner_window(trajectory, constraints)
    return block_from_arrays(trajectory.contagion, window.declaration_day, window.regular, window.survival,
                             window.infectives, window.valid, window.latent_stay, cost_fn, constraints)


def evaluate_cost(h, contagion: ContagionTuple, cost_fn: DayCostFn, params: SeirParams,
                  constraints: DeploymentConstraints) -> float:
    """V(h|p): total planner-window cost of deployment h under one contagion tuple"""
    h = check_deployment(_as_array(h), constraints)
    return scenario_block(simulate(params, contagion), constraints, cost_fn).value(h)


def subgradient_cut(h, contagion: ContagionTuple, cost_fn: DayCostFn, params: SeirParams,
                    constraints: DeploymentConstraints) -> Cut:
    """Adjoint subgradient of V(.|p) at h and the matching intercept"""
    h = check_deployment(_as_array(h), constraints)
    return scenario_block(simulate(params, contagion), constraints, cost_fn).cut(h)


# ─────────────────────────────────────────────────────────────────
# Explicit cohort LP
# ─────────────────────────────────────────────────────────────────

def build_value_lp(block: ScenarioBlock, h) -> LinearProgram:
    """The cohort-level LP whose optimum is V(h|p)

    Variables, in order: susceptible and exposed surge cohorts for each
    (call-up day, age) that falls inside the window, then omega_t, then z_t.
    h enters only through the arrival equalities.
    """
    h = _as_array(h)
    wf = block.workforce
    n = wf.n_days
    tau = wf.band.shape[1]
    offset = wf.offset
    window_survival = block.survival
    latent_stay = block.latent_stay

    cells = [(s, k) for s in range(n) for k in range(tau) if s + offset + k < n]
    index = {cell: i for i, cell in enumerate(cells)}
    n_cells = len(cells)
    sus = lambda cell: index[cell]
    exp_ = lambda cell: n_cells + index[cell]
    omega = lambda t: 2 * n_cells + t
    z = lambda t: 2 * n_cells + n + t
    n_vars = 2 * n_cells + 2 * n

    eq_rows, eq_rhs = [], []

    def row():
        return np.zeros(n_vars)

    for (s, k) in cells:
        r = row()
        r[sus((s, k))] = 1.0
        if k == 0:
            eq_rows.append(r)
            eq_rhs.append(h[s])
            r = row()
            r[exp_((s, k))] = 1.0
            eq_rows.append(r)
            eq_rhs.append(0.0)
            continue
        q = window_survival[s + offset + k - 1]
        r[sus((s, k - 1))] = -q
        eq_rows.append(r)
        eq_rhs.append(0.0)
        r = row()
        r[exp_((s, k))] = 1.0
        r[sus((s, k - 1))] = -(1.0 - q)
        r[exp_((s, k - 1))] = -latent_stay
        eq_rows.append(r)
        eq_rhs.append(0.0)

    for t in range(n):
        r = row()
        r[omega(t)] = 1.0
        for (s, k) in cells:
            if s + offset + k == t:
                r[sus((s, k))] -= 1.0
                r[exp_((s, k))] -= 1.0
        eq_rows.append(r)
        eq_rhs.append(wf.constant[t])

    ge_rows, ge_rhs = [], []
    for t in range(n):
        for sigma, kappa in zip(block.slopes[t], block.intercepts[t]):
            r = row()
            r[z(t)] = 1.0
            r[omega(t)] = -sigma
            ge_rows.append(r)
            ge_rhs.append(kappa)

    c = np.zeros(n_vars)
    c[2 * n_cells + n:] = 1.0
    return LinearProgram(c=c, A_eq=np.array(eq_rows), b_eq=np.array(eq_rhs),
                         A_ge=np.array(ge_rows), b_ge=np.array(ge_rhs))

