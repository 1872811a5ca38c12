"""
Two-group discrete-time SEIR dynamics with nonhomogeneous mixing

Group 1 is the general population, group 2 the regular workforce. Compartments
are real-valued; every function here is pure and works on floats or on arrays
whose trailing axis enumerates contagion tuples.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import AppConfig
from schema import ContagionTuple, GroupState, SeirParams

logger = logging.getLogger(__name__)


class DegeneratePopulationError(ValueError):
    """Raised when a contact probability or rate has no population to mix in"""


# ─────────────────────────────────────────────────────────────────
# Mixing
# ─────────────────────────────────────────────────────────────────

def contact_probability(states: Tuple[GroupState, GroupState], rates: Tuple[Any, Any]):
    """Probability that a random contact is with an infective, shared by both groups"""
    g1, g2 = states
    l1, l2 = rates
    denominator = l1 * g1.total + l2 * g2.total
    if np.any(np.asarray(denominator) <= 0):
        raise DegeneratePopulationError("degenerate population")
    return (l1 * g1.I + l2 * g2.I) / denominator


def effective_contact_rate(params: SeirParams, group: int, state: GroupState, dampening_active=False):
    """Base contact rate scaled by the non-infective share of the group, and by theta while dampened"""
    if group not in (1, 2):
        raise ValueError(f"group must be 1 or 2, got {group}")
    population = state.total
    if np.any(np.asarray(population) <= 0):
        raise DegeneratePopulationError("degenerate population")
    base = params.Lambda1 if group == 1 else params.Lambda2
    rate = base * state.non_infective / population
    return np.where(dampening_active, rate * params.theta, rate) if np.ndim(dampening_active) else (
        rate * params.theta if dampening_active else rate)


def _mixing(states, params: SeirParams, dampening_active):
    """Effective rates and beta; an empty group mixes with rate 0"""
    rates = []
    for j, state in enumerate(states, start=1):
        population = state.total
        base = params.Lambda1 if j == 1 else params.Lambda2
        share = np.divide(state.non_infective, population,
                          out=np.zeros_like(np.asarray(population, dtype=float)),
                          where=np.asarray(population) > 0)
        rates.append(base * share * np.where(dampening_active, params.theta, 1.0))
    beta = contact_probability(states, tuple(rates))
    return tuple(rates), beta


def _advance(states, params: SeirParams, p_t, dampening_active):
    """One synchronous update; returns new states, rates, beta, S->E flow and E->I flow"""
    rates, beta = _mixing(states, params, dampening_active)
    stay_latent = np.exp(-params.muE)
    stay_infectious = np.exp(-params.muRR)
    new_states = []
    exposures = 0.0
    onsets = 0.0
    for state, rate in zip(states, rates):
        escape = np.exp(-rate * beta * p_t)
        exposed = state.S * (1.0 - escape)
        onset = state.E * (1.0 - stay_latent)
        new_states.append(GroupState(
            S=state.S * escape,
            E=state.E * stay_latent + exposed,
            I=state.I * params.f * stay_infectious + onset,
            R=state.R + state.I * (1.0 - stay_infectious),
        ))
        exposures = exposures + exposed
        onsets = onsets + onset
    return tuple(new_states), rates, beta, exposures, onsets


def step(states: Tuple[GroupState, GroupState], params: SeirParams, p_t, dampening_active=False) -> Tuple[GroupState, GroupState]:
    """Advance both groups one day"""
    return _advance(states, params, p_t, dampening_active)[0]


def basic_reproduction_number(params: SeirParams, p: float) -> float:
    """Two-group R0; equals Lambda * p * infectious period when both contact rates agree"""
    l1, l2 = params.contact_rates
    n1, n2 = params.populations
    mixing = (l1 * l1 * n1 + l2 * l2 * n2) / (l1 * n1 + l2 * n2)
    return mixing * p * params.muRR_inv


def reproduction_range(params: SeirParams, intervals: Iterable[Tuple[float, float]]) -> Tuple[float, float]:
    """R0 at the ends of the union of the given probability intervals"""
    intervals = list(intervals)
    lo = min(a for a, _ in intervals)
    hi = max(b for _, b in intervals)
    return basic_reproduction_number(params, lo), basic_reproduction_number(params, hi)


# ─────────────────────────────────────────────────────────────────
# Trajectories
# ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Trajectory:
    """Daily record of one run; index t-1 holds absolute day t

    Compartments are the state at the start of the day. Rates, beta and p are
    the ones used for that day's update. Exposures and onsets are the flows
    that arrived on that day (zero on day 1).
    """
    params: SeirParams
    contagion: ContagionTuple
    S: np.ndarray             # (T, 2)
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray
    beta: np.ndarray          # (T,)
    rates: np.ndarray         # (T, 2)
    p: np.ndarray             # (T,)
    exposures: np.ndarray     # (T,)
    onsets: np.ndarray        # (T,)
    dampening: np.ndarray     # (T,) bool
    declaration_day: Optional[int]

    @property
    def horizon(self) -> int:
        return len(self.beta)

    @property
    def new_infections(self) -> np.ndarray:
        return self.exposures if self.params.incidence_flow == 'exposure' else self.onsets

    def state(self, day: int) -> Tuple[GroupState, GroupState]:
        i = day - 1
        return tuple(GroupState(self.S[i, j], self.E[i, j], self.I[i, j], self.R[i, j]) for j in range(2))

    def relative_day(self, absolute_day: int) -> Optional[int]:
        """Planner day (declaration day is 1)"""
        if self.declaration_day is None:
            return None
        return absolute_day - self.declaration_day + 1

    def absolute_day(self, relative_day: int) -> Optional[int]:
        if self.declaration_day is None:
            return None
        return self.declaration_day + relative_day - 1

    def attack_size(self) -> float:
        """Persons who left the susceptible compartments over the horizon"""
        initial = sum(s.S for s in self.params.initial_states())
        return float(initial - self.S[-1].sum())

    def dampening_window(self) -> Optional[Tuple[int, int]]:
        days = np.nonzero(self.dampening)[0]
        if len(days) == 0:
            return None
        return int(days[0]) + 1, int(days[-1]) + 1


@dataclass(frozen=True)
class TrajectoryBatch:
    """Same record as Trajectory with a trailing axis over contagion tuples"""
    params: SeirParams
    contagions: Tuple[ContagionTuple, ...]
    S: np.ndarray             # (T, 2, M)
    E: np.ndarray
    I: np.ndarray
    R: np.ndarray
    beta: np.ndarray          # (T, M)
    rates: np.ndarray         # (T, 2, M)
    p: np.ndarray             # (T, M)
    exposures: np.ndarray
    onsets: np.ndarray
    dampening: np.ndarray
    declaration_days: np.ndarray   # (M,), 0 when never declared

    def __len__(self) -> int:
        return len(self.contagions)

    @property
    def new_infections(self) -> np.ndarray:
        return self.exposures if self.params.incidence_flow == 'exposure' else self.onsets

    def item(self, m: int) -> Trajectory:
        day = int(self.declaration_days[m])
        return Trajectory(
            params=self.params,
            contagion=self.contagions[m],
            S=self.S[:, :, m].copy(),
            E=self.E[:, :, m].copy(),
            I=self.I[:, :, m].copy(),
            R=self.R[:, :, m].copy(),
            beta=self.beta[:, m].copy(),
            rates=self.rates[:, :, m].copy(),
            p=self.p[:, m].copy(),
            exposures=self.exposures[:, m].copy(),
            onsets=self.onsets[:, m].copy(),
            dampening=self.dampening[:, m].copy(),
            declaration_day=day if day > 0 else None,
        )


def _trailing_sum(incidence: np.ndarray, i: int, window: int):
    """Sum of rows i-window+1..i, accumulated in day order"""
    total = incidence[max(0, i - window + 1)]
    for k in range(max(0, i - window + 1) + 1, i + 1):
        total = total + incidence[k]
    return total


def _check_tuples(params: SeirParams, tuples: Sequence[ContagionTuple]):
    for t in tuples:
        if t.d > params.horizon_T:
            raise ValueError(f"Change day {t.d} of {t} is beyond the horizon {params.horizon_T}")


def simulate_batch(params: SeirParams, tuples: Sequence[ContagionTuple]) -> TrajectoryBatch:
    """Run every tuple over the full horizon at once"""
    tuples = tuple(tuples)
    if not tuples:
        raise ValueError("simulate_batch needs at least one contagion tuple")
    _check_tuples(params, tuples)

    T = int(params.horizon_T)
    M = len(tuples)
    p1 = np.array([t.p1 for t in tuples])
    p2 = np.array([t.p2 for t in tuples])
    change = np.array([t.d for t in tuples])

    g1, g2 = params.initial_states()
    states = tuple(GroupState(*(np.full(M, float(v)) for v in (g.S, g.E, g.I, g.R))) for g in (g1, g2))

    out = {name: np.zeros((T, 2, M)) for name in ('S', 'E', 'I', 'R', 'rates')}
    beta = np.zeros((T, M))
    p_daily = np.zeros((T, M))
    exposures = np.zeros((T, M))
    onsets = np.zeros((T, M))
    dampening = np.zeros((T, M), dtype=bool)

    window = int(params.declaration_window)
    trigger = params.declaration_threshold * (params.N1 + params.N2)
    use_exposures = params.incidence_flow == 'exposure'
    declared = np.zeros(M, dtype=int)
    # 0 before declaration, 1 while dampened, 2 once dampening has ended
    phase = np.zeros(M, dtype=int)

    for i in range(T):
        day = i + 1
        for j, state in enumerate(states):
            out['S'][i, j], out['E'][i, j] = state.S, state.E
            out['I'][i, j], out['R'][i, j] = state.I, state.R

        recent = _trailing_sum(exposures if use_exposures else onsets, i, window)
        newly = (declared == 0) & (recent >= trigger)
        declared[newly] = day
        phase[newly] = 1

        active = phase == 1
        p_t = np.where(day < change, p1, p2)
        infectives_before = states[0].I + states[1].I
        states, rates, beta[i], exposed, onset = _advance(states, params, p_t, active)
        out['rates'][i, 0], out['rates'][i, 1] = rates
        p_daily[i] = p_t
        dampening[i] = active
        if i + 1 < T:
            exposures[i + 1] = exposed
            onsets[i + 1] = onset

        infectives_after = states[0].I + states[1].I
        growth = (infectives_after - infectives_before) / np.maximum(infectives_before, AppConfig.GROWTH_EPS)
        ended = active & (day > declared) & (growth < params.dampening_off_threshold)
        phase[ended] = 2

    logger.debug(f"Simulated {M} tuples over {T} days, {int((declared > 0).sum())} declared")
    return TrajectoryBatch(
        params=params, contagions=tuples,
        S=out['S'], E=out['E'], I=out['I'], R=out['R'],
        beta=beta, rates=out['rates'], p=p_daily,
        exposures=exposures, onsets=onsets, dampening=dampening,
        declaration_days=declared,
    )


def simulate_many(params: SeirParams, tuples: Sequence[ContagionTuple]) -> List[Trajectory]:
    batch = simulate_batch(params, tuples)
    return [batch.item(m) for m in range(len(batch))]


def simulate(params: SeirParams, contagion: ContagionTuple) -> Trajectory:
    """Full-horizon run with p1 before the change day and p2 from it on"""
    return simulate_batch(params, (contagion,)).item(0)


def detect_declaration(trajectory: Trajectory, threshold: Optional[float] = None,
                       window: Optional[int] = None) -> Optional[int]:
    """First day whose trailing new infections reach threshold * (N1 + N2)"""
    params = trajectory.params
    threshold = params.declaration_threshold if threshold is None else threshold
    window = params.declaration_window if window is None else window
    if not 0.0 < threshold < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {threshold}")
    trigger = threshold * (params.N1 + params.N2)
    incidence = trajectory.new_infections
    for i in range(len(incidence)):
        if _trailing_sum(incidence, i, window) >= trigger:
            return i + 1
    return None
