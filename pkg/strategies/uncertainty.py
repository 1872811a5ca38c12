"""
Discretized uncertainty set and the worst-case oracle

A ScenarioBank simulates every grid tuple once and keeps only what the
planner needs (regular availability, surge survival, group-1 infectives and
the validity mask on the relative timeline). Pricing a deployment against
the whole grid is then a few vectorized passes over chunks of tuples, which
are spread over a thread pool.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import AppConfig
from core.costs import DayCostFn
from core.epidemic import simulate_batch
from core.staffing import ScenarioBlock, apply_band, band_weights, batch_windows, block_from_arrays
from schema import ContagionTuple, DeploymentConstraints, SeirParams, UncertaintySet

logger = logging.getLogger(__name__)


def grid_values(lo: float, hi: float, N: int) -> List[float]:
    """lo + j (hi - lo) / N for j = 0..N; a degenerate interval gives one point"""
    if N < 1:
        raise ValueError(f"grid granularity must be at least 1, got {N}")
    if lo == hi:
        return [lo]
    return [lo + (hi - lo) * j / N for j in range(N + 1)]


def enumerate_tuples(u: UncertaintySet) -> List[ContagionTuple]:
    """Grid over both probability intervals times every change day, in lexicographic order"""
    return [ContagionTuple(p1, p2, d)
            for p1 in grid_values(u.pL, u.pU, u.N)
            for p2 in grid_values(u.pL_hat, u.pU_hat, u.N)
            for d in u.change_days]


class ScenarioBank:
    """Planner windows for a fixed list of tuples, sorted lexicographically"""

    def __init__(self, params: SeirParams, constraints: DeploymentConstraints, cost_fn: DayCostFn,
                 tuples: Sequence[ContagionTuple], workers: int = AppConfig.WORKERS,
                 chunk: int = AppConfig.ORACLE_CHUNK, previous: Optional['ScenarioBank'] = None):
        self.params = params
        self.constraints = constraints
        self.cost_fn = cost_fn
        self.tuples: List[ContagionTuple] = sorted(set(tuples))
        if not self.tuples:
            raise ValueError("a scenario bank needs at least one tuple")
        self.index: Dict[ContagionTuple, int] = {t: i for i, t in enumerate(self.tuples)}
        self.workers = max(1, int(workers))
        self.chunk = max(1, int(chunk))
        self.latent_stay = float(np.exp(-params.muE))
        self._blocks: Dict[int, ScenarioBlock] = {}

        M = len(self.tuples)
        T = constraints.planner_horizon
        self.regular = np.zeros((M, T))
        self.survival = np.ones((M, T))
        self.infectives = np.zeros((M, T))
        self.valid = np.zeros((M, T), dtype=bool)
        self.declaration_days = np.zeros(M, dtype=int)

        started = time.perf_counter()
        reused = self._reuse(previous)
        missing = [i for i in range(M) if i not in reused]
        batch_size = AppConfig.SIMULATION_BATCH
        for lo in range(0, len(missing), batch_size):
            rows = missing[lo:lo + batch_size]
            batch = simulate_batch(params, [self.tuples[i] for i in rows])
            c, q, infectives, valid = batch_windows(batch, constraints)
            self.regular[rows], self.survival[rows] = c, q
            self.infectives[rows], self.valid[rows] = infectives, valid
            self.declaration_days[rows] = batch.declaration_days
        logger.info(f"Scenario bank ready: {M} tuples ({len(reused)} reused) in {time.perf_counter() - started:.2f}s, "
                    f"{int((self.declaration_days > 0).sum())} declared")

    def _reuse(self, previous: Optional['ScenarioBank']) -> set:
        if previous is None or previous.params != self.params or previous.constraints != self.constraints:
            return set()
        reused = set()
        for t, i in self.index.items():
            j = previous.index.get(t)
            if j is None:
                continue
            self.regular[i], self.survival[i] = previous.regular[j], previous.survival[j]
            self.infectives[i], self.valid[i] = previous.infectives[j], previous.valid[j]
            self.declaration_days[i] = previous.declaration_days[j]
            reused.add(i)
        return reused

    @classmethod
    def from_config(cls, config, cost_fn: DayCostFn, uncertainty: Optional[UncertaintySet] = None,
                    previous: Optional['ScenarioBank'] = None, workers: Optional[int] = None) -> 'ScenarioBank':
        u = uncertainty or config.uncertainty
        return cls(config.epidemic, config.deployment, cost_fn, enumerate_tuples(u),
                   workers=workers or config.solver.workers, previous=previous)

    def __len__(self) -> int:
        return len(self.tuples)

    def declaration_day(self, i: int) -> Optional[int]:
        day = int(self.declaration_days[i])
        return day if day > 0 else None

    def block(self, i: int) -> ScenarioBlock:
        """Scenario block of tuple i, built on first use"""
        if i not in self._blocks:
            self._blocks[i] = block_from_arrays(
                self.tuples[i], self.declaration_day(i), self.regular[i], self.survival[i],
                self.infectives[i], self.valid[i], self.latent_stay, self.cost_fn, self.constraints)
        return self._blocks[i]

    def block_for(self, contagion: ContagionTuple) -> ScenarioBlock:
        return self.block(self.index[contagion])

    def _chunk_values(self, lo: int, hi: int, h: np.ndarray) -> np.ndarray:
        offset = self.constraints.arrival_offset
        band = band_weights(self.survival[lo:hi], offset, self.constraints.tau, self.latent_stay)
        omega = self.regular[lo:hi] + apply_band(band, h, offset)
        slopes, intercepts = self.cost_fn.day_pieces(self.infectives[lo:hi])
        day_cost = (slopes * omega[..., None] + intercepts).max(axis=-1)
        return np.where(self.valid[lo:hi], day_cost, 0.0).sum(axis=-1)

    def values(self, h) -> np.ndarray:
        """V(h|p) for every tuple of the bank"""
        h = np.asarray(h, dtype=float)
        bounds = [(lo, min(lo + self.chunk, len(self))) for lo in range(0, len(self), self.chunk)]
        if self.workers == 1 or len(bounds) == 1:
            parts = [self._chunk_values(lo, hi, h) for lo, hi in bounds]
        else:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                parts = list(pool.map(lambda b: self._chunk_values(b[0], b[1], h), bounds))
        return np.concatenate(parts)

    def value(self, h, contagion: ContagionTuple) -> float:
        return self.block_for(contagion).value(h)

    def worst(self, h) -> Tuple[int, float]:
        """Index and value of the costliest tuple; the first (lexicographically smallest) wins ties"""
        values = self.values(h)
        i = int(np.argmax(values))
        return i, float(values[i])


def worst_case(h, tuples, evaluate: Optional[Callable[[np.ndarray, ContagionTuple], float]] = None,
               workers: int = 1) -> Tuple[ContagionTuple, float]:
    """Exhaustive maximization of V(h|.) over a tuple list or a ScenarioBank"""
    started = time.perf_counter()
    if isinstance(tuples, ScenarioBank):
        i, value = tuples.worst(h)
        result = tuples.tuples[i], value
    else:
        candidates = sorted(tuples)
        if not candidates:
            raise ValueError("worst_case needs at least one tuple")
        if evaluate is None:
            raise ValueError("an evaluation function is required for a plain tuple list")
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                values = list(pool.map(lambda t: evaluate(h, t), candidates))
        else:
            values = [evaluate(h, t) for t in candidates]
        i = int(np.argmax(values))
        result = candidates[i], float(values[i])
    logger.debug(f"Worst case {result[0]} -> {result[1]:.10g} in {time.perf_counter() - started:.3f}s")
    return result
