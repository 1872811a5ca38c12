"""
Dense two-phase primal simplex with duals

Solves   min c.x  s.t.  A_eq x = b_eq,  A_ge x >= b_ge,  lower <= x <= upper.

Rows are sign-normalized so the tableau right-hand side is nonnegative;
inequality rows whose surplus can start basic need no artificial, so LPs that
are feasible at the origin skip phase 1 entirely. After the last pivot the
basis is refactorized against the untouched standard-form matrix to recover
clean primal values and duals.

Pricing defaults to Dantzig's most negative reduced cost, which needs far
fewer pivots on the master LPs than Bland's rule. Anti-cycling still rests on
Bland: after DEGENERATE_STREAK zero-length pivots in a row the solve switches
to the smallest-index rule for good. `pricing='bland'` uses it from the first
pivot. Both rules break ties by index, so a given LP always takes the same
pivot path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from config import AppConfig

logger = logging.getLogger(__name__)

OPTIMAL = 'optimal'
INFEASIBLE = 'infeasible'
UNBOUNDED = 'unbounded'
ITERATION_LIMIT = 'iteration_limit'

# consecutive zero-length pivots before Dantzig pricing hands over to Bland's rule
DEGENERATE_STREAK = 50


class LinearProgramError(ValueError):
    """Malformed linear program"""


def _matrix(a, n: int, name: str) -> np.ndarray:
    if a is None:
        return np.zeros((0, n))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    if a.size == 0:
        return np.zeros((0, n))
    if a.shape[1] != n:
        raise LinearProgramError(f"{name} has {a.shape[1]} columns, expected {n}")
    return a


def _vector(b, m: int, name: str) -> np.ndarray:
    if b is None:
        b = np.zeros(0)
    b = np.asarray(b, dtype=float).reshape(-1)
    if len(b) != m:
        raise LinearProgramError(f"{name} has length {len(b)}, expected {m}")
    return b


@dataclass(frozen=True)
class LinearProgram:
    c: np.ndarray
    A_eq: Optional[np.ndarray] = None
    b_eq: Optional[np.ndarray] = None
    A_ge: Optional[np.ndarray] = None
    b_ge: Optional[np.ndarray] = None
    lower: Optional[np.ndarray] = None
    upper: Optional[np.ndarray] = None

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        n = len(c)
        if n == 0:
            raise LinearProgramError("objective has no variables")
        A_eq = _matrix(self.A_eq, n, 'A_eq')
        A_ge = _matrix(self.A_ge, n, 'A_ge')
        b_eq = _vector(self.b_eq, A_eq.shape[0], 'b_eq')
        b_ge = _vector(self.b_ge, A_ge.shape[0], 'b_ge')
        lower = np.zeros(n) if self.lower is None else _vector(self.lower, n, 'lower')
        upper = np.full(n, np.inf) if self.upper is None else _vector(self.upper, n, 'upper')
        for name, arr in (('c', c), ('A_eq', A_eq), ('b_eq', b_eq), ('A_ge', A_ge), ('b_ge', b_ge)):
            if not np.all(np.isfinite(arr)):
                raise LinearProgramError(f"{name} contains non-finite entries")
        if np.any(np.isnan(lower)) or np.any(lower == np.inf):
            raise LinearProgramError("lower bounds must be finite or -inf")
        if np.any(np.isnan(upper)) or np.any(upper == -np.inf):
            raise LinearProgramError("upper bounds must be finite or +inf")
        if np.any(lower > upper):
            raise LinearProgramError("a lower bound exceeds its upper bound")
        for name, arr in (('c', c), ('A_eq', A_eq), ('b_eq', b_eq), ('A_ge', A_ge),
                          ('b_ge', b_ge), ('lower', lower), ('upper', upper)):
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return len(self.c)


@dataclass
class LpSolution:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    duals_eq: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals_ge: np.ndarray = field(default_factory=lambda: np.zeros(0))
    duals_upper: np.ndarray = field(default_factory=lambda: np.zeros(0))
    reduced_costs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    iterations: int = 0

    @property
    def is_optimal(self) -> bool:
        return self.status == OPTIMAL

    def dual_objective(self, lp: LinearProgram) -> float:
        """b_eq.y_eq + b_ge.y_ge - u.w + l.r over finite bounds"""
        value = float(lp.b_eq @ self.duals_eq + lp.b_ge @ self.duals_ge)
        finite_u = np.isfinite(lp.upper)
        value -= float(lp.upper[finite_u] @ self.duals_upper[finite_u])
        finite_l = np.isfinite(lp.lower)
        value += float(lp.lower[finite_l] @ self.reduced_costs[finite_l])
        return value


class _StandardForm:
    """lp rewritten over nonnegative columns y with x = shift + P y"""

    def __init__(self, lp: LinearProgram):
        n = lp.n
        columns: List[Tuple[int, float]] = []
        for j in range(n):
            if np.isfinite(lp.lower[j]):
                columns.append((j, 1.0))
            else:
                columns.append((j, 1.0))
                columns.append((j, -1.0))
        self.P = np.zeros((n, len(columns)))
        for col, (j, sign) in enumerate(columns):
            self.P[j, col] = sign
        self.shift = np.where(np.isfinite(lp.lower), lp.lower, 0.0)

        upper_vars = np.nonzero(np.isfinite(lp.upper))[0]
        self.upper_vars = upper_vars
        rows = [lp.A_eq @ self.P, lp.A_ge @ self.P, -self.P[upper_vars]]
        rhs = [lp.b_eq - lp.A_eq @ self.shift,
               lp.b_ge - lp.A_ge @ self.shift,
               -(lp.upper[upper_vars] - self.shift[upper_vars])]
        self.G = np.vstack(rows)
        self.rhs = np.concatenate(rhs)
        self.m_eq = lp.A_eq.shape[0]
        self.m_ge = lp.A_ge.shape[0] + len(upper_vars)
        self.cost = self.P.T @ lp.c
        self.n_y = len(columns)


def _pivot(D: np.ndarray, reduced: np.ndarray, basis: np.ndarray, row: int, col: int):
    pivot_row = D[row] / D[row, col]
    column = D[:, col].copy()
    column[row] = 0.0
    D -= np.outer(column, pivot_row)
    D[row] = pivot_row
    reduced -= reduced[col] * pivot_row[:-1]
    basis[row] = col


def _entering(reduced: np.ndarray, allowed: int, bland: bool) -> int:
    candidates = np.nonzero(reduced[:allowed] < -AppConfig.PIVOT_TOL)[0]
    if len(candidates) == 0:
        return -1
    if bland:
        return int(candidates[0])
    return int(candidates[np.argmin(reduced[candidates])])


def _leaving(D: np.ndarray, basis: np.ndarray, col: int) -> Tuple[int, float]:
    column = D[:, col]
    rows = np.nonzero(column > AppConfig.PIVOT_TOL)[0]
    if len(rows) == 0:
        return -1, np.inf
    ratios = D[rows, -1] / column[rows]
    best = ratios.min()
    ties = rows[ratios <= best + AppConfig.PIVOT_TOL * max(1.0, abs(best))]
    return int(ties[np.argmin(basis[ties])]), float(best)


def _run(D: np.ndarray, basis: np.ndarray, cost: np.ndarray, allowed: int,
         pricing: str, max_iterations: int, counter: List[int]) -> str:
    """Primal simplex on a feasible tableau; columns >= allowed never enter"""
    reduced = cost - cost[basis] @ D[:, :-1]
    bland = pricing == 'bland'
    streak = 0
    while True:
        if counter[0] >= max_iterations:
            return ITERATION_LIMIT
        col = _entering(reduced, allowed, bland)
        if col < 0:
            return OPTIMAL
        row, step = _leaving(D, basis, col)
        if row < 0:
            return UNBOUNDED
        _pivot(D, reduced, basis, row, col)
        np.maximum(D[:, -1], 0.0, out=D[:, -1])
        counter[0] += 1
        streak = streak + 1 if step <= AppConfig.PIVOT_TOL else 0
        if not bland and streak >= DEGENERATE_STREAK:
            logger.debug(f"Degenerate streak after {counter[0]} pivots, switching to Bland's rule")
            bland = True


def solve(lp: LinearProgram, pricing: str = AppConfig.DEFAULT_PRICING,
          max_iterations: Optional[int] = None) -> LpSolution:
    """Solve lp; infeasible and unbounded outcomes are reported through the status"""
    if pricing not in ('bland', 'dantzig'):
        raise LinearProgramError(f"unknown pricing rule {pricing!r}")
    sf = _StandardForm(lp)
    m = sf.G.shape[0]
    n_y = sf.n_y

    # sign-normalize rows; inequality rows with rhs <= 0 start with their surplus basic
    sign = np.ones(m)
    flip_ge = np.zeros(m, dtype=bool)
    flip_ge[sf.m_eq:] = sf.rhs[sf.m_eq:] <= 0
    sign[flip_ge] = -1.0
    sign[:sf.m_eq] = np.where(sf.rhs[:sf.m_eq] < 0, -1.0, 1.0)

    n_s = sf.m_ge
    surplus = np.zeros((m, n_s))
    surplus[sf.m_eq + np.arange(n_s), np.arange(n_s)] = -1.0
    base = np.hstack([sf.G, surplus]) * sign[:, None]
    b0 = sf.rhs * sign

    needs_artificial = np.ones(m, dtype=bool)
    needs_artificial[flip_ge] = False
    art_rows = np.nonzero(needs_artificial)[0]
    n_a = len(art_rows)
    artificial = np.zeros((m, n_a))
    artificial[art_rows, np.arange(n_a)] = 1.0

    n_struct = n_y + n_s
    D = np.hstack([base, artificial, b0[:, None]])
    basis = np.empty(m, dtype=int)
    basis[flip_ge] = n_y + (np.nonzero(flip_ge)[0] - sf.m_eq)
    basis[art_rows] = n_struct + np.arange(n_a)

    if max_iterations is None:
        max_iterations = 50 * (m + n_struct) + 1000
    counter = [0]
    keep = np.ones(m, dtype=bool)

    if n_a:
        phase1 = np.concatenate([np.zeros(n_struct), np.ones(n_a)])
        status = _run(D, basis, phase1, n_struct + n_a, pricing, max_iterations, counter)
        if status == ITERATION_LIMIT:
            return LpSolution(status=status, iterations=counter[0])
        infeasibility = float(D[basis >= n_struct, -1].sum())
        if infeasibility > AppConfig.FEASIBILITY_TOL * max(1.0, float(np.abs(b0).max(initial=0.0))):
            logger.debug(f"Phase 1 ended with infeasibility {infeasibility:.3e}")
            return LpSolution(status=INFEASIBLE, iterations=counter[0])
        # drive remaining artificials out; rows that cannot pivot are redundant
        dummy = np.zeros(D.shape[1] - 1)
        for row in np.nonzero(basis >= n_struct)[0]:
            entries = np.abs(D[row, :n_struct])
            col = int(np.argmax(entries))
            if entries[col] > AppConfig.PIVOT_TOL:
                _pivot(D, dummy, basis, row, col)
            else:
                keep[row] = False
        D = np.delete(D[keep], np.s_[n_struct:n_struct + n_a], axis=1)
        basis = basis[keep]

    phase2 = np.concatenate([sf.cost, np.zeros(n_s)])
    status = _run(D, basis, phase2, n_struct, pricing, max_iterations, counter)
    if status != OPTIMAL:
        return LpSolution(status=status, iterations=counter[0])

    y = np.zeros(n_struct)
    duals_std = np.zeros(m)
    B = base[keep][:, basis]
    try:
        if len(basis):
            y[basis] = np.linalg.solve(B, b0[keep])
            duals_std[keep] = np.linalg.solve(B.T, phase2[basis])
    except np.linalg.LinAlgError:
        logger.warning("Final basis is singular, using tableau values without refinement")
        y[basis] = D[:, -1]
        duals_std[keep] = np.linalg.lstsq(B.T, phase2[basis], rcond=None)[0]
    y = np.where(y < 0, np.where(y > -AppConfig.FEASIBILITY_TOL, 0.0, y), y)

    x = sf.shift + sf.P @ y[:n_y]
    duals = duals_std * sign
    duals_eq = duals[:sf.m_eq]
    m_ge_orig = lp.A_ge.shape[0]
    duals_ge = duals[sf.m_eq:sf.m_eq + m_ge_orig]
    duals_upper = np.zeros(lp.n)
    duals_upper[sf.upper_vars] = duals[sf.m_eq + m_ge_orig:]
    reduced_costs = lp.c - lp.A_eq.T @ duals_eq - lp.A_ge.T @ duals_ge + duals_upper

    solution = LpSolution(
        status=OPTIMAL, x=x, objective=float(lp.c @ x),
        duals_eq=duals_eq, duals_ge=duals_ge, duals_upper=duals_upper,
        reduced_costs=reduced_costs, iterations=counter[0],
    )
    logger.debug(f"LP solved: {m} rows, {lp.n} variables, {counter[0]} pivots, objective {solution.objective:.10g}")
    return solution
