import json
import os
from typing import List, Dict, Optional
import logging
import pandas as pd

from config import AppConfig

logger = logging.getLogger(__name__)

TIMING_COLUMNS = ['oracle_seconds', 'master_seconds']


class BoundLedgerError(RuntimeError):
    """Lower/upper bound bookkeeping went wrong beyond numeric slack"""


def relative_gap(lower: float, upper: float) -> float:
    """(upper - lower) / max(lower, eps); zero when both bounds vanish"""
    if upper == float('inf'):
        return float('inf')
    return max(0.0, upper - lower) / max(lower, AppConfig.GAP_EPS)


class IterationRecord:
    """One round of the cutting-plane loop"""

    def __init__(self, phase: str, grid: int, iteration: int, p1: float, p2: float, d: int,
                 lower: float, upper: float, oracle_seconds: float = 0.0, master_seconds: float = 0.0):
        self.phase = phase
        self.grid = grid
        self.iteration = iteration
        self.p1 = p1
        self.p2 = p2
        self.d = d
        self.lower = lower
        self.upper = upper
        self.oracle_seconds = oracle_seconds
        self.master_seconds = master_seconds

    @property
    def gap(self) -> float:
        return relative_gap(self.lower, self.upper)

    def to_dict(self) -> Dict:
        """Convert to dictionary for JSON storage"""
        return {
            'phase': self.phase,
            'grid': self.grid,
            'iteration': self.iteration,
            'p1': self.p1,
            'p2': self.p2,
            'd': self.d,
            'lower': self.lower,
            'upper': self.upper,
            'gap': self.gap,
            'oracle_seconds': self.oracle_seconds,
            'master_seconds': self.master_seconds
        }

    @classmethod
    def from_dict(cls, data: Dict):
        """Create from dictionary"""
        return cls(
            phase=data['phase'],
            grid=int(data['grid']),
            iteration=int(data['iteration']),
            p1=float(data['p1']),
            p2=float(data['p2']),
            d=int(data['d']),
            lower=float(data['lower']),
            upper=float(data['upper']),
            oracle_seconds=float(data.get('oracle_seconds', 0.0)),
            master_seconds=float(data.get('master_seconds', 0.0))
        )


class ConvergenceLog:
    """Iteration history of a robust solve with the bound ledger"""

    def __init__(self):
        self.records: List[IterationRecord] = []

    def __len__(self) -> int:
        return len(self.records)

    def log_iteration(self, record: IterationRecord):
        self.records.append(record)
        logger.info(
            f"[{record.phase} N={record.grid} it={record.iteration}] worst ({record.p1:.6g}, {record.p2:.6g}, {record.d}) "
            f"lower={record.lower:.10g} upper={record.upper:.10g} gap={record.gap:.3e} "
            f"oracle={record.oracle_seconds:.2f}s master={record.master_seconds:.2f}s"
        )

    def ledger_violations(self, tol: float = AppConfig.LEDGER_TOL) -> List[str]:
        """Lower bounds nondecreasing within each grid level and never above the best upper bound"""
        problems = []
        previous: Dict[int, float] = {}
        best_upper: Dict[int, float] = {}
        for r in self.records:
            slack = tol * max(1.0, abs(r.lower))
            last = previous.get(r.grid)
            if last is not None and r.lower < last - slack:
                problems.append(f"N={r.grid} iteration {r.iteration}: lower bound fell from {last:.12g} to {r.lower:.12g}")
            best_upper[r.grid] = min(best_upper.get(r.grid, float('inf')), r.upper)
            if r.lower > best_upper[r.grid] + slack:
                problems.append(f"N={r.grid} iteration {r.iteration}: lower bound {r.lower:.12g} "
                                f"above upper bound {best_upper[r.grid]:.12g}")
            previous[r.grid] = r.lower
        return problems

    def to_frame(self, include_timings: bool = False) -> pd.DataFrame:
        columns = ['phase', 'grid', 'iteration', 'p1', 'p2', 'd', 'lower', 'upper', 'gap']
        if include_timings:
            columns += TIMING_COLUMNS
        return pd.DataFrame([r.to_dict() for r in self.records], columns=columns)

    def save(self, path: str):
        """Save history to JSON file"""
        os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump([r.to_dict() for r in self.records], f, indent=2)

    @classmethod
    def load(cls, path: str) -> 'ConvergenceLog':
        """Load history from JSON file"""
        log = cls()
        try:
            with open(path, 'r', encoding='utf-8') as f:
                log.records = [IterationRecord.from_dict(item) for item in json.load(f)]
            logger.info(f"Loaded {len(log.records)} iteration records")
        except FileNotFoundError:
            logger.warning(f"No convergence history at {path}")
        return log

    def last(self) -> Optional[IterationRecord]:
        return self.records[-1] if self.records else None
