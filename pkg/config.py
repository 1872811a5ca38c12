"""
Centralized configuration management for the surge staffing planner
"""

import os
from dataclasses import dataclass
from typing import List, Optional

PACKAGE_DIR = os.path.dirname(os.path.abspath(__file__))


@dataclass
class BundledExperiment:
    """A configuration file shipped with the planner"""
    name: str
    display_name: str
    path: str
    description: str


class AppConfig:
    """Application-wide configuration"""

    # Bundled experiment configurations
    EXPERIMENTS = {
        'example1': BundledExperiment(
            name='example1',
            display_name='Health system, change window 140-160',
            path=os.path.join(PACKAGE_DIR, 'data', 'example1.yaml'),
            description='Two intervals for p, 3000 volunteers, 30% social-distancing dampening'
        ),
        'example2': BundledExperiment(
            name='example2',
            display_name='Health system, single interval',
            path=os.path.join(PACKAGE_DIR, 'data', 'example2.yaml'),
            description='Same interval before and after the change, 2000 volunteers, no dampening'
        ),
        'utility': BundledExperiment(
            name='utility',
            display_name='Utility plant, staffing threshold cost',
            path=os.path.join(PACKAGE_DIR, 'data', 'utility_threshold.yaml'),
            description='Threshold cost on available workforce instead of queueing utilization'
        ),
    }

    # Directories
    LOG_DIR = os.getenv('SURGE_LOG_DIR', 'logs')
    OUTPUT_DIR = os.getenv('SURGE_OUTPUT_DIR', 'results')

    # Oracle concurrency
    WORKERS = int(os.getenv('SURGE_WORKERS', str(min(8, os.cpu_count() or 1))))
    ORACLE_CHUNK = int(os.getenv('SURGE_ORACLE_CHUNK', '512'))
    SIMULATION_BATCH = int(os.getenv('SURGE_SIMULATION_BATCH', '1024'))

    # Numeric tolerances
    PIVOT_TOL = 1e-9
    FEASIBILITY_TOL = 1e-8
    GROWTH_EPS = 1e-12
    GAP_EPS = 1e-12
    LEDGER_TOL = 1e-7

    # Solver defaults (overridable per experiment)
    DEFAULT_GRID = 20
    DEFAULT_TOLERANCE = 1e-4
    DEFAULT_HOT_START_ITERATIONS = 10
    DEFAULT_HOT_START_GAP = 0.05
    DEFAULT_MAX_ITERATIONS = 40
    DEFAULT_PRICING = 'dantzig'  # falls back to Bland's rule on degenerate streaks

    # Schema
    SCHEMA_VERSION = 1

    @classmethod
    def get_experiment(cls, name: str) -> Optional[BundledExperiment]:
        """Get a bundled experiment by name"""
        return cls.EXPERIMENTS.get(name)

    @classmethod
    def get_bundled_experiments(cls) -> List[str]:
        """Get list of bundled experiment names"""
        return list(cls.EXPERIMENTS.keys())

    @classmethod
    def resolve_config_path(cls, name_or_path: str) -> str:
        """Map a bundled experiment name to its file, pass paths through"""
        experiment = cls.get_experiment(name_or_path)
        return experiment.path if experiment else name_or_path
