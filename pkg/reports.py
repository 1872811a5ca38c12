"""
Report files: policy and table CSVs plus plot-data JSON

Floats are written with 17 significant digits and LF line endings so that
reruns of the same config produce identical bytes and policies reload exactly.
"""

import json
import logging
import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd

from schema import DeploymentVector

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
POLICY_COLUMNS = ['relative_day', 'callup']


class ReportError(OSError):
    """A report file could not be written or read back"""


def _prepare(path: str) -> str:
    directory = os.path.dirname(path) or '.'
    try:
        os.makedirs(directory, exist_ok=True)
    except OSError as e:
        raise ReportError(f"cannot create output directory {directory}: {e}") from e
    return path


def write_frame(frame: pd.DataFrame, path: str) -> str:
    try:
        frame.to_csv(_prepare(path), index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e}") from e
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def _plain(value):
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not np.isfinite(value):
        return None
    return value


def write_json(data: Dict[str, Any], path: str) -> str:
    try:
        with open(_prepare(path), 'w', encoding='utf-8', newline='\n') as f:
            json.dump(_plain(data), f, indent=2, sort_keys=True)
            f.write('\n')
    except OSError as e:
        raise ReportError(f"cannot write {path}: {e}") from e
    return path


def policy_frame(h: DeploymentVector) -> pd.DataFrame:
    return pd.DataFrame({'relative_day': np.arange(1, len(h) + 1), 'callup': h.h})


def write_policy_csv(h: DeploymentVector, path: str) -> str:
    return write_frame(policy_frame(h), path)


def load_policy_csv(path: str) -> DeploymentVector:
    """Read a policy written by write_policy_csv"""
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError) as e:
        raise ReportError(f"cannot read policy {path}: {e}") from e
    if list(frame.columns) != POLICY_COLUMNS:
        raise ReportError(f"{path}: expected columns {POLICY_COLUMNS}, got {list(frame.columns)}")
    days = frame['relative_day'].to_numpy()
    if not np.array_equal(days, np.arange(1, len(frame) + 1)):
        raise ReportError(f"{path}: relative days must run 1..{len(frame)} without gaps")
    return DeploymentVector(frame['callup'].to_numpy(dtype=float))


def emit_reports(result, output_dir: Optional[str] = None) -> Dict[str, str]:
    """Write the files of a solve run; returns report name -> path"""
    output_dir = output_dir or result.config.output_dir
    include_timings = result.config.solver.report_timings
    paths = {
        'policy': write_policy_csv(result.policy.h, os.path.join(output_dir, 'policy.csv')),
        'naive_policy': write_policy_csv(result.naive.h, os.path.join(output_dir, 'naive_policy.csv')),
        'integral_policy': write_policy_csv(result.integral, os.path.join(output_dir, 'integral_policy.csv')),
        'convergence': write_frame(result.policy.log.to_frame(include_timings),
                                   os.path.join(output_dir, 'convergence.csv')),
        'summary': write_frame(result.summary, os.path.join(output_dir, 'policy_summary.csv')),
        'scenarios': write_frame(result.scenarios.to_frame(), os.path.join(output_dir, 'scenarios.csv')),
        'plot_data': write_json(result.plot_data, os.path.join(output_dir, 'plot_data.json')),
    }
    logger.info(f"Reports written to {output_dir}")
    return paths
