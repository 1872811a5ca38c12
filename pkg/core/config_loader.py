"""
Experiment configuration files

One YAML document per experiment, versioned by `schema_version`. Sections and
keys are listed in FIELDS; anything else is rejected. All problems are
collected and raised together in a ConfigError.
"""

import logging
import os
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import yaml

from config import AppConfig
from core.epidemic import reproduction_range
from schema import (ConfigValidator, DeploymentConstraints, ExperimentConfig, ExperimentSettings,
                    OutOfSampleSettings, PScanSettings, QueueingCostSpec, SeirParams, SolverSettings,
                    ThresholdCostSpec, UncertaintySet, default_breakpoints)

logger = logging.getLogger(__name__)

REQUIRED = object()


class ConfigError(ValueError):
    """Invalid experiment configuration; `errors` lists every problem found"""

    def __init__(self, errors: List[str], path: Optional[str] = None):
        self.errors = list(errors)
        self.path = path
        where = f"{path}: " if path else ''
        super().__init__(where + '; '.join(self.errors))


# ─────────────────────────────────────────────────────────────────
# Value converters
# ─────────────────────────────────────────────────────────────────

def _number(value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"expected a number, got {value!r}")
    return float(value)


def _integer(value) -> int:
    number = _number(value)
    if number != int(number):
        raise ValueError(f"expected an integer, got {value!r}")
    return int(number)


def _optional_number(value) -> Optional[float]:
    return None if value is None else _number(value)


def _boolean(value) -> bool:
    if not isinstance(value, bool):
        raise ValueError(f"expected true or false, got {value!r}")
    return value


def _text(value) -> str:
    if not isinstance(value, str):
        raise ValueError(f"expected text, got {value!r}")
    return value


def _pair(convert: Callable) -> Callable:
    def parse(value):
        if not isinstance(value, (list, tuple)) or len(value) != 2:
            raise ValueError(f"expected a pair [a, b], got {value!r}")
        return tuple(convert(v) for v in value)
    return parse


def _list(convert: Callable) -> Callable:
    def parse(value):
        if not isinstance(value, (list, tuple)):
            raise ValueError(f"expected a list, got {value!r}")
        return tuple(convert(v) for v in value)
    return parse


def _breakpoints(value) -> Tuple[float, ...]:
    if isinstance(value, dict):
        unknown = set(value) - {'start', 'stop', 'count'}
        if unknown or len(value) != 3:
            raise ValueError("expected {start, stop, count} or a list of utilization values")
        return tuple(float(x) for x in np.linspace(_number(value['start']), _number(value['stop']),
                                                    _integer(value['count'])))
    return _list(_number)(value)


def _pieces(value) -> Tuple[Tuple[float, float], ...]:
    return _list(_pair(_number))(value)


# section -> key -> (converter, default)
FIELDS: Dict[str, Dict[str, Tuple[Callable, Any]]] = {
    'epidemic': {
        'contact_rates': (_pair(_number), REQUIRED),
        'latent_period': (_number, REQUIRED),
        'infectious_period': (_number, REQUIRED),
        'survival_fraction': (_number, 1.0),
        'dampening': (_number, 1.0),
        'populations': (_pair(_number), REQUIRED),
        'initial_infectives': (_pair(_number), REQUIRED),
        'declaration_threshold': (_number, REQUIRED),
        'declaration_window': (_integer, 1),
        'incidence_flow': (_text, 'exposure'),
        'dampening_off_threshold': (_number, 0.0),
        'horizon': (_integer, REQUIRED),
    },
    'cost': {
        'model': (_text, REQUIRED),
        'queueing': (dict, None),
        'threshold': (dict, None),
    },
    'cost.queueing': {
        'arrival_rate': (_number, REQUIRED),
        'service_rate': (_number, REQUIRED),
        'initial_occupancy': (_number, REQUIRED),
        'demand_surge': (_number, 0.0),
        'exp_shift': (_number, 0.95),
        'breakpoints': (_breakpoints, default_breakpoints()),
    },
    'cost.threshold': {
        'pieces': (_pieces, REQUIRED),
        'staffing_threshold': (_optional_number, None),
    },
    'deployment': {
        'budget': (_number, REQUIRED),
        'service_length': (_integer, REQUIRED),
        'lag': (_integer, 1),
        'per_period_cap': (_optional_number, None),
        'planner_horizon': (_integer, 150),
        'start_offset': (_integer, 0),
    },
    'uncertainty': {
        'initial_interval': (_pair(_number), REQUIRED),
        'later_interval': (_pair(_number), None),
        'change_window': (_pair(_integer), REQUIRED),
    },
    'solver': {
        'grid_start': (_integer, AppConfig.DEFAULT_GRID),
        'grid_max': (_integer, None),
        'tolerance': (_number, AppConfig.DEFAULT_TOLERANCE),
        'hot_start_iterations': (_integer, AppConfig.DEFAULT_HOT_START_ITERATIONS),
        'hot_start_gap': (_number, AppConfig.DEFAULT_HOT_START_GAP),
        'max_iterations': (_integer, AppConfig.DEFAULT_MAX_ITERATIONS),
        'workers': (_integer, AppConfig.WORKERS),
        'pricing': (_text, AppConfig.DEFAULT_PRICING),
        'report_timings': (_boolean, False),
        'verify_cuts': (_integer, 0),
    },
    'experiments': {
        'out_of_sample': (dict, None),
        'cost_benefit': (dict, None),
        'p_scan': (dict, None),
    },
    'experiments.out_of_sample': {
        'p1': (_list(_number), ()),
        'p2': (_list(_number), ()),
        'days': (_list(_integer), ()),
    },
    'experiments.cost_benefit': {
        'budgets': (_list(_number), ()),
    },
    'experiments.p_scan': {
        'p_min': (_number, 0.0115),
        'p_max': (_number, 0.0125),
        'points': (_integer, 11),
    },
    'output': {
        'directory': (_text, None),
    },
}

TOP_LEVEL = {'schema_version', 'name', 'epidemic', 'cost', 'deployment', 'uncertainty', 'solver',
             'experiments', 'output'}
REQUIRED_SECTIONS = {'epidemic', 'cost', 'deployment', 'uncertainty'}


def _section(raw: Optional[dict], name: str, errors: List[str]) -> Dict[str, Any]:
    """Convert one section, logging each default that was applied"""
    spec = FIELDS[name]
    raw = raw or {}
    if not isinstance(raw, dict):
        errors.append(f"{name}: expected a mapping, got {type(raw).__name__}")
        raw = {}
    for key in sorted(set(raw) - set(spec)):
        errors.append(f"{name}.{key}: unknown field")
    values: Dict[str, Any] = {}
    for key, (convert, default) in spec.items():
        if key not in raw:
            if default is REQUIRED:
                errors.append(f"{name}.{key}: missing required field")
            else:
                values[key] = default
                if default is not None and default != ():
                    logger.info(f"defaulted {name}.{key}={default}")
            continue
        try:
            values[key] = convert(raw[key]) if convert is not dict else raw[key]
        except (ValueError, TypeError, KeyError) as e:
            errors.append(f"{name}.{key}: {e}")
    return values


def parse_config(document: Any, source: Optional[str] = None) -> ExperimentConfig:
    """Build a validated ExperimentConfig from a parsed YAML document"""
    errors: List[str] = []
    if not isinstance(document, dict):
        raise ConfigError(["the document must be a mapping of sections"], source)
    for key in sorted(set(document) - TOP_LEVEL):
        errors.append(f"{key}: unknown section")
    for key in sorted(REQUIRED_SECTIONS - set(document)):
        errors.append(f"{key}: missing required section")
    version = document.get('schema_version')
    if version != AppConfig.SCHEMA_VERSION:
        errors.append(f"schema_version: expected {AppConfig.SCHEMA_VERSION}, got {version!r}")
    name = document.get('name') or (os.path.splitext(os.path.basename(source))[0] if source else 'experiment')

    epi = _section(document.get('epidemic'), 'epidemic', errors)
    cost = _section(document.get('cost'), 'cost', errors)
    dep = _section(document.get('deployment'), 'deployment', errors)
    unc = _section(document.get('uncertainty'), 'uncertainty', errors)
    sol = _section(document.get('solver'), 'solver', errors)
    exp = _section(document.get('experiments'), 'experiments', errors)
    out = _section(document.get('output'), 'output', errors)

    queueing = threshold = None
    if cost.get('model') == 'queueing' or cost.get('queueing') is not None:
        q = _section(cost.get('queueing'), 'cost.queueing', errors)
        if not any(f.startswith('cost.queueing.') and 'missing' in f for f in errors) and len(q) == len(FIELDS['cost.queueing']):
            queueing = QueueingCostSpec(zeta_bar=q['arrival_rate'], mu=q['service_rate'], rho0=q['initial_occupancy'],
                                        delta_demand=q['demand_surge'], exp_shift=q['exp_shift'],
                                        breakpoints=tuple(q['breakpoints']))
    if cost.get('model') == 'threshold' or cost.get('threshold') is not None:
        t = _section(cost.get('threshold'), 'cost.threshold', errors)
        if 'pieces' in t:
            threshold = ThresholdCostSpec(pieces=t['pieces'], staffing_threshold=t['staffing_threshold'])

    oos = _section(exp.get('out_of_sample'), 'experiments.out_of_sample', errors)
    cb = _section(exp.get('cost_benefit'), 'experiments.cost_benefit', errors)
    scan = _section(exp.get('p_scan'), 'experiments.p_scan', errors)

    if errors:
        raise ConfigError(errors, source)

    params = SeirParams(
        Lambda1=epi['contact_rates'][0], Lambda2=epi['contact_rates'][1],
        muE_inv=epi['latent_period'], muRR_inv=epi['infectious_period'],
        f=epi['survival_fraction'], theta=epi['dampening'],
        N1=epi['populations'][0], N2=epi['populations'][1],
        I0_1=epi['initial_infectives'][0], I0_2=epi['initial_infectives'][1],
        declaration_threshold=epi['declaration_threshold'],
        dampening_off_threshold=epi['dampening_off_threshold'],
        horizon_T=epi['horizon'],
        declaration_window=epi['declaration_window'],
        incidence_flow=epi['incidence_flow'],
    )
    constraints = DeploymentConstraints(
        total_budget=dep['budget'], tau=dep['service_length'], lag=dep['lag'],
        per_period_cap=dep['per_period_cap'], planner_horizon=dep['planner_horizon'],
        start_offset=dep['start_offset'],
    )
    grid_max = sol['grid_max'] if sol['grid_max'] is not None else sol['grid_start']
    solver = SolverSettings(
        grid_start=sol['grid_start'], grid_max=grid_max, tolerance=sol['tolerance'],
        hot_start_iterations=sol['hot_start_iterations'], hot_start_gap=sol['hot_start_gap'],
        max_iterations=sol['max_iterations'], workers=sol['workers'], pricing=sol['pricing'],
        report_timings=sol['report_timings'], verify_cuts=sol['verify_cuts'],
    )
    later = unc['later_interval'] if unc['later_interval'] is not None else unc['initial_interval']
    try:
        uncertainty = UncertaintySet(pL=unc['initial_interval'][0], pU=unc['initial_interval'][1],
                                     pL_hat=later[0], pU_hat=later[1],
                                     change_window=unc['change_window'], N=solver.grid_start)
    except ValueError as e:
        errors.extend(str(e).split('; '))
        uncertainty = None
    settings = ExperimentSettings(
        out_of_sample=OutOfSampleSettings(p1=oos['p1'], p2=oos['p2'], days=oos['days']),
        budgets=cb['budgets'],
        p_scan=PScanSettings(p_min=scan['p_min'], p_max=scan['p_max'], points=scan['points']),
    )
    if uncertainty is None:
        errors.extend(ConfigValidator.validate_seir_params(params))
        raise ConfigError(errors, source)

    config = ExperimentConfig(
        name=name, epidemic=params, cost_model=cost['model'], deployment=constraints,
        uncertainty=uncertainty, queueing=queueing, threshold=threshold, solver=solver,
        experiments=settings,
        output_dir=out['directory'] or os.path.join(AppConfig.OUTPUT_DIR, name),
    )
    errors = ConfigValidator.validate_experiment(config)
    if errors:
        raise ConfigError(errors, source)
    return config


def load_config(path: str) -> ExperimentConfig:
    """Read, parse and validate an experiment file"""
    path = AppConfig.resolve_config_path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError([f"cannot read file: {e}"], path)
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark is not None else ''
        raise ConfigError([f"{where}{getattr(e, 'problem', None) or e}"], path)
    config = parse_config(document, path)
    logger.info(f"Loaded experiment '{config.name}' from {path}")
    return config


def describe(config: ExperimentConfig) -> Dict[str, Any]:
    """Summary echoed by validate-config"""
    u = config.uncertainty
    r0_low, r0_high = reproduction_range(config.epidemic, [(u.pL, u.pU)])
    later_low, later_high = reproduction_range(config.epidemic, [(u.pL_hat, u.pU_hat)])
    n_p1 = 1 if u.pL == u.pU else u.N + 1
    n_p2 = 1 if u.pL_hat == u.pU_hat else u.N + 1
    return {
        'name': config.name,
        'cost_model': config.cost_model,
        'r0_range': [round(r0_low, 3), round(r0_high, 3)],
        'r0_later_range': [round(later_low, 3), round(later_high, 3)],
        'grid': u.N,
        'tuples': n_p1 * n_p2 * len(u.change_days),
        'budget': config.deployment.total_budget,
        'planner_horizon': config.deployment.planner_horizon,
        'output_dir': config.output_dir,
    }
