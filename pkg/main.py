"""
Surge Staffing Planner - command line entry point

Computes robust surge-staff deployment plans for an organization facing
workforce shortfall during an influenza epidemic, and runs the studies
around them.

Examples:
  # Check a config and echo the R0 range it implies
  python main.py validate-config example1

  # Robust and naive plans with the three-scenario comparison
  python main.py --workers 8 solve example1

  # Price a saved plan over the grid or at chosen tuples
  python main.py evaluate example1 results/example1/policy.csv --tuple 0.012,0.0135,140

  # Out-of-sample, cost-benefit and p-scan studies
  python main.py oos example1 results/example1/policy.csv
  python main.py cost-benefit example1 --budgets 1000 2000 3000
  python main.py p-scan example1 --policy results/example1/policy.csv
"""

import argparse
import json
import logging
import os
import sys
from typing import List, Optional

from logging_config import setup_logging, get_logger
from config import AppConfig
from core.config_loader import ConfigError, describe, load_config
from core.costs import CostModelError
from core.epidemic import DegeneratePopulationError
from core.simplex import LinearProgramError
from core.staffing import InfeasibleDeploymentError
from metrics import PolicyName
from reports import ReportError, emit_reports, load_policy_csv, write_frame, write_json
from schema import ContagionTuple, DeploymentVector
from strategies.master import MasterProblemError
from tracking.convergence_logger import BoundLedgerError

logger = get_logger(__name__)

DOMAIN_ERRORS = (ConfigError, CostModelError, DegeneratePopulationError, LinearProgramError,
                 InfeasibleDeploymentError, MasterProblemError, BoundLedgerError, ReportError, ValueError)


def parse_tuple(text: str) -> ContagionTuple:
    """'p1,p2,d' -> ContagionTuple"""
    try:
        p1, p2, d = text.split(',')
        return ContagionTuple(float(p1), float(p2), int(d))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected p1,p2,d with 0 < p < 1 and d >= 1, got {text!r}: {e}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Robust surge-staff deployment planning under epidemic uncertainty',
        epilog=f"Bundled experiments: {', '.join(AppConfig.get_bundled_experiments())}")
    parser.add_argument('--workers', type=int, default=None, help='Concurrent oracle workers')
    parser.add_argument('--seed', type=int, default=0, help='Seed for cut spot-checks')
    parser.add_argument('--output-dir', default=None, help='Report directory (default: the config output directory)')
    parser.add_argument('--log-level', default='INFO', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    parser.add_argument('--log-dir', default=None, help=f"Log file directory (default: {AppConfig.LOG_DIR})")

    verbs = parser.add_subparsers(dest='verb', required=True)

    p = verbs.add_parser('solve', help='Robust policy, naive policy and the scenario comparison')
    p.add_argument('config', help='Config file or bundled experiment name')

    p = verbs.add_parser('evaluate', help='Price a saved policy over the grid or at given tuples')
    p.add_argument('config')
    p.add_argument('policy', help='Policy CSV written by solve')
    p.add_argument('--tuple', dest='tuples', type=parse_tuple, action='append', default=[],
                   help='Contagion tuple p1,p2,d; repeatable')

    p = verbs.add_parser('oos', help='Out-of-sample test of a saved policy')
    p.add_argument('config')
    p.add_argument('policy')
    p.add_argument('--tuple', dest='tuples', type=parse_tuple, action='append', default=[])
    p.add_argument('--certified', type=float, default=None, help='Certified worst-case cost of the policy')

    p = verbs.add_parser('cost-benefit', help='Re-solve over a list of budgets')
    p.add_argument('config')
    p.add_argument('--budgets', type=float, nargs='+', default=None)

    p = verbs.add_parser('p-scan', help='Cost against a constant contagion probability')
    p.add_argument('config')
    p.add_argument('--policy', action='append', default=[], metavar='NAME=CSV',
                   help='Policy to scan, e.g. robust=results/example1/policy.csv; solves when omitted')

    p = verbs.add_parser('validate-config', help='Validate a config and echo its summary')
    p.add_argument('config')
    return parser


def _load(args):
    config = load_config(args.config)
    if args.workers:
        config = config.with_solver(workers=args.workers)
    return config, args.output_dir or config.output_dir


def cmd_solve(args) -> int:
    from experiments import run_solve
    config, output_dir = _load(args)
    result = run_solve(config, seed=args.seed)
    paths = emit_reports(result, output_dir)
    print(result.summary.to_string(index=False))
    print(f"Bounds [{result.policy.lower:.10g}, {result.policy.upper:.10g}], "
          f"{'converged' if result.policy.converged else 'NOT converged'}")
    for name, path in paths.items():
        print(f"  {name}: {path}")
    return 0


def cmd_evaluate(args) -> int:
    from experiments import run_evaluate
    config, output_dir = _load(args)
    h = load_policy_csv(args.policy)
    frame = run_evaluate(h, config, args.tuples or None)
    write_frame(frame, os.path.join(output_dir, 'evaluation.csv'))
    print(frame.to_string(index=False))
    return 0


def cmd_oos(args) -> int:
    from experiments import run_out_of_sample
    config, output_dir = _load(args)
    h = load_policy_csv(args.policy)
    policies = {PolicyName.NO_INTERVENTION.value: DeploymentVector.zeros(len(h)), PolicyName.ROBUST.value: h}
    report = run_out_of_sample(policies, config, args.tuples or None, certified_upper=args.certified)
    frame = report.to_frame()
    write_frame(frame, os.path.join(output_dir, 'out_of_sample.csv'))
    print(frame.to_string(index=False))
    return 0


def cmd_cost_benefit(args) -> int:
    from experiments import run_cost_benefit
    config, output_dir = _load(args)
    frame = run_cost_benefit(config, args.budgets, seed=args.seed)
    write_frame(frame, os.path.join(output_dir, 'cost_benefit.csv'))
    print(frame.to_string(index=False))
    return 0


def cmd_p_scan(args) -> int:
    from experiments import run_p_scan, run_solve
    config, output_dir = _load(args)
    T = config.deployment.planner_horizon
    policies = {PolicyName.NO_INTERVENTION.value: DeploymentVector.zeros(T)}
    if args.policy:
        for item in args.policy:
            name, _, path = item.rpartition('=')
            policies[name or PolicyName.ROBUST.value] = load_policy_csv(path)
    else:
        result = run_solve(config, seed=args.seed)
        policies[PolicyName.ROBUST.value] = result.policy.h
        policies[PolicyName.NAIVE.value] = result.naive.h
    frame = run_p_scan(config, policies)
    write_frame(frame, os.path.join(output_dir, 'p_scan.csv'))
    write_json({'p_scan': frame.to_dict(orient='list')}, os.path.join(output_dir, 'p_scan.json'))
    print(frame.to_string(index=False))
    return 0


def cmd_validate_config(args) -> int:
    config = load_config(args.config)
    print(json.dumps(describe(config), indent=2, sort_keys=True))
    return 0


COMMANDS = {
    'solve': cmd_solve,
    'evaluate': cmd_evaluate,
    'oos': cmd_oos,
    'cost-benefit': cmd_cost_benefit,
    'p-scan': cmd_p_scan,
    'validate-config': cmd_validate_config,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main application entry point"""
    args = build_parser().parse_args(argv)
    setup_logging(level=getattr(logging, args.log_level), log_dir=args.log_dir, run_name=args.verb)
    logger.info(f"Running '{args.verb}'")
    try:
        return COMMANDS[args.verb](args)
    except DOMAIN_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception(f"Unexpected failure in '{args.verb}': {e}")
        print(f"Error: {e}", file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
