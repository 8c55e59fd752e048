"""
Experiment runner for the indoor THz coverage engine

    python cli.py run config/experiments.json --out results --trials 100000
"""
import sys
import json
import logging
import argparse
from typing import List, Optional

from config.settings import Settings
from models.exceptions import ConfigError, ConvergenceError, DomainError
from services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='thz-coverage',
                                     description='Indoor THz coverage experiments: analysis curves and Monte Carlo points')
    sub = parser.add_subparsers(dest='command', required=True)
    run = sub.add_parser('run', help='run the experiments of a config or manifest file')
    run.add_argument('config', help='JSON configuration or a manifest.json from an earlier run')
    run.add_argument('--out', default='results', help='output directory (default: results)')
    run.add_argument('--trials', type=int, default=None, help='Monte Carlo trials per point')
    run.add_argument('--seed', type=int, default=None, help='64-bit RNG seed')
    run.add_argument('--no-sim', action='store_true', help='analysis curves only')
    run.add_argument('--log-level', default=None, help='logging level (default: LOG_LEVEL)')
    return parser


def run(config_path: str, out_dir: str = 'results', trials: Optional[int] = None,
        seed: Optional[int] = None, simulate: Optional[bool] = None) -> int:
    """Run a configuration file; returns the process exit status"""
    service = ExperimentService()
    try:
        with open(config_path, 'r', encoding='utf-8') as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot read configuration {config_path}: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        config = service.resolve_config(raw, trials=trials, seed=seed, simulate=simulate)
        service.run(config, out_dir)
    except OSError as e:
        service.remove_outputs()
        print(f"error: cannot write outputs to {out_dir}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, DomainError) as e:
        service.remove_outputs()
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceError, ArithmeticError) as e:
        service.remove_outputs()
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    Settings.configure_logging(args.log_level)
    logger.info(f"Running {args.config} into {args.out}")
    return run(args.config, out_dir=args.out, trials=args.trials, seed=args.seed,
               simulate=False if args.no_sim else None)


if __name__ == '__main__':
    sys.exit(main())
