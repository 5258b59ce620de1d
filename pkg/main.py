"""
Command-line entry point for the stochastic contraction lab.

    python main.py run config.json
    python main.py run --preset ou_prop1
    python main.py suite a.json b.json
    python main.py history --output-dir output/ou-prop1
    python main.py presets [name]
"""
import argparse
import logging
import sys
from typing import List, Optional

from injector import Injector

import config.settings as settings
from config.injection import ServiceModule
from commands.experiment import run_experiment, run_suite, list_presets
from commands.history import show_history

logger = logging.getLogger(__name__)


def configure_logging() -> None:
    handlers = [logging.StreamHandler(sys.stdout)]
    if settings.LOG_FILE:
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=settings.LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        handlers=handlers
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='main.py', description='Stochastic contraction verification lab')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='run one experiment config')
    run.add_argument('config', nargs='?', help='path to a JSON experiment config')
    run.add_argument('--preset', help='run a named preset instead of a config file')

    suite = sub.add_parser('suite', help='run several configs in parallel')
    suite.add_argument('configs', nargs='+')
    suite.add_argument('--workers', type=int, default=None)

    history = sub.add_parser('history', help='list runs recorded in an output directory')
    history.add_argument('--output-dir', default=None)
    history.add_argument('--limit', type=int, default=20)
    history.add_argument('--claim', default=None)

    presets = sub.add_parser('presets', help='list presets or print one as JSON')
    presets.add_argument('name', nargs='?')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()

    if args.command == 'presets':
        return list_presets(args)

    injector = Injector([ServiceModule()])
    handler = {'run': run_experiment, 'suite': run_suite, 'history': show_history}[args.command]
    try:
        return injector.call_with_injection(handler, kwargs={'args': args})
    except KeyboardInterrupt:
        logger.info("Received keyboard interrupt")
        return 3


if __name__ == '__main__':
    sys.exit(main())
