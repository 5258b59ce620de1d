"""
Experiment commands: run a config or preset, run a suite, list presets.
"""
import argparse
import json
import logging
import os
import sys
from typing import Dict, Any

from injector import inject

import config.settings as settings
from config.presets import get_preset, preset_names
from models.report import EXIT_CODES, ERROR
from run_manager import SuiteManager
from services.exceptions import LabError, ValidationError
from services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)


def error_payload(error: Exception) -> Dict[str, Any]:
    """Dict-shaped error with the offending config key when known."""
    payload = {'error': str(error), 'type': type(error).__name__}
    key = getattr(error, 'key', None)
    if key:
        payload['key'] = key
    return payload


def emit(payload: Dict[str, Any], stream=None) -> None:
    print(json.dumps(payload, indent=2, default=str), file=stream or sys.stdout)


@inject
def run_experiment(experiment_service: ExperimentService, args: argparse.Namespace) -> int:
    """
    Run one experiment from a JSON config file or a named preset.

    Returns:
        0 pass/success, 1 fail, 2 inconclusive, 3 error
    """
    try:
        if args.preset:
            try:
                data = get_preset(args.preset)
            except KeyError as e:
                raise ValidationError(str(e.args[0]), key='preset') from e
            data.setdefault('output_dir', os.path.join(settings.DEFAULT_OUTPUT_DIR, data.get('name', args.preset)))
            config, checksum = experiment_service.config_from_dict(data)
        elif args.config:
            config, checksum = experiment_service.load_config(args.config)
        else:
            raise ValidationError("Either a config path or --preset is required", key='config_path')

        logger.info(f"Running {config.experiment} '{config.label}'")
        outcome = experiment_service.run(config, checksum)
        emit({
            'label': outcome.label,
            'verdict': outcome.verdict,
            'exit_code': outcome.exit_code,
            'output_dir': str(outcome.output_dir),
            'files': [os.path.basename(str(p)) for p in outcome.paths]
        })
        return outcome.exit_code

    except ValidationError as e:
        logger.error(f"Invalid configuration ({e.key}): {e}")
        emit(error_payload(e), sys.stderr)
        return EXIT_CODES[ERROR]
    except (LabError, ValueError, OSError) as e:
        logger.error(f"Run failed: {e}")
        emit(error_payload(e), sys.stderr)
        return EXIT_CODES[ERROR]


@inject
def run_suite(experiment_service: ExperimentService, args: argparse.Namespace) -> int:
    """Run several configs in parallel; the exit code is the worst of the runs."""
    manager = SuiteManager(experiment_service, max_workers=args.workers or settings.SUITE_WORKERS)
    results = manager.run(args.configs)
    worst = manager.worst_exit_code(results)
    emit({'runs': [r.to_dict() for r in results], 'exit_code': worst})
    return worst


def list_presets(args: argparse.Namespace) -> int:
    if args.name:
        try:
            emit(get_preset(args.name))
        except KeyError as e:
            emit({'error': str(e.args[0]), 'key': 'preset'}, sys.stderr)
            return EXIT_CODES[ERROR]
        return 0
    for name in preset_names():
        preset = get_preset(name)
        print(f"{name}: {preset['experiment']}" + (f" {preset['claim']}" if 'claim' in preset else ''))
    return 0
