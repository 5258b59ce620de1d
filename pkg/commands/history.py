"""
Run ledger listing.
"""
import argparse
import logging

from injector import inject

import config.settings as settings
from commands.experiment import emit, error_payload
from models.report import EXIT_CODES, ERROR
from services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)


@inject
def show_history(experiment_service: ExperimentService, args: argparse.Namespace) -> int:
    """Print the most recent recorded runs of an output directory."""
    output_dir = args.output_dir or settings.OUTPUT_DIR or settings.DEFAULT_OUTPUT_DIR
    try:
        runs = experiment_service.history(output_dir, limit=args.limit, claim_id=args.claim)
    except Exception as e:
        logger.error(f"Error reading run ledger in {output_dir}: {e}")
        emit(error_payload(e))
        return EXIT_CODES[ERROR]
    emit({'output_dir': output_dir, 'count': len(runs), 'runs': runs})
    return 0
