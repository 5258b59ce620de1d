"""
Suite manager running independent experiment configs in parallel.
"""
import logging
import signal
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass
from typing import List, Optional, Sequence

import config.settings as settings
from models.report import EXIT_CODES, ERROR
from services.exceptions import LabError
from services.experiment_service import ExperimentService

logger = logging.getLogger(__name__)


@dataclass
class SuiteResult:
    config_path: str
    exit_code: int
    verdict: str
    output_dir: Optional[str] = None
    error: Optional[str] = None

    def to_dict(self):
        return {
            'config_path': self.config_path,
            'exit_code': self.exit_code,
            'verdict': self.verdict,
            'output_dir': self.output_dir,
            'error': self.error
        }


class SuiteManager:
    """Manager for running several verification configs; each run owns its seeds and buffers."""

    def __init__(self, experiment_service: ExperimentService, max_workers: int = settings.SUITE_WORKERS):
        """Initialize suite manager."""
        self.experiment_service = experiment_service
        self.max_workers = max(1, int(max_workers))
        self.executor = None
        self.shutdown_event = threading.Event()

        # Signal handlers can only be installed from the main thread
        if threading.current_thread() is threading.main_thread():
            signal.signal(signal.SIGINT, self._signal_handler)
            signal.signal(signal.SIGTERM, self._signal_handler)

    def _signal_handler(self, signum, frame):
        """Handle shutdown signals."""
        logger.info(f"Received signal {signum}, cancelling pending runs...")
        self.shutdown()

    def run(self, config_paths: Sequence[str]) -> List[SuiteResult]:
        """Run every config; results keep the input order."""
        logger.info(f"Starting suite of {len(config_paths)} runs with {self.max_workers} workers")
        results: List[Optional[SuiteResult]] = [None] * len(config_paths)
        self.executor = ThreadPoolExecutor(max_workers=self.max_workers, thread_name_prefix="suite")
        try:
            futures = {self.executor.submit(self._run_one, path): i for i, path in enumerate(config_paths)}
            for future in as_completed(futures):
                i = futures[future]
                try:
                    results[i] = future.result()
                except Exception as e:
                    logger.error(f"Run {config_paths[i]} failed: {e}")
                    results[i] = SuiteResult(config_paths[i], EXIT_CODES[ERROR], ERROR, error=str(e))
        finally:
            self.shutdown()
        return [r if r is not None else SuiteResult(config_paths[i], EXIT_CODES[ERROR], ERROR, error='cancelled')
                for i, r in enumerate(results)]

    def _run_one(self, config_path: str) -> SuiteResult:
        """Run a single config with error handling."""
        if self.shutdown_event.is_set():
            return SuiteResult(config_path, EXIT_CODES[ERROR], ERROR, error='cancelled')
        try:
            logger.info(f"Run {config_path} started")
            config, checksum = self.experiment_service.load_config(config_path)
            outcome = self.experiment_service.run(config, checksum)
            return SuiteResult(config_path, outcome.exit_code, outcome.verdict, output_dir=outcome.output_dir)
        except (LabError, ValueError) as e:
            logger.error(f"Run {config_path} failed: {e}")
            return SuiteResult(config_path, EXIT_CODES[ERROR], ERROR, error=str(e))
        finally:
            logger.info(f"Run {config_path} stopped")

    @staticmethod
    def worst_exit_code(results: Sequence[SuiteResult]) -> int:
        return max((r.exit_code for r in results), default=0)

    def shutdown(self) -> None:
        """Stop accepting runs and wait for the ones in flight."""
        self.shutdown_event.set()
        if self.executor:
            self.executor.shutdown(wait=True, cancel_futures=True)
            self.executor = None
