"""
Repository pattern implementation for the run ledger.
"""

from .base_repository import BaseRepository
from .verification_run_repository import VerificationRunRepository

__all__ = [
    'BaseRepository',
    'VerificationRunRepository'
]
