"""
Run ledger repository.
"""
from typing import List, Optional
from sqlalchemy import desc
from sqlalchemy.orm import Session

from repositories.base_repository import BaseRepository
from models.verification_run import VerificationRun


class VerificationRunRepository(BaseRepository[VerificationRun]):

    def __init__(self):
        super().__init__(VerificationRun)

    def get_recent(self, session: Session, limit: int = 20, claim_id: Optional[str] = None) -> List[VerificationRun]:
        """Most recent runs, newest first, optionally for a single claim."""
        return self.query(session, claim_id=claim_id).order_by(desc(VerificationRun.id)).limit(limit).all()
