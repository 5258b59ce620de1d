"""
Run-ledger model: one row per executed experiment.
"""
import json
from sqlalchemy import Column, Integer, String, DateTime, Text, Float
from datetime import datetime, timezone
from database import Base


class VerificationRun(Base):
    """Model for recorded experiment runs."""
    __tablename__ = 'verification_runs'

    id = Column(Integer, primary_key=True)
    experiment = Column(String(50), nullable=False)
    claim_id = Column(String(50))
    label = Column(String(200))
    verdict = Column(String(20))  # pass, fail, inconclusive, success, error
    exit_code = Column(Integer, nullable=False)
    measured_json = Column(Text)
    bound_json = Column(Text)
    seeds_json = Column(Text)
    config_checksum = Column(String(64))  # SHA-256 of the canonical config JSON
    output_dir = Column(String(1000))
    error_message = Column(String(1000))
    runtime_seconds = Column(Float)
    started_at = Column(DateTime, default=lambda: datetime.now(timezone.utc))
    finished_at = Column(DateTime)

    def __repr__(self):
        return f'<VerificationRun {self.id}: {self.label} {self.verdict}>'

    def to_dict(self):
        """Convert run to dictionary for the history listing."""
        return {
            'id': self.id,
            'experiment': self.experiment,
            'claim_id': self.claim_id,
            'label': self.label,
            'verdict': self.verdict,
            'exit_code': self.exit_code,
            'measured': json.loads(self.measured_json) if self.measured_json else {},
            'bound': json.loads(self.bound_json) if self.bound_json else {},
            'seeds': json.loads(self.seeds_json) if self.seeds_json else {},
            'config_checksum': self.config_checksum,
            'output_dir': self.output_dir,
            'error_message': self.error_message,
            'runtime_seconds': self.runtime_seconds,
            'started_at': self.started_at.isoformat() if self.started_at else None,
            'finished_at': self.finished_at.isoformat() if self.finished_at else None
        }
