"""
Domain types and the run-ledger model.
"""
from .fields import DriftField, DiffusionField
from .ensemble import ParticleEnsemble
from .measures import GridSpec, GridDensity
from .report import VerificationReport, SeriesTable, RunArtifacts
from .verification_run import VerificationRun

# Import Base for table creation
from database import Base

__all__ = [
    'DriftField',
    'DiffusionField',
    'ParticleEnsemble',
    'GridSpec',
    'GridDensity',
    'VerificationReport',
    'SeriesTable',
    'RunArtifacts',
    'VerificationRun',
    'Base'
]
