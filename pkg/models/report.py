"""
Verification report and companion series models.
"""
from dataclasses import dataclass, field
from typing import Dict, Any, List, Optional, Sequence

import numpy as np

from models.measures import GridDensity

PASS = 'pass'
FAIL = 'fail'
INCONCLUSIVE = 'inconclusive'

CLAIMS = ('thm1_decay', 'prop1_chi_bound', 'prop2_mass_sink', 'thm2_concentration')

SUCCESS = 'success'
ERROR = 'error'
EXIT_CODES = {PASS: 0, SUCCESS: 0, FAIL: 1, INCONCLUSIVE: 2, ERROR: 3}


@dataclass
class SeriesTable:
    """Plot-ready table written as series_<name>.csv."""
    columns: List[str]
    rows: List[Sequence[Any]] = field(default_factory=list)

    def append(self, *values: Any) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"Row has {len(values)} values, expected {len(self.columns)}")
        self.rows.append(values)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])

    def __len__(self) -> int:
        return len(self.rows)


@dataclass
class VerificationReport:
    claim_id: str
    verdict: str
    measured: Dict[str, Any] = field(default_factory=dict)
    bound: Dict[str, Any] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)
    unmet_hypothesis: Optional[str] = None
    series: Dict[str, SeriesTable] = field(default_factory=dict)
    grids: Dict[str, GridDensity] = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in (PASS, FAIL, INCONCLUSIVE):
            raise ValueError(f"Unknown verdict '{self.verdict}'")
        if self.verdict == INCONCLUSIVE and self.unmet_hypothesis is None and not self.notes:
            raise ValueError("An inconclusive report must name the unmet hypothesis or carry a note")

    @property
    def seeds(self) -> Dict[str, int]:
        return self.provenance.get('seeds', {})

    def to_dict(self) -> Dict[str, Any]:
        return {
            'claim_id': self.claim_id,
            'verdict': self.verdict,
            'measured': dict(self.measured),
            'bound': dict(self.bound),
            'provenance': dict(self.provenance),
            'notes': list(self.notes),
            'unmet_hypothesis': self.unmet_hypothesis
        }


@dataclass
class RunArtifacts:
    """Everything a finished run hands to the artifact writer."""
    experiment: str
    label: str
    report: Optional[VerificationReport] = None
    summary: Dict[str, Any] = field(default_factory=dict)
    series: Dict[str, SeriesTable] = field(default_factory=dict)
    tables: Dict[str, SeriesTable] = field(default_factory=dict)  # written as <name>.csv
    grids: Dict[str, GridDensity] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    parameters: Dict[str, Any] = field(default_factory=dict)
    config_checksum: Optional[str] = None
    notes: List[str] = field(default_factory=list)

    def all_series(self) -> Dict[str, SeriesTable]:
        merged = dict(self.report.series) if self.report is not None else {}
        merged.update(self.series)
        return merged

    def all_grids(self) -> Dict[str, GridDensity]:
        merged = dict(self.report.grids) if self.report is not None else {}
        merged.update(self.grids)
        return merged
