"""
Plot-ready artifact files for a finished run.

Layout of ``<output_dir>``:
    report.txt          human-readable summary and verdict
    series_<name>.csv   header row of column names, one row per record
    <table>.csv         auxiliary tables (e.g. ensemble_terminal.csv)
    grid_<name>.csv     line 1: x_min,x_max,n_x,y_min,y_max,n_y,time
                        line 2: the corresponding values
                        then n_x rows of n_y values (row i is x-centre i)
    meta.txt            seeds, versions, parameters, config checksum
"""
import json
import logging
import platform
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Any, List

import numpy as np

from models.measures import GridSpec, GridDensity
from models.report import RunArtifacts, SeriesTable
from services.exceptions import ArtifactError

logger = logging.getLogger(__name__)

GRID_HEADER = 'x_min,x_max,n_x,y_min,y_max,n_y,time'
VERSIONED_PACKAGES = ('numpy', 'scipy', 'SQLAlchemy', 'injector', 'python-dotenv')


class ArtifactService:
    """Service writing run artifacts confined to one output directory."""

    def emit_plotdata(self, output_dir: str, artifacts: RunArtifacts) -> List[Path]:
        """
        Write report, series, tables, grids and meta files.

        Returns:
            Paths written, in write order

        Raises:
            ArtifactError: Directory cannot be created or written
        """
        root = self._prepare(output_dir)
        written = [self._write_text(root, 'report.txt', self.render_report(artifacts))]
        for name, table in artifacts.all_series().items():
            written.append(self.write_series(root / self._safe_name(root, f'series_{name}.csv'), table))
        for name, table in artifacts.tables.items():
            written.append(self.write_series(root / self._safe_name(root, f'{name}.csv'), table))
        for name, grid in artifacts.all_grids().items():
            written.append(self.write_grid_csv(root / self._safe_name(root, f'grid_{name}.csv'), grid))
        written.append(self._write_text(root, 'meta.txt', self.render_meta(artifacts)))
        logger.info(f"Wrote {len(written)} artifacts to {root}")
        return written

    def render_report(self, artifacts: RunArtifacts) -> str:
        lines = [f"experiment: {artifacts.experiment}", f"label: {artifacts.label}"]
        report = artifacts.report
        if report is not None:
            lines += [f"claim: {report.claim_id}", f"verdict: {report.verdict}"]
            if report.unmet_hypothesis:
                lines.append(f"unmet hypothesis: {report.unmet_hypothesis}")
            lines.append('measured:')
            lines += [f"  {k} = {self._fmt(v)}" for k, v in report.measured.items()]
            lines.append('bound:')
            lines += [f"  {k} = {self._fmt(v)}" for k, v in report.bound.items()]
            notes = report.notes + artifacts.notes
        else:
            notes = artifacts.notes
        if artifacts.summary:
            lines.append('summary:')
            lines += [f"  {k} = {self._fmt(v)}" for k, v in artifacts.summary.items()]
        if notes:
            lines.append('notes:')
            lines += [f"  - {n}" for n in notes]
        return '\n'.join(lines) + '\n'

    def render_meta(self, artifacts: RunArtifacts) -> str:
        seeds = dict(artifacts.seeds)
        if artifacts.report is not None:
            seeds.update(artifacts.report.seeds)
        versions = {'python': platform.python_version()}
        for package in VERSIONED_PACKAGES:
            try:
                versions[package] = metadata.version(package)
            except metadata.PackageNotFoundError:
                versions[package] = 'unknown'
        lines = [
            f"written_at: {datetime.now(timezone.utc).isoformat()}",
            f"seeds: {json.dumps(seeds, sort_keys=True)}",
            f"versions: {json.dumps(versions, sort_keys=True)}",
            f"config_checksum: {artifacts.config_checksum or ''}",
            f"parameters: {json.dumps(artifacts.parameters, sort_keys=True, default=self.json_default)}"
        ]
        if artifacts.report is not None:
            lines.append(f"provenance: {json.dumps(artifacts.report.provenance, sort_keys=True, default=self.json_default)}")
        return '\n'.join(lines) + '\n'

    def write_series(self, path: Path, table: SeriesTable) -> Path:
        try:
            with open(path, 'w') as fh:
                fh.write(','.join(table.columns) + '\n')
                for row in table.rows:
                    fh.write(','.join(self._cell(v) for v in row) + '\n')
        except OSError as e:
            logger.error(f"Cannot write {path}: {e}")
            raise ArtifactError(f"Cannot write {path}: {e}") from e
        return path

    def write_grid_csv(self, path: Path, density: GridDensity) -> Path:
        g = density.grid
        header = f"{GRID_HEADER}\n" + ','.join(
            self._cell(v) for v in (g.x_min, g.x_max, g.n_x, g.y_min, g.y_max, g.n_y, density.time))
        try:
            np.savetxt(path, density.values, fmt='%.17g', delimiter=',', header=header, comments='')
        except OSError as e:
            logger.error(f"Cannot write {path}: {e}")
            raise ArtifactError(f"Cannot write {path}: {e}") from e
        return path

    def read_grid_csv(self, path: str) -> GridDensity:
        with open(path) as fh:
            names = fh.readline().strip().split(',')
            values = fh.readline().strip().split(',')
        if names != GRID_HEADER.split(','):
            raise ArtifactError(f"{path} is not a grid file (header {names})")
        head = dict(zip(names, values))
        grid = GridSpec(float(head['x_min']), float(head['x_max']), int(head['n_x']),
                        float(head['y_min']), float(head['y_max']), int(head['n_y']))
        data = np.loadtxt(path, delimiter=',', skiprows=2, ndmin=2)
        return GridDensity(grid, data, float(head['time']))

    def read_series(self, path: str) -> SeriesTable:
        with open(path) as fh:
            columns = fh.readline().strip().split(',')
            table = SeriesTable(columns)
            for line in fh:
                if line.strip():
                    table.append(*(self._parse(v) for v in line.strip().split(',')))
        return table

    # Internals

    @staticmethod
    def _prepare(output_dir: str) -> Path:
        root = Path(output_dir).resolve()
        try:
            root.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            logger.error(f"Cannot create output directory {root}: {e}")
            raise ArtifactError(f"Cannot create output directory {root}: {e}") from e
        if not root.is_dir():
            raise ArtifactError(f"Output path {root} is not a directory")
        return root

    @staticmethod
    def _safe_name(root: Path, name: str) -> str:
        if (root / name).resolve().parent != root:
            raise ArtifactError(f"Artifact name '{name}' escapes the output directory")
        return name

    def _write_text(self, root: Path, name: str, content: str) -> Path:
        path = root / self._safe_name(root, name)
        try:
            path.write_text(content)
        except OSError as e:
            logger.error(f"Cannot write {path}: {e}")
            raise ArtifactError(f"Cannot write {path}: {e}") from e
        return path

    @staticmethod
    def _cell(value: Any) -> str:
        if isinstance(value, (bool, np.bool_)):
            return str(int(value))
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return '%.17g' % value
        if value is None:
            return ''
        return str(value)

    @staticmethod
    def _parse(text: str) -> Any:
        if text == '':
            return None
        try:
            return int(text)
        except ValueError:
            pass
        try:
            return float(text)
        except ValueError:
            return text

    @classmethod
    def _fmt(cls, value: Any) -> str:
        if isinstance(value, (float, np.floating)):
            return '%.6g' % value
        if isinstance(value, np.ndarray):
            return json.dumps(value.tolist())
        return str(value)

    @staticmethod
    def json_default(value: Any) -> Any:
        if isinstance(value, np.ndarray):
            return value.tolist()
        if isinstance(value, (np.floating, np.integer)):
            return value.item()
        return str(value)
