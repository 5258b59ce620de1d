import json

import numpy as np
import pytest

from models.measures import GridSpec, GridDensity
from models.report import RunArtifacts, SeriesTable, VerificationReport, PASS
from services.exceptions import ArtifactError


def artifacts_with_report():
    series = SeriesTable(['t', 'w2'])
    series.append(0.0, 2.5)
    series.append(0.1, 2.25)
    report = VerificationReport('thm1_decay', PASS, measured={'decay_rate': 1.01}, bound={'decay_rate_min': 1.0},
                                provenance={'seeds': {'master': 11}}, series={'w2': series})
    return RunArtifacts('verify', 'ou-thm1', report=report, seeds={'initial_stream': 1},
                        parameters={'numerics': {'seed': 11}}, config_checksum='abc123')


def test_grid_csv_round_trip(artifact_service, tmp_path):
    grid = GridSpec(-1.5, 2.0, 7, -3.0, 1.0, 5)
    values = np.random.default_rng(0).random(grid.shape) / 3.0
    path = artifact_service.write_grid_csv(tmp_path / 'grid_kde.csv', GridDensity(grid, values, 1.25))
    loaded = artifact_service.read_grid_csv(str(path))
    assert loaded.grid == grid
    assert loaded.time == 1.25
    np.testing.assert_allclose(loaded.values, values, rtol=1e-12, atol=0)


def test_grid_header_layout(artifact_service, tmp_path):
    grid = GridSpec(-1.0, 1.0, 3, -1.0, 1.0, 2)
    path = artifact_service.write_grid_csv(tmp_path / 'grid_g.csv', GridDensity(grid, np.ones(grid.shape)))
    lines = path.read_text().splitlines()
    assert lines[0] == 'x_min,x_max,n_x,y_min,y_max,n_y,time'
    assert lines[1] == '-1,1,3,-1,1,2,0'
    assert len(lines) == 2 + 3


def test_series_round_trip(artifact_service, tmp_path):
    table = SeriesTable(['t', 'w2', 'converged'])
    table.append(0.0, 1.5, False)
    table.append(0.5, 0.75, True)
    path = artifact_service.write_series(tmp_path / 'series_w2.csv', table)
    loaded = artifact_service.read_series(str(path))
    assert loaded.columns == ['t', 'w2', 'converged']
    np.testing.assert_array_equal(loaded.column('w2'), [1.5, 0.75])
    np.testing.assert_array_equal(loaded.column('converged'), [0, 1])


def test_emit_plotdata(artifact_service, tmp_path):
    paths = artifact_service.emit_plotdata(str(tmp_path / 'run'), artifacts_with_report())
    names = [p.name for p in paths]
    assert names[0] == 'report.txt'
    assert names[-1] == 'meta.txt'
    assert 'series_w2.csv' in names

    report = (tmp_path / 'run' / 'report.txt').read_text()
    assert 'verdict: pass' in report
    assert 'decay_rate = 1.01' in report

    meta = dict(line.split(': ', 1) for line in (tmp_path / 'run' / 'meta.txt').read_text().splitlines())
    assert json.loads(meta['seeds']) == {'initial_stream': 1, 'master': 11}
    assert meta['config_checksum'] == 'abc123'
    assert 'numpy' in json.loads(meta['versions'])


def test_artifact_name_cannot_escape(artifact_service, tmp_path):
    artifacts = RunArtifacts('simulate', 'escape', tables={'../outside': SeriesTable(['x'])})
    with pytest.raises(ArtifactError):
        artifact_service.emit_plotdata(str(tmp_path / 'run'), artifacts)
    assert not (tmp_path / 'outside.csv').exists()


def test_output_path_that_is_a_file(artifact_service, tmp_path):
    blocker = tmp_path / 'taken'
    blocker.write_text('')
    with pytest.raises(ArtifactError):
        artifact_service.emit_plotdata(str(blocker), RunArtifacts('simulate', 'blocked'))
