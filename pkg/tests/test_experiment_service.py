import json
import os

import numpy as np
import pytest

import config.settings as settings
from config.presets import get_preset
from services.exceptions import ValidationError, DomainError


def simulate_config(tmp_path):
    return {
        'experiment': 'simulate',
        'name': 'ou-pair',
        'drift': {'name': 'ou_linear', 'params': {'c': 0.5}},
        'diffusion': {'name': 'constant_isotropic_diffusion', 'params': {'omega': 0.4}},
        'initial': {'kind': 'gaussian', 'center': [1.0, 1.0], 'scale': 0.5},
        'initial_alt': {'kind': 'gaussian', 'center': [-1.0, -1.0], 'scale': 0.5},
        'numerics': {'dt': 0.01, 'T': 0.5, 'N': 100},
        'output_dir': str(tmp_path / 'simulate')
    }


def lemma_config(tmp_path):
    data = get_preset('lemma_report')
    data['output_dir'] = str(tmp_path / 'lemma')
    return data


def test_unknown_catalog_field(experiment_service, tmp_path):
    data = simulate_config(tmp_path)
    data['drift']['name'] = 'no_such_drift'
    with pytest.raises(ValidationError) as exc:
        experiment_service.config_from_dict(data)
    assert exc.value.key == 'drift.name'


def test_load_config_reports_syntax_position(experiment_service, tmp_path):
    path = tmp_path / 'broken.json'
    path.write_text('{\n  "experiment": "simulate",\n  oops\n}')
    with pytest.raises(ValidationError) as exc:
        experiment_service.load_config(str(path))
    assert exc.value.key.startswith('line 3 column')


def test_load_config_missing_file(experiment_service, tmp_path):
    with pytest.raises(ValidationError) as exc:
        experiment_service.load_config(str(tmp_path / 'missing.json'))
    assert exc.value.key == 'config_path'


def test_checksum_tracks_content(experiment_service, tmp_path):
    path = tmp_path / 'sim.json'
    path.write_text(json.dumps(simulate_config(tmp_path)))
    _, first = experiment_service.load_config(str(path))
    _, again = experiment_service.load_config(str(path))
    data = simulate_config(tmp_path)
    data['numerics']['seed'] = 7
    _, reseeded = experiment_service.config_from_dict(data)
    assert first == again
    assert first != reseeded


def test_output_dir_override(experiment_service, tmp_path, monkeypatch):
    monkeypatch.setattr(settings, 'OUTPUT_DIR', str(tmp_path / 'forced'))
    config, _ = experiment_service.config_from_dict(simulate_config(tmp_path))
    assert config.output_dir == str(tmp_path / 'forced')


def test_lemma_report(experiment_service, tmp_path):
    config, checksum = experiment_service.config_from_dict(lemma_config(tmp_path))
    outcome = experiment_service.run(config, checksum)
    assert outcome.exit_code == 0
    assert outcome.verdict == 'success'
    summary = outcome.artifacts.summary
    assert summary['zero_lhs'] == pytest.approx(0.0, abs=1e-12)
    assert summary['constant_rhs'] == pytest.approx(-3.0 * 2 * np.pi, rel=1e-12)
    assert summary['diag_quadratic_lhs'] == pytest.approx(0.0, abs=1e-10)
    assert all(summary[f'{case}_refinement_stable'] for case in ('zero', 'constant', 'diag_quadratic'))
    names = {p.name for p in outcome.paths}
    assert {'report.txt', 'series_lemma.csv', 'meta.txt'} <= names


def test_simulate_writes_trajectories(experiment_service, tmp_path):
    config, checksum = experiment_service.config_from_dict(simulate_config(tmp_path))
    outcome = experiment_service.run(config, checksum)
    summary = outcome.artifacts.summary
    assert summary['terminal_separation'] == pytest.approx(summary['initial_separation'] * 0.995 ** 50, rel=1e-9)
    assert summary['time'] == pytest.approx(0.5)
    names = {p.name for p in outcome.paths}
    assert {'series_trajectory_x.csv', 'series_trajectory_z.csv', 'ensemble_terminal.csv'} <= names
    assert 'seed' in outcome.artifacts.parameters['numerics']


def test_wasserstein_decreases_under_contraction(experiment_service, tmp_path):
    data = simulate_config(tmp_path)
    data.update({'experiment': 'wasserstein', 'name': 'ou-w2'})
    data['numerics'] = {'dt': 0.01, 'T': 1.0, 'N': 100, 'record_every': 0.1}
    config, checksum = experiment_service.config_from_dict(data)
    outcome = experiment_service.run(config, checksum)
    w2 = outcome.artifacts.series['w2']
    assert len(w2) == 11
    assert w2.columns == ['t', 'w2', 'method']
    header, first = open(os.path.join(outcome.output_dir, 'series_w2.csv')).read().splitlines()[:2]
    assert header == 't,w2,method'
    assert first.endswith(',exact_assignment')
    assert outcome.artifacts.summary['w2_terminal'] < outcome.artifacts.summary['w2_initial']


def test_ledger_records_runs_newest_first(experiment_service, tmp_path):
    config, checksum = experiment_service.config_from_dict(lemma_config(tmp_path))
    experiment_service.run(config, checksum)
    experiment_service.run(config, checksum)
    runs = experiment_service.history(config.output_dir)
    assert len(runs) == 2
    assert runs[0]['id'] > runs[1]['id']
    assert runs[0]['verdict'] == 'success'
    assert runs[0]['config_checksum'] == checksum
    assert runs[0]['seeds'] == {'master': 0}
    assert os.path.exists(os.path.join(config.output_dir, settings.RUN_LEDGER_FILENAME))


def test_failed_run_is_recorded_and_raised(experiment_service, tmp_path):
    data = simulate_config(tmp_path)
    data.update({'experiment': 'verify', 'claim': 'prop1_chi_bound', 'name': 'no-alt'})
    config, checksum = experiment_service.config_from_dict(data)
    with pytest.raises(ValidationError):
        experiment_service.run(config, checksum)
    runs = experiment_service.history(config.output_dir)
    assert runs[0]['verdict'] == 'error'
    assert runs[0]['exit_code'] == 3
    assert 'alt_diffusion' in runs[0]['error_message']


def test_ledger_can_be_disabled(experiment_service, tmp_path, monkeypatch):
    monkeypatch.setattr(settings, 'RUN_LEDGER_ENABLED', False)
    config, checksum = experiment_service.config_from_dict(lemma_config(tmp_path))
    experiment_service.run(config, checksum)
    assert not os.path.exists(os.path.join(config.output_dir, settings.RUN_LEDGER_FILENAME))


@pytest.mark.slow
def test_fpe_solve_preset(experiment_service, tmp_path):
    data = get_preset('double_well_fpe')
    data['output_dir'] = str(tmp_path / 'fpe')
    config, checksum = experiment_service.config_from_dict(data)
    outcome = experiment_service.run(config, checksum)
    summary = outcome.artifacts.summary
    assert summary['mass'] == pytest.approx(1.0, abs=1e-9)
    # tilt 0.1 deepens the left well
    assert summary['mean'][0] < 0.0
    assert 'grid_stationary.csv' in {p.name for p in outcome.paths}


def test_fpe_solve_rejects_grid_without_room_for_the_wells(experiment_service, tmp_path):
    data = get_preset('double_well_fpe')
    data['output_dir'] = str(tmp_path / 'narrow')
    data['grid'] = {'x_min': -1.8, 'x_max': 1.8, 'n_x': 36, 'y_min': -1.8, 'y_max': 1.8, 'n_y': 36}
    config, checksum = experiment_service.config_from_dict(data)
    with pytest.raises(DomainError):
        experiment_service.run(config, checksum)
    runs = experiment_service.history(config.output_dir)
    assert runs[0]['exit_code'] == 3
    assert 'stationary spread' in runs[0]['error_message']
