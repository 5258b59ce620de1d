import json

import pytest

import run_manager
from config.presets import get_preset
from run_manager import SuiteManager, SuiteResult


@pytest.fixture
def manager(experiment_service, monkeypatch):
    monkeypatch.setattr(run_manager.signal, 'signal', lambda *args: None)
    return SuiteManager(experiment_service, max_workers=2)


def write_config(path, data):
    path.write_text(json.dumps(data))
    return str(path)


def test_worst_exit_code():
    results = [SuiteResult('a', 0, 'pass'), SuiteResult('b', 2, 'inconclusive'), SuiteResult('c', 1, 'fail')]
    assert SuiteManager.worst_exit_code(results) == 2
    assert SuiteManager.worst_exit_code([]) == 0


def test_suite_keeps_input_order(manager, tmp_path):
    good = get_preset('lemma_report')
    good['output_dir'] = str(tmp_path / 'lemma')
    paths = [
        write_config(tmp_path / 'good.json', good),
        write_config(tmp_path / 'bad.json', {'experiment': 'lemma-report', 'colour': 'blue'}),
        str(tmp_path / 'missing.json'),
    ]
    results = manager.run(paths)
    assert [r.config_path for r in results] == paths
    assert [r.exit_code for r in results] == [0, 3, 3]
    assert results[0].verdict == 'success'
    assert 'colour' in results[1].error
    assert SuiteManager.worst_exit_code(results) == 3


def test_shutdown_before_run_cancels(manager, tmp_path):
    manager.shutdown()
    result = manager._run_one(str(tmp_path / 'any.json'))
    assert result.error == 'cancelled'
    assert result.exit_code == 3
