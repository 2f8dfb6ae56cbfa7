import json
import os

import pytest

import zeromode.app
from zeromode.app import ZeroMode
from zeromode.utils.data_controller import CATALOG_NAME
from zeromode.utils.data_controller import RunController
from zeromode.utils.misc import ConvergenceError

FIELDTHEORY_RUN = ['run', 'fieldtheory', '--preset', 'paper-2024', '--samples', '2000', '--t', '0:0.03:7']


def run_cli(*argv) -> int:
    return ZeroMode(list(argv)).main()


def read_summary(output_dir: str, name: str) -> dict:
    with open(os.path.join(output_dir, f'{name}.summary.json'), encoding='utf-8') as file:
        return json.load(file)


def test_help_and_version_exit_cleanly():
    assert run_cli('--help') == 0
    assert run_cli('--version') == 0


def test_usage_errors_exit_with_input_status():
    assert run_cli('run', 'harmonic-crystal') == 1
    assert run_cli('run', 'cho2', '--bogus') == 1
    assert run_cli() == 1


def test_presets_listing(capsys):
    assert run_cli('presets') == 0
    out = capsys.readouterr().out
    for name in ('fig2', 'fig3', 'fig4a', 'fig4b', 'fig4c', 'fig5', 'paper-2024'):
        assert name in out


def test_presets_listing_columns_align(capsys):
    assert run_cli('presets') == 0
    rows = [line for line in capsys.readouterr().out.splitlines() if not line.startswith(' ')]
    scenario_columns = {line.index(line.split()[1]) for line in rows}
    assert len(rows) == 7
    assert len(scenario_columns) == 1


def test_fieldtheory_run_writes_artifacts(output_dir):
    assert run_cli(*FIELDTHEORY_RUN, '--output', output_dir) == 0
    for suffix in ('.csv', '.schema.json', '.summary.json'):
        assert os.path.exists(os.path.join(output_dir, f'fieldtheory{suffix}'))

    summary = read_summary(output_dir, 'fieldtheory')
    assert 10.8e-3 <= summary['scalars']['t_c'] <= 13.2e-3
    assert summary['config']['preset'] == 'paper-2024'
    assert summary['parameter_sources']['samples'] == 'command line'
    assert summary['parameter_sources']['L'] == 'preset paper-2024'

    with open(os.path.join(output_dir, 'fieldtheory.csv'), encoding='utf-8') as file:
        lines = file.read().splitlines()
    assert lines[0] == 't,sigma_sq,angle_variance,wrapped_variance'
    assert len(lines) == 8

    with open(os.path.join(output_dir, 'fieldtheory.schema.json'), encoding='utf-8') as file:
        schema = json.load(file)
    assert [column['name'] for column in schema['columns']] == lines[0].split(',')

    with RunController(output_dir) as controller:
        runs = controller.runs()
        assert [run.status for run in runs] == ['ok']
        assert runs[0].scenario == 'fieldtheory'
        assert runs[0].scalar_dict()['t_c'] == pytest.approx(summary['scalars']['t_c'])


def test_repeated_run_is_reproducible(tmp_path):
    tables = []
    for name in ('first', 'second'):
        output_dir = str(tmp_path / name)
        assert run_cli(*FIELDTHEORY_RUN, '--seed', '11', '--output', output_dir) == 0
        with open(os.path.join(output_dir, 'fieldtheory.csv'), 'rb') as file:
            tables.append(file.read())
    assert tables[0] == tables[1]


def test_catalog_accumulates_runs(output_dir, capsys):
    assert run_cli('run', 'cho2', '--t', 'log:1:100:5', '--output', output_dir) == 0
    assert run_cli('run', 'cho2', '--kappa', '10', '--t', 'log:1:100:5', '--output', output_dir) == 0
    with open(os.path.join(output_dir, 'cho2.csv'), encoding='utf-8') as file:
        assert file.readline().strip() == 't,S,xi,l_Xs,l_Xa,l_Ps,l_Pa'
    capsys.readouterr()
    assert run_cli('catalog', '--output', output_dir) == 0
    out = capsys.readouterr().out
    assert out.count('cho2') == 2


def test_config_error_points_at_line(tmp_path, output_dir, capsys):
    path = tmp_path / 'bad.ini'
    path.write_text('[run]\nscenario = cho2\n[parameters]\nkappa = -3\n', encoding='utf-8')
    assert run_cli('run', '--config', str(path), '--output', output_dir) == 1
    assert f'{path}:4:' in capsys.readouterr().err


def test_numerical_failure_is_recorded(output_dir, monkeypatch):
    def fail(config, sweeper):
        raise ConvergenceError('Lanczos ground-state search did not converge')

    monkeypatch.setattr(zeromode.app, 'run_scenario', fail)
    assert run_cli('run', 'cho2', '--output', output_dir) == 2
    with RunController(output_dir) as controller:
        run = controller.runs()[-1]
        assert run.status == 'numerical-error'
        assert 'Lanczos' in run.message


def test_foreign_catalog_is_rejected(output_dir):
    os.makedirs(output_dir)
    with open(os.path.join(output_dir, CATALOG_NAME), 'w', encoding='utf-8') as file:
        file.write('not a database')
    assert run_cli('run', 'cho2', '--t', 'log:1:10:3', '--output', output_dir) == 1


def test_unexpected_failure_is_recorded(output_dir, monkeypatch):
    def fail(config, sweeper):
        raise RuntimeError('worker crashed')

    monkeypatch.setattr(zeromode.app, 'run_scenario', fail)
    with pytest.raises(RuntimeError):
        run_cli('run', 'cho2', '--output', output_dir)
    with RunController(output_dir) as controller:
        run = controller.runs()[-1]
        assert run.status == 'failed'
        assert run.message == 'RuntimeError: worker crashed'
