"""
Unittest for cli.py
"""

import pytest
import numpy as np
import pandas as pd

from altplan.cli import RESOLVED_CONFIG, build_parser, main
from altplan.loader import load_dataset, read_config, scenario_from_config


SCENARIO = """\
[scenario]
basis = linear
beta = 12.5, -19.5
sigma = 0.5
design_stress = 0.05
reference_stress = 0.1
target_censoring = 0.95
stress_min = 0.1
stress_max = 0.9
"""

PLAN = """\
[plan]
stresses = 0.2, 0.9
allocations = 82, 18
"""

SMOKE = ['--generations', '1', '--population', '4', '--search-n-sim', '5',
         '--report-n-sim', '5', '--replicates', '2', '--threads', '1',
         '--units', '100', '-q']


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / 'scenario.ini'
    path.write_text(SCENARIO)
    return str(path)


@pytest.fixture
def plan_file(tmp_path):
    path = tmp_path / 'plan.ini'
    path.write_text(SCENARIO + PLAN)
    return str(path)


def read_csv(path):
    return pd.read_csv(path, comment='#')


def test_parser():
    args = build_parser().parse_args(['optimize', 'a.ini', '--fixed-n',
                                      '2..6', '--variable-n', '6',
                                      '--seed', '3'])
    assert args.command == 'optimize'
    assert args.fixed_n == '2..6' and args.variable_n == 6
    assert args.seed == 3


def test_simulate_then_fit(tmp_path, scenario_file):
    out = tmp_path / 'sim'
    code = main(['simulate', scenario_file, '--preliminary', '--seed', '5',
                 '--out-dir', str(out), '-q'])
    assert code == 0
    data = load_dataset(str(out / 'dataset.csv'))
    assert data.n == 180
    summary = read_csv(out / 'censoring-summary.csv')
    assert len(summary) == 9
    assert summary.expected_censored[0] == pytest.approx(0.95, abs=1e-6)
    assert (out / RESOLVED_CONFIG).exists()

    fit_out = tmp_path / 'fit'
    code = main(['fit', str(out / 'dataset.csv'), '--design-stress', '0.05',
                 '--out-dir', str(fit_out), '-q'])
    assert code == 0
    table = read_csv(fit_out / 'aic-table.csv')
    assert list(table.basis) == ['identity', 'poly:2', 'log']
    assert table.selected.sum() == 1
    assert table.design_median.notna().all()
    stub = read_config(str(fit_out / 'selected-model.ini'))
    assert stub.has_option('scenario', 'beta')
    assert stub.get('scenario', 'design_stress') == '0.05'
    # The selected model is a runnable scenario with the preliminary
    # test duration
    assert not data.observed.all()
    scenario, bounds = scenario_from_config(stub)
    assert np.isfinite(scenario.duration)
    assert scenario.duration == pytest.approx(
        data.time[~data.observed].max(), rel=1e-12)
    assert bounds == (pytest.approx(0.1), pytest.approx(0.9))


def test_simulate_plan(tmp_path, plan_file):
    code = main(['simulate', plan_file, '--out-dir', str(tmp_path), '-q'])
    assert code == 0
    summary = read_csv(tmp_path / 'censoring-summary.csv')
    assert list(summary.units) == [82, 18]


def test_fit_errors(tmp_path):
    empty = tmp_path / 'empty.csv'
    empty.write_text('')
    assert main(['fit', str(empty), '--out-dir', str(tmp_path), '-q']) == 2
    single = tmp_path / 'single.csv'
    single.write_text('stress,time,status\n' +
                      ''.join('0.5,%d,1\n' % t for t in range(1, 11)))
    assert main(['fit', str(single), '--out-dir', str(tmp_path), '-q']) == 3
    assert main(['fit', str(tmp_path / 'missing.csv'), '--out-dir',
                 str(tmp_path), '-q']) == 2


def test_optimize_smoke(tmp_path, scenario_file):
    out = tmp_path / 'opt'
    code = main(['optimize', scenario_file, '--fixed-n', '2,3',
                 '--variable-n', '3', '--out-dir', str(out)] + SMOKE)
    assert code == 0
    report = read_csv(out / 'plan-report.csv')
    assert list(report.label) == ['2', '3', '3*']
    assert (report.allocations.map(lambda a: sum(map(int, a.split())))
            == 100).all()
    trace = read_csv(out / 'generation-trace.csv')
    assert len(trace) == 6
    assert (out / 'plan-table.txt').exists()


def test_optimize_reproducible(tmp_path, scenario_file):
    out1, out2 = tmp_path / 'a', tmp_path / 'b'
    assert main(['optimize', scenario_file, '--seed', '9',
                 '--out-dir', str(out1)] + SMOKE) == 0
    assert main(['optimize', '--config', str(out1 / RESOLVED_CONFIG),
                 '--out-dir', str(out2), '-q']) == 0
    for name in ['plan-report.csv', 'generation-trace.csv']:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_optimize_errors(tmp_path, scenario_file):
    assert main(['optimize', scenario_file, '--granularity', '1',
                 '--fixed-n', '3', '--out-dir', str(tmp_path)] + SMOKE) == 2
    no_bounds = tmp_path / 'nb.ini'
    no_bounds.write_text(SCENARIO.replace('stress_min = 0.1\n', ''))
    assert main(['optimize', str(no_bounds), '--out-dir',
                 str(tmp_path)] + SMOKE) == 2


def test_compare(tmp_path, plan_file):
    variants = tmp_path / 'variants.csv'
    variants.write_text('stresses,allocations\n0.2 0.9,82 18\n'
                        '0.2 0.9,70 30\n')
    args = ['--report-n-sim', '5', '--replicates', '2', '--threads', '1',
            '-q']
    code = main(['compare', plan_file, str(variants), '--out-dir',
                 str(tmp_path)] + args)
    assert code == 0
    df = read_csv(tmp_path / 'comparison.csv')
    assert list(df.variant) == [0, 1, 2]
    assert df['diff'][1] == 0

    code = main(['compare', plan_file, '--out-dir', str(tmp_path)] + args)
    assert code == 0
    assert len(read_csv(tmp_path / 'comparison.csv')) == 8

    variants.write_text('stresses,allocations\n0.2 0.9,80 10\n')
    assert main(['compare', plan_file, str(variants), '--out-dir',
                 str(tmp_path)] + args) == 2
