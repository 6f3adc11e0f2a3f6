"""
Full-scale optimal plan studies (minutes to hours: run with `pytest -m slow`).

Expected values are the published optimal plans of the linear, quadratic
and power-law scenarios and of the voltage case study. Bands absorb the
Monte Carlo and optimizer noise.
"""

from concurrent.futures import ProcessPoolExecutor

import pytest
import numpy as np

from altplan.deopt import DeConfig
from altplan.fit.weibull_aft import AftParams
from altplan.lifestress import linear_model, power_law_model, quadratic_model
from altplan.planner import (StudyConfig, calibrated_scenario,
                             compare_neighborhood, dominant_levels,
                             pairwise_differences, rule_of_thumb_plan,
                             run_fixed_n_study, run_variable_n_study)
from altplan.simulator import Scenario, TestPlan
from altplan.utils.misc import available_workers


pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def executor():
    with ProcessPoolExecutor(max_workers=available_workers()) as ex:
        yield ex


def study(scenario, bounds=(0.1, 0.9), total_units=100, seed=2018, **kw):
    return StudyConfig(scenario, bounds, total_units,
                       de_config=DeConfig(generations=50), search_n_sim=200,
                       report_n_sim=1000, report_replicates=100,
                       master_seed=seed, **kw)


@pytest.fixture(scope="module")
def linear_config():
    scenario = Scenario(linear_model(), AftParams((12.5, -19.5), 0.5), 0.05)
    return study(calibrated_scenario(scenario, 0.1, 0.95))


@pytest.fixture(scope="module")
def quadratic_config():
    scenario = Scenario(quadratic_model(),
                        AftParams((13.4, -37.9, 17.7), 0.5), 0.05)
    return study(calibrated_scenario(scenario, 0.1, 0.8))


@pytest.fixture(scope="module")
def linear_reports(linear_config, executor):
    return run_fixed_n_study(linear_config, [2, 3, 4, 5, 6],
                             executor=executor)


def non_increasing_dominant(plan, granularity):
    _, alloc = dominant_levels(plan, granularity=granularity)
    return np.all(np.diff(alloc) <= 0)


def test_linear_two_point(linear_config, linear_reports):
    report = linear_reports[0]
    s1, s2 = report.plan.stresses
    print('\n [linear N=2] %s %s mean %.0f SE %.0f'
          % (report.plan.stresses, report.plan.allocations,
             report.mean_rmse, report.std_error))
    assert 0.17 <= s1 <= 0.23
    assert 0.85 <= s2 <= 0.90
    assert 75 <= report.plan.allocations[0] <= 90
    assert 6300 <= report.mean_rmse <= 7900
    assert non_increasing_dominant(report.plan, linear_config.granularity)


def test_linear_cross_n(linear_reports):
    df = pairwise_differences(linear_reports)
    print('\n [linear cross-N]\n%s' % df)
    assert df.indistinguishable.all()


def test_linear_variable_n(linear_config, executor):
    report = run_variable_n_study(linear_config, 6, executor=executor)
    stresses, alloc = dominant_levels(report.plan,
                                      granularity=linear_config.granularity)
    print('\n [linear variable N] %s %s' % (stresses, alloc))
    assert stresses.size == 2
    assert stresses[0] == pytest.approx(0.19, abs=0.03)
    assert stresses[1] == pytest.approx(0.90, abs=0.02)
    assert alloc[0] >= alloc[1]


def test_linear_neighborhood(linear_config, executor):
    scenario = linear_config.scenario
    optimum = TestPlan([0.2, 0.9], [82, 18], duration=scenario.duration,
                       design_stress=0.05)
    allocations = [(85, 15), (80, 20), (70, 30), (95, 5)]
    variants = [optimum.replace(allocations=a) for a in allocations]
    df = compare_neighborhood(optimum, scenario, variants, linear_config,
                              executor=executor)
    print('\n [linear neighborhood]\n%s' % df)
    assert list(df.equivalent) == [True, True, True, False, False]


def test_quadratic_three_point(quadratic_config, executor):
    report, = run_fixed_n_study(quadratic_config, [3], executor=executor)
    print('\n [quadratic N=3] %s %s mean %.0f'
          % (report.plan.stresses, report.plan.allocations,
             report.mean_rmse))
    assert np.allclose(report.plan.stresses, [0.13, 0.50, 0.90], atol=0.05)
    assert np.all(np.diff(report.plan.allocations) <= 0)
    assert 8000 <= report.mean_rmse <= 10100

    scenario = quadratic_config.scenario
    rule = rule_of_thumb_plan([0.13, 0.5, 0.9], 100,
                              duration=scenario.duration, design_stress=0.05)
    df = compare_neighborhood(report.plan, scenario, [rule],
                              quadratic_config, executor=executor)
    assert not df.equivalent[1]



def test_quadratic_variable_n(quadratic_config, executor):
    report = run_variable_n_study(quadratic_config, 6, executor=executor)
    stresses, alloc = dominant_levels(
        report.plan, granularity=quadratic_config.granularity)
    print('\n [quadratic variable N] %s %s' % (stresses, alloc))
    assert stresses.size == 3
    assert np.allclose(stresses, [0.13, 0.52, 0.90], atol=0.05)


def test_power_law_two_point(executor):
    scenario = Scenario(power_law_model(), AftParams((-6.9, -6.2), 0.5), 0.05)
    config = study(scenario)
    report, = run_fixed_n_study(config, [2], executor=executor)
    s1, s2 = report.plan.stresses
    assert s1 == 0.1
    assert 0.85 <= s2 <= 0.90
    assert 72 <= report.plan.allocations[0] <= 86
    assert non_increasing_dominant(report.plan, config.granularity)


def test_case_study(executor):
    scenario = Scenario(quadratic_model(),
                        AftParams((30.310, -10.108, 0.858), 0.2418), 2.1,
                        duration=4380.)
    config = study(scenario, bounds=(2.5, 5.0), total_units=161)
    report = run_variable_n_study(config, 6, executor=executor)
    stresses, alloc = dominant_levels(report.plan,
                                      granularity=config.granularity)
    print('\n [case study] %s %s' % (stresses, alloc))
    assert stresses.size == 3
    assert np.allclose(stresses, [2.9, 4.0, 5.0], atol=0.15)
    assert alloc[0] > alloc[1] > alloc[2]
