"""
Unittest for simulator.py
"""

from concurrent.futures import ProcessPoolExecutor

import pytest
import numpy as np

from altplan.fit.weibull_aft import AftParams, median
from altplan.lifestress import linear_model
from altplan.simulator import (PlanError, RmseEstimate, Scenario, TestPlan,
                               evaluate_rmse, expected_censoring,
                               generate_dataset, make_objective,
                               replicate_estimates)
from altplan.streams import SEARCH, Stream
from altplan.utils.misc import available_workers


duration = 8650.


@pytest.fixture(scope="module")
def scenario():
    return Scenario(linear_model(), AftParams((12.5, -19.5), 0.5),
                    design_stress=0.05, duration=duration, n_sim=40)


@pytest.fixture(scope="module")
def plan():
    return TestPlan([0.2, 0.9], [82, 18], duration=duration,
                    design_stress=0.05)


def test_plan_properties(plan):
    assert plan.n_stresses == 2
    assert plan.total_units == 100
    assert np.allclose(plan.proportions, [0.82, 0.18])
    assert plan.unit_stresses().size == 100
    assert plan.replace(allocations=[50, 50]).allocations == (50, 50)


@pytest.mark.parametrize('kwargs', [
    dict(stresses=[0.2], allocations=[100]),
    dict(stresses=[0.9, 0.2], allocations=[50, 50]),
    dict(stresses=[0.2, 0.2], allocations=[50, 50]),
    dict(stresses=[0.2, 0.9], allocations=[100, 0]),
    dict(stresses=[0.2, 0.9], allocations=[50.5, 49.5]),
    dict(stresses=[0.2, 0.9], allocations=[50, 49, 1]),
    dict(stresses=[0.2, 0.9], allocations=[50, 50], duration=0),
    dict(stresses=[0.2, 0.9], allocations=[50, 50], design_stress=0.2),
])
def test_plan_invalid(kwargs):
    with pytest.raises(PlanError):
        TestPlan(**kwargs)


def test_scenario(scenario):
    expected = median(0.05, scenario.model, scenario.true_params)
    assert scenario.q_true == expected
    # a q_true argument is ignored
    other = Scenario(scenario.model, scenario.true_params, 0.05, q_true=5.)
    assert other.q_true == expected
    assert scenario.replace(n_sim=10).q_true == expected
    with pytest.raises(PlanError):
        Scenario(scenario.model, ((1., 2., 3.), 0.5), 0.05)
    with pytest.raises(PlanError):
        Scenario(scenario.model, scenario.true_params, 0.05, n_sim=0)


def test_generate_dataset(plan, scenario):
    stream = Stream(3, (SEARCH,))
    data = generate_dataset(plan, scenario, stream)
    assert data.n == plan.total_units
    for s, n in zip(plan.stresses, plan.allocations):
        assert (data.stress == s).sum() == n
    assert np.all(data.time <= duration)
    assert np.all(data.time[~data.observed] == duration)
    data2 = generate_dataset(plan, scenario, stream)
    assert np.array_equal(data.time, data2.time)
    data3 = generate_dataset(plan, scenario, stream.child(1))
    assert not np.array_equal(data.time, data3.time)


def test_generate_dataset_incompatible(plan, scenario):
    with pytest.raises(PlanError):
        generate_dataset(plan.replace(design_stress=0.01), scenario,
                         Stream(0))


def test_censoring_fraction(scenario):
    big = TestPlan([0.1, 0.2], [20000, 20000], duration=duration,
                   design_stress=0.05)
    data = generate_dataset(big, scenario, Stream(5))
    empirical = data.censoring_fractions().values
    expected = expected_censoring(big, scenario)
    print('\n [generate_dataset] censoring: %s, expected: %s'
          % (empirical, expected))
    assert expected[0] == pytest.approx(0.95, abs=0.002)
    assert np.allclose(empirical, expected, atol=0.01)


def test_no_censoring(plan, scenario):
    inf_plan = plan.replace(duration=np.inf)
    data = generate_dataset(inf_plan, scenario.replace(duration=np.inf),
                            Stream(1))
    assert data.n_failures == data.n
    assert np.all(expected_censoring(inf_plan, scenario) == 0)


def test_evaluate_rmse(plan, scenario):
    est = evaluate_rmse(plan, scenario, Stream(11))
    assert isinstance(est, RmseEstimate)
    assert est.n_sim == scenario.n_sim
    assert est.rmse > 0
    assert est.replicate_errors.size == scenario.n_sim
    assert est.rmse == pytest.approx(np.sqrt(est.bias**2 + est.error_std**2))
    assert est.rmse >= abs(est.bias)
    assert est.n_fit_failures == 0
    est_bare = evaluate_rmse(plan, scenario, Stream(11), store_errors=False)
    assert est_bare.rmse == est.rmse
    assert est_bare.replicate_errors is None and est_bare.bias is None


def test_evaluate_rmse_deterministic_lifetimes():
    """A near-zero scale without censoring recovers the true median."""
    sharp = Scenario(linear_model(), AftParams((12.5, -19.5), 1e-6),
                     design_stress=0.05, n_sim=20)
    plan = TestPlan([0.2, 0.9], [82, 18], design_stress=0.05)
    est = evaluate_rmse(plan, sharp, Stream(12))
    print('\n [evaluate_rmse] sigma=1e-6 rmse: %g (q_true %g)'
          % (est.rmse, sharp.q_true))
    assert est.rmse <= 1e-3 * sharp.q_true


def test_evaluate_rmse_more_units(plan, scenario):
    stream = Stream(13)
    single = evaluate_rmse(plan, scenario, stream, n_sim=200)
    double = evaluate_rmse(plan.replace(allocations=[164, 36]), scenario,
                           stream, n_sim=200)
    print('\n [evaluate_rmse] 100 units: %.0f, 200 units: %.0f'
          % (single.rmse, double.rmse))
    assert double.rmse < single.rmse


def test_evaluate_rmse_workers(plan, scenario):
    """Results are bit-identical for any number of workers."""
    reference = replicate_estimates(plan, scenario, Stream(21))
    for workers in sorted({2, max(available_workers(), 2)}):
        with ProcessPoolExecutor(max_workers=workers) as executor:
            q_hat, failures = replicate_estimates(plan, scenario, Stream(21),
                                                  executor=executor)
        assert np.array_equal(q_hat, reference[0])
        assert failures == reference[1]


def test_fallback_counting(scenario):
    """With no failures at all every replicate uses the fallback."""
    short = TestPlan([0.1, 0.2], [50, 50], duration=1e-3,
                     design_stress=0.05)
    est = evaluate_rmse(short, scenario.replace(duration=1e-3), Stream(2),
                        n_sim=5)
    assert est.n_fit_failures == 5
    assert np.isfinite(est.rmse)


def test_objective(plan, scenario):
    fresh = make_objective(scenario, Stream(4), n_sim=10)
    a, b = fresh(plan), fresh(plan)
    assert fresh.n_calls == 2
    assert a.rmse != b.rmse
    crn = make_objective(scenario, Stream(4), n_sim=10, crn=True)
    assert crn(plan).rmse == crn(plan).rmse
    assert fresh.stream_for(3) == Stream(4, (3,))
    assert crn.stream_for(3) == Stream(4)
