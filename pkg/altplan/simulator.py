#
# altplan - Simulation-based accelerated life test planning.
#
"""
Monte Carlo evaluation of constant-stress accelerated life test plans.

A :class:`TestPlan` lists the stress levels, the number of units tested at
each level, the (Type-I) test duration and the design stress. A
:class:`Scenario` holds the "true" model used to simulate lifetimes.

For a plan, :func:`evaluate_rmse` repeats `n_sim` times:

1. simulate a censored dataset with :func:`generate_dataset`,
2. fit the scenario's life-stress model by maximum likelihood,
3. predict the median lifetime `Q_j` at the design stress,

and returns the root mean squared error of the `Q_j` against the true median
(:class:`RmseEstimate`). This RMSE is the objective minimized by
:mod:`altplan.deopt`.

Replicate `j` draws its random numbers from the sub-stream
`stream.child(j, attempt)` (see :mod:`altplan.streams`), therefore the result
is the same for any number of parallel workers.

When the fit of a replicate fails (unidentifiable data or no convergence)
the replicate is regenerated from the next sub-stream, up to
`MAX_FIT_ATTEMPTS` times. If all attempts fail, the median predicted by the
least-squares initialization of the last attempt is used and the failure is
counted in `RmseEstimate.n_fit_failures`.
"""

from collections import namedtuple
import numpy as np

from .fit.weibull_aft import (AftParams, CensoredDataset, FitError, fit_mle,
                              initial_params, median, reliability,
                              sample_lifetimes)

import logging
log = logging.getLogger(__name__)


MAX_FIT_ATTEMPTS = 3

# Uniform variates are kept strictly inside (0, 1)
_U_MIN = 2.**-53


class PlanError(ValueError):
    """A test plan or scenario violating its invariants."""


class TestPlan(namedtuple('TestPlan', ['stresses', 'allocations', 'duration',
                                       'design_stress'])):
    """A constant-stress test plan.

    Arguments:
        stresses (sequence of floats): stress levels, strictly increasing.
        allocations (sequence of ints): number of units at each stress
            (each >= 1).
        duration (float): Type-I censoring time, `inf` for no censoring.
        design_stress (float): stress at which the lifetime is predicted,
            below the lowest test stress.
    """
    __test__ = False  # not a pytest class

    def __new__(cls, stresses, allocations, duration=np.inf,
                design_stress=0.):
        stresses = tuple(float(s) for s in np.atleast_1d(stresses))
        alloc = np.atleast_1d(allocations)
        if np.any(alloc != np.round(alloc)):
            raise PlanError('Allocations must be integers (got %s).'
                            % (tuple(alloc),))
        allocations = tuple(int(a) for a in alloc)
        duration, design_stress = float(duration), float(design_stress)
        if len(stresses) < 2:
            raise PlanError('A test plan needs at least 2 stress levels '
                            '(got %d).' % len(stresses))
        if len(allocations) != len(stresses):
            raise PlanError('Got %d allocations for %d stresses.'
                            % (len(allocations), len(stresses)))
        if np.any(np.diff(stresses) <= 0):
            raise PlanError('Stresses must be strictly increasing (got %s).'
                            % (stresses,))
        if min(allocations) < 1:
            raise PlanError('Each stress needs at least 1 unit (got %s).'
                            % (allocations,))
        if not duration > 0:
            raise PlanError('Duration must be > 0 (got %r).' % duration)
        if not design_stress < stresses[0]:
            raise PlanError('The design stress (%g) must be below the lowest '
                            'test stress (%g).' % (design_stress, stresses[0]))
        return super(TestPlan, cls).__new__(cls, stresses, allocations,
                                            duration, design_stress)

    @property
    def n_stresses(self):
        return len(self.stresses)

    @property
    def total_units(self):
        return sum(self.allocations)

    @property
    def proportions(self):
        return np.array(self.allocations) / self.total_units

    def unit_stresses(self):
        """Array with the stress of each unit (size `total_units`)."""
        return np.repeat(self.stresses, self.allocations)

    def replace(self, **kwargs):
        """Return a new validated plan with some fields replaced."""
        fields = self._asdict()
        fields.update(kwargs)
        return TestPlan(**fields)


class Scenario(namedtuple('Scenario', ['model', 'true_params', 'design_stress',
                                       'duration', 'n_sim', 'q_true'])):
    """The simulation scenario: true model, design stress, test duration.

    Arguments:
        model (LifeStressModel): life-stress relationship used both to
            simulate and to fit.
        true_params (AftParams): parameters used to simulate lifetimes.
        design_stress (float): design stress `s_d` (inside the model domain).
        duration (float): Type-I censoring time `t_e` (`inf` for none).
        n_sim (int): number of Monte Carlo replicates per evaluation.

    The true median `q_true` at `design_stress` is always recomputed: a
    value passed as argument is ignored.
    """
    def __new__(cls, model, true_params, design_stress, duration=np.inf,
                n_sim=1000, q_true=None):
        if not isinstance(true_params, AftParams):
            true_params = AftParams(*true_params)
        if len(true_params.beta) != model.dimension:
            raise PlanError("Basis '%s' needs %d coefficients (got %d)."
                            % (model.basis, model.dimension,
                               len(true_params.beta)))
        design_stress = float(design_stress)
        model.check_domain(design_stress)
        duration = float(duration)
        if not duration > 0:
            raise PlanError('Duration must be > 0 (got %r).' % duration)
        if int(n_sim) != n_sim or n_sim < 1:
            raise PlanError('n_sim must be a positive integer (got %r).'
                            % (n_sim,))
        q_true = median(design_stress, model, true_params)
        return super(Scenario, cls).__new__(cls, model, true_params,
                                            design_stress, duration,
                                            int(n_sim), q_true)

    def replace(self, **kwargs):
        fields = self._asdict()
        fields.update(kwargs)
        return Scenario(**fields)

    def plan(self, stresses, allocations):
        """Return a :class:`TestPlan` with this scenario duration/design stress.
        """
        return TestPlan(stresses, allocations, duration=self.duration,
                        design_stress=self.design_stress)


class RmseEstimate(namedtuple('RmseEstimate', ['rmse', 'n_sim',
                                               'n_fit_failures',
                                               'replicate_errors'])):
    """Monte Carlo estimate of the RMSE of the design-stress median.

    Attributes:
        rmse (float): root mean squared error of the predicted medians.
        n_sim (int): number of replicates.
        n_fit_failures (int): replicates that needed the fallback estimate.
        replicate_errors (array or None): the errors `Q_j - Q`, if stored.
    """
    @property
    def bias(self):
        if self.replicate_errors is None:
            return None
        return float(np.mean(self.replicate_errors))

    @property
    def error_std(self):
        if self.replicate_errors is None:
            return None
        return float(np.std(self.replicate_errors))


def check_compatible(plan, scenario):
    """Raise PlanError/DomainError if `plan` cannot be simulated in `scenario`.
    """
    scenario.model.check_domain(plan.stresses)
    if plan.design_stress != scenario.design_stress:
        raise PlanError('Plan design stress (%g) differs from the scenario '
                        'design stress (%g).' % (plan.design_stress,
                                                 scenario.design_stress))


def _uniforms(rng, size):
    return np.clip(rng.random(size), _U_MIN, 1 - _U_MIN)


def generate_dataset(plan, scenario, stream):
    """Simulate the Type-I censored data of one test under `plan`.

    For each stress `S_j`, `n_j` lifetimes are drawn from the scenario's true
    model. Lifetimes longer than the plan duration are censored at the
    duration.

    Arguments:
        plan (TestPlan): the test plan.
        scenario (Scenario): the true model.
        stream (Stream): random sub-stream.

    Returns:
        A :class:`CensoredDataset` with `plan.total_units` records, ordered
        by stress level.
    """
    check_compatible(plan, scenario)
    stresses = plan.unit_stresses()
    u = _uniforms(stream.generator(), stresses.size)
    t = sample_lifetimes(stresses, scenario.model, scenario.true_params, u)
    t = np.maximum(t, np.finfo(float).tiny)
    observed = t <= plan.duration
    return CensoredDataset(stresses, np.minimum(t, plan.duration), observed)


def expected_censoring(plan, scenario):
    """Return the probability of censoring `R(t_e | S_j)` at each stress."""
    scenario.model.check_domain(plan.stresses)
    return np.array([reliability(plan.duration, s, scenario.model,
                                 scenario.true_params)
                     for s in plan.stresses])


def _replicate_estimate(plan, scenario, stream):
    """Return (Q_hat, failed) for one replicate."""
    for attempt in range(MAX_FIT_ATTEMPTS):
        data = generate_dataset(plan, scenario, stream.child(attempt))
        try:
            fit = fit_mle(data, scenario.model)
        except FitError:
            continue
        if fit.converged:
            return median(scenario.design_stress, fit.model, fit.params), False
    params = initial_params(data, scenario.model)
    return median(scenario.design_stress, scenario.model, params), True


def _replicate_chunk(plan, scenario, stream, indices):
    q_hat = np.empty(len(indices))
    failed = 0
    for i, j in enumerate(indices):
        q_hat[i], fail = _replicate_estimate(plan, scenario, stream.child(j))
        failed += fail
    return q_hat, failed


def replicate_estimates(plan, scenario, stream, n_sim=None, executor=None,
                        n_chunks=None):
    """Return the predicted medians of `n_sim` simulated experiments.

    Arguments:
        plan (TestPlan): the test plan.
        scenario (Scenario): the true model.
        stream (Stream): sub-stream of this evaluation. Replicate `j` uses
            `stream.child(j, attempt)`.
        n_sim (int or None): number of replicates, default `scenario.n_sim`.
        executor (concurrent.futures.Executor or None): if not None the
            replicates are split in chunks executed by `executor`.
        n_chunks (int or None): number of chunks, default
            `executor._max_workers` (or 1 without executor).

    Returns:
        2-tuple: array of predicted medians (in replicate order) and
        number of replicates that needed the fallback estimate.
    """
    if n_sim is None:
        n_sim = scenario.n_sim
    check_compatible(plan, scenario)
    if executor is None:
        return _replicate_chunk(plan, scenario, stream, range(n_sim))

    if n_chunks is None:
        n_chunks = getattr(executor, '_max_workers', 1)
    chunks = [c for c in np.array_split(np.arange(n_sim), n_chunks) if c.size]
    results = executor.map(_replicate_chunk, *zip(
        *[(plan, scenario, stream, c.tolist()) for c in chunks]))
    q_hats, failures = zip(*results)
    return np.concatenate(q_hats), int(sum(failures))


def evaluate_rmse(plan, scenario, stream, n_sim=None, executor=None,
                  store_errors=True):
    """Monte Carlo estimate of the RMSE of the design-stress median.

    Arguments:
        plan (TestPlan): the test plan.
        scenario (Scenario): the true model.
        stream (Stream): sub-stream of this evaluation.
        n_sim (int or None): number of replicates, default `scenario.n_sim`.
        executor (Executor or None): optional parallel executor.
        store_errors (bool): if True the replicate errors are stored in
            the result.

    Returns:
        An :class:`RmseEstimate`.
    """
    q_hat, n_fail = replicate_estimates(plan, scenario, stream, n_sim=n_sim,
                                        executor=executor)
    errors = q_hat - scenario.q_true
    rmse = float(np.sqrt(np.mean(errors**2)))
    if n_fail:
        log.debug('%d/%d replicates used the fallback estimate for plan %s',
                  n_fail, q_hat.size, plan.stresses)
    return RmseEstimate(rmse=rmse, n_sim=int(q_hat.size),
                        n_fit_failures=n_fail,
                        replicate_errors=errors if store_errors else None)


class Objective:
    """The RMSE objective as a function of the test plan.

    Each call evaluates a plan with :func:`evaluate_rmse`. With fresh
    randomness (default) call number `k` uses the sub-stream
    `stream.child(k)`, so different candidate plans see different noise.
    With common random numbers (`crn=True`) all calls use the same
    sub-streams, i.e. replicate `j` of every plan uses the same uniforms.

    Arguments:
        scenario (Scenario): the true model.
        stream (Stream): root sub-stream of the objective.
        n_sim (int or None): replicates per evaluation (default
            `scenario.n_sim`).
        crn (bool): use common random numbers across calls.
        executor (Executor or None): optional parallel executor.
    """
    def __init__(self, scenario, stream, n_sim=None, crn=False,
                 executor=None):
        self.scenario = scenario
        self.stream = stream
        self.n_sim = scenario.n_sim if n_sim is None else n_sim
        self.crn = crn
        self.executor = executor
        self.n_calls = 0

    def stream_for(self, call_index):
        return self.stream if self.crn else self.stream.child(call_index)

    def __call__(self, plan):
        stream = self.stream_for(self.n_calls)
        self.n_calls += 1
        return evaluate_rmse(plan, self.scenario, stream, n_sim=self.n_sim,
                             executor=self.executor, store_errors=False)


def make_objective(scenario, stream, n_sim=None, crn=False, executor=None):
    """Return an :class:`Objective` (plan -> RmseEstimate)."""
    return Objective(scenario, stream, n_sim=n_sim, crn=crn,
                     executor=executor)
