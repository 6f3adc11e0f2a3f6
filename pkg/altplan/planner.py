#
# altplan - Simulation-based accelerated life test planning.
#
"""
High-level studies built on the simulator and the DE optimizer.

The typical workflow is:

1. fit candidate life-stress models to preliminary data and select one by
   AIC (:func:`fit_preliminary`, or :func:`preliminary_study` to simulate
   the preliminary experiment too);
2. use the fitted coefficients as the "true" :class:`Scenario`, with a test
   duration given or calibrated with :func:`calibrate_duration`;
3. search optimal plans for a fixed number of stresses
   (:func:`run_fixed_n_study`) and/or letting the optimizer choose the number
   of stresses (:func:`run_variable_n_study`);
4. compare the optimal plan with practical variants (:func:`rounded_variants`,
   :func:`compare_neighborhood`).

Each best plan is re-evaluated `report_replicates` times with
`report_n_sim` simulated experiments per replicate, using random streams
independent of the search. The mean and standard error of the replicate
RMSE values are reported in a :class:`PlanReport`.

Plans are "statistically indistinguishable" when their mean RMSE differ by
less than `k` pooled standard errors, `k = 2` for neighbourhood
comparisons and `k = 3` for comparisons across the number of stresses
(:func:`pairwise_differences`).
"""

from collections import namedtuple
import numpy as np
import pandas as pd
from scipy.optimize import bisect

from .deopt import DeConfig, PlanEncoding, apportion, optimize
from .fit.weibull_aft import FitError, fit_mle, median, reliability
from .simulator import PlanError, TestPlan, evaluate_rmse, generate_dataset, \
    make_objective
from .streams import COMPARE, DE, REPORT, SEARCH, Stream

import logging
log = logging.getLogger(__name__)


# Stream tags of the two encoding modes
_FIXED, _VARIABLE = 0, 1

# Neighbourhood and cross-N equivalence thresholds (in pooled SE)
NEIGHBORHOOD_SE = 2.
CROSS_N_SE = 3.


class StudyError(RuntimeError):
    """A study that cannot produce a result (e.g. no convergent fit)."""


class StudyConfig(namedtuple('StudyConfig', [
        'scenario', 'stress_bounds', 'total_units', 'n_values', 'n_max',
        'granularity', 'de_config', 'search_n_sim', 'report_n_sim',
        'report_replicates', 'master_seed', 'crn'])):
    """Settings of an optimal-plan study.

    Arguments:
        scenario (Scenario): true model, design stress and test duration.
        stress_bounds (2-tuple): (lower, upper) admissible test stresses.
        total_units (int): number of units of every plan.
        n_values (sequence of ints): numbers of stresses of the fixed-N
            study.
        n_max (int): max. number of stresses of the variable-N study.
        granularity (float): min. gap between consecutive stresses.
        de_config (DeConfig): differential evolution settings.
        search_n_sim (int): replicates per objective evaluation in the search.
        report_n_sim (int): replicates per RMSE evaluation in the reports
            (>= search_n_sim).
        report_replicates (int): number of RMSE re-evaluations of the best
            plans.
        master_seed (int): seed of all the random streams.
        crn (bool): use common random numbers during the search.
    """
    def __new__(cls, scenario, stress_bounds, total_units, n_values=(2,),
                n_max=6, granularity=1e-5, de_config=None, search_n_sim=200,
                report_n_sim=1000, report_replicates=100, master_seed=0,
                crn=False):
        if de_config is None:
            de_config = DeConfig()
        n_values = tuple(int(n) for n in n_values)
        for name, value in [('search_n_sim', search_n_sim),
                            ('report_n_sim', report_n_sim),
                            ('report_replicates', report_replicates),
                            ('total_units', total_units)]:
            if int(value) != value or value < 1:
                raise ValueError('%s must be a positive integer (got %r).'
                                 % (name, value))
        if report_n_sim < search_n_sim:
            raise ValueError('report_n_sim (%d) must be >= search_n_sim (%d).'
                             % (report_n_sim, search_n_sim))
        if any(n < 2 for n in n_values) or int(n_max) < 2:
            raise ValueError('Plans need at least 2 stresses (got n_values=%s,'
                             ' n_max=%s).' % (n_values, n_max))
        lower, upper = (float(v) for v in stress_bounds)
        if not lower < upper:
            raise ValueError('Invalid stress bounds [%g, %g].'
                             % (lower, upper))
        scenario.model.check_domain([lower, upper])
        return super(StudyConfig, cls).__new__(
            cls, scenario, (lower, upper), int(total_units), n_values,
            int(n_max), float(granularity), de_config, int(search_n_sim),
            int(report_n_sim), int(report_replicates), int(master_seed),
            bool(crn))

    def replace(self, **kwargs):
        fields = self._asdict()
        fields.update(kwargs)
        return StudyConfig(**fields)

    @property
    def stream(self):
        return Stream(self.master_seed)

    def encoding(self, mode, n_stresses):
        """Return the :class:`PlanEncoding` of this study for `mode`."""
        return PlanEncoding(mode, n_stresses, self.stress_bounds,
                            self.total_units, granularity=self.granularity,
                            duration=self.scenario.duration,
                            design_stress=self.scenario.design_stress)


class PlanReport(namedtuple('PlanReport', [
        'label', 'plan', 'min_rmse', 'mean_rmse', 'std_error',
        'n_fit_failures', 'generation_trace', 'replicate_rmse'])):
    """Best plan of a study with its re-evaluated RMSE.

    Attributes:
        label (string): 'N' for fixed-N searches, 'N*' for variable-N.
        plan (TestPlan): the best plan.
        min_rmse (float): RMSE of the best plan found by the search.
        mean_rmse (float): mean RMSE over the report replicates.
        std_error (float): standard deviation of the replicate RMSE values
            divided by sqrt(number of replicates).
        n_fit_failures (int): fallback estimates in the report replicates.
        generation_trace (DataFrame): per-generation trace of the search.
        replicate_rmse (array): the replicate RMSE values.
    """


##
# Preliminary data
#
def fit_preliminary(data, candidates):
    """Fit candidate models to preliminary data and select the best by AIC.

    Arguments:
        data (CensoredDataset): preliminary lifetime data.
        candidates (list of LifeStressModel): candidate relationships.

    Returns:
        2-tuple: the converged :class:`FittedModel` with the lowest AIC
        (ties go to the model with fewer parameters) and a DataFrame with
        one row per candidate (columns `basis`, `n_params`, `converged`,
        `log_likelihood`, `aic`, `beta`, `sigma`).

    Raises:
        StudyError: when no candidate fit converges.
    """
    if len(candidates) == 0:
        raise ValueError('At least one candidate model is needed.')
    rows, fits = [], []
    for model in candidates:
        try:
            fit = fit_mle(data, model)
        except FitError as e:
            log.info("Model '%s' not identifiable: %s", model.basis, e)
            rows.append(dict(basis=str(model.basis),
                             n_params=model.dimension + 1, converged=False,
                             log_likelihood=np.nan, aic=np.nan, beta=None,
                             sigma=np.nan))
            continue
        rows.append(dict(basis=str(model.basis), n_params=fit.n_params,
                         converged=fit.converged,
                         log_likelihood=fit.log_likelihood,
                         aic=fit.aic if fit.converged else np.nan,
                         beta=fit.params.beta, sigma=fit.params.sigma))
        if fit.converged:
            fits.append(fit)
    table = pd.DataFrame(rows, columns=['basis', 'n_params', 'converged',
                                        'log_likelihood', 'aic', 'beta',
                                        'sigma'])
    if not fits:
        raise StudyError('None of the %d candidate models converged.'
                         % len(candidates))
    best = min(fits, key=lambda f: (f.aic, f.n_params))
    log.info("Selected model '%s' (AIC %.4g).", best.model.basis, best.aic)
    return best, table


def balanced_plan(stresses, units_per_stress, duration=np.inf,
                  design_stress=0.):
    """Return a plan with `units_per_stress` units at every stress."""
    stresses = np.atleast_1d(stresses)
    return TestPlan(stresses, [units_per_stress] * stresses.size,
                    duration=duration, design_stress=design_stress)


def preliminary_study(scenario, stresses, units_per_stress, candidates,
                      stream):
    """Simulate a balanced preliminary experiment and select a model.

    Arguments:
        scenario (Scenario): model used to simulate the preliminary data.
        stresses (array): stresses of the balanced preliminary plan.
        units_per_stress (int): units at each stress.
        candidates (list of LifeStressModel): candidate relationships.
        stream (Stream): random sub-stream of the simulated data.

    Returns:
        3-tuple: the simulated :class:`CensoredDataset`, the selected
        :class:`FittedModel` and the AIC table (see :func:`fit_preliminary`).
    """
    plan = balanced_plan(stresses, units_per_stress, scenario.duration,
                         scenario.design_stress)
    data = generate_dataset(plan, scenario, stream)
    best, table = fit_preliminary(data, candidates)
    return data, best, table


def calibrate_duration(model, params, reference_stress, target_censoring):
    """Test duration giving the target censoring fraction at a stress.

    Solves `R(t_e | reference_stress) = target_censoring` by bisection
    (relative tolerance 1e-10).

    Arguments:
        model (LifeStressModel): life-stress relationship.
        params (AftParams): model parameters.
        reference_stress (float): stress where the censoring is set
            (usually the lowest test stress).
        target_censoring (float): expected fraction of censored units,
            in (0, 1).

    Returns:
        The duration `t_e` (float).
    """
    if not 0 < target_censoring < 1:
        raise ValueError('target_censoring must be in (0, 1) (got %r).'
                         % target_censoring)

    def excess(t):
        return reliability(t, reference_stress, model, params) \
            - target_censoring

    lower = upper = median(reference_stress, model, params)
    while excess(lower) < 0:
        lower /= 2
    while excess(upper) > 0:
        upper *= 2
    duration = bisect(excess, lower, upper, xtol=np.finfo(float).tiny,
                      rtol=1e-10, maxiter=2000)
    log.info('Calibrated duration %.6g (%.1f%% censoring at stress %g).',
             duration, 100 * target_censoring, reference_stress)
    return duration


def calibrated_scenario(scenario, reference_stress, target_censoring):
    """Return `scenario` with the duration given by :func:`calibrate_duration`.
    """
    duration = calibrate_duration(scenario.model, scenario.true_params,
                                  reference_stress, target_censoring)
    return scenario.replace(duration=duration)


##
# Optimal plans
#
def _report_rmse(plan, config, stream, executor=None):
    """Re-evaluate `plan` `report_replicates` times from sub-streams of
    `stream`. Returns (replicate rmse array, fit failures)."""
    rmse = np.empty(config.report_replicates)
    failures = 0
    for r in range(config.report_replicates):
        est = evaluate_rmse(plan, config.scenario, stream.child(r),
                            n_sim=config.report_n_sim, executor=executor,
                            store_errors=False)
        rmse[r] = est.rmse
        failures += est.n_fit_failures
    return rmse, failures


def _std_error(values):
    if values.size < 2:
        return 0.
    return float(np.std(values, ddof=1) / np.sqrt(values.size))


def _run_study(config, mode, n_stresses, executor=None):
    encoding = config.encoding(mode, n_stresses)
    tag = (_FIXED if mode == 'fixed' else _VARIABLE, n_stresses)
    root = config.stream
    log.info('Start %s-N study with N=%d (%d generations).', mode,
             n_stresses, config.de_config.generations)
    objective = make_objective(config.scenario, root.child(SEARCH, *tag),
                               n_sim=config.search_n_sim, crn=config.crn,
                               executor=executor)
    result = optimize(objective, encoding, config.de_config,
                      root.child(DE, *tag))
    rmse, failures = _report_rmse(result.plan, config,
                                  root.child(REPORT, *tag), executor)
    report = PlanReport(label=encoding.label, plan=result.plan,
                        min_rmse=result.estimate.rmse,
                        mean_rmse=float(rmse.mean()),
                        std_error=_std_error(rmse), n_fit_failures=failures,
                        generation_trace=result.trace, replicate_rmse=rmse)
    log.info('End %s-N study with N=%d: stresses %s, allocations %s, '
             'mean RMSE %.6g (SE %.3g).', mode, n_stresses,
             np.round(report.plan.stresses, 4), report.plan.allocations,
             report.mean_rmse, report.std_error)
    return report


def run_fixed_n_study(config, n_values=None, executor=None):
    """Search the optimal plan for each number of stresses in `n_values`.

    Arguments:
        config (StudyConfig): the study settings.
        n_values (sequence of ints or None): numbers of stresses, default
            `config.n_values`.
        executor (Executor or None): optional executor for the replicates.

    Returns:
        List of :class:`PlanReport`, ordered by the number of stresses.
    """
    if n_values is None:
        n_values = config.n_values
    return [_run_study(config, 'fixed', n, executor)
            for n in sorted(n_values)]


def run_variable_n_study(config, n_max=None, executor=None):
    """Search the optimal plan with up to `n_max` stresses.

    Returns:
        A :class:`PlanReport` with label 'N*'.
    """
    if n_max is None:
        n_max = config.n_max
    return _run_study(config, 'variable', n_max, executor)


def pairwise_differences(reports, threshold=CROSS_N_SE):
    """Pairwise comparison of the mean RMSE of several reports.

    Returns:
        DataFrame with one row per pair (`label_a`, `label_b`, `diff`,
        `pooled_se`, `indistinguishable`), where `indistinguishable` is
        `|diff| <= threshold * pooled_se`.
    """
    rows = []
    for i, a in enumerate(reports):
        for b in reports[i + 1:]:
            diff = a.mean_rmse - b.mean_rmse
            pooled = np.hypot(a.std_error, b.std_error)
            rows.append(dict(label_a=a.label, label_b=b.label, diff=diff,
                             pooled_se=pooled,
                             indistinguishable=abs(diff) <= threshold * pooled))
    return pd.DataFrame(rows, columns=['label_a', 'label_b', 'diff',
                                       'pooled_se', 'indistinguishable'])


##
# Neighbourhood of an optimal plan
#
def compare_neighborhood(plan, scenario, variants, config, executor=None):
    """Compare a plan with variants using common random numbers.

    Every plan (reference and variants) is evaluated `report_replicates`
    times with `report_n_sim` replicates, replicate `r` of every plan using
    the same sub-stream. A plan is flagged `equivalent` when its mean RMSE
    is within 2 pooled standard errors of the best mean RMSE.

    Arguments:
        plan (TestPlan): reference (usually optimal) plan.
        scenario (Scenario): the true model.
        variants (list of TestPlan): plans to compare, same total units.
        config (StudyConfig): provides the replicate counts and the seed.
        executor (Executor or None): optional executor for the replicates.

    Returns:
        DataFrame with one row per plan (row 0 is the reference), columns
        `variant`, `stresses`, `allocations`, `mean_rmse`, `std_error`,
        `diff`, `equivalent`.
    """
    for variant in variants:
        if variant.total_units != plan.total_units:
            raise PlanError('Variant %s has %d units, the reference plan %d.'
                            % (variant.allocations, variant.total_units,
                               plan.total_units))
    config = config.replace(scenario=scenario)
    stream = config.stream.child(COMPARE)
    rows = []
    for i, p in enumerate([plan] + list(variants)):
        rmse, _ = _report_rmse(p, config, stream, executor)
        rows.append(dict(variant=i, stresses=p.stresses,
                         allocations=p.allocations,
                         mean_rmse=float(rmse.mean()),
                         std_error=_std_error(rmse)))
        log.info('Variant %d %s: mean RMSE %.6g', i, p.allocations,
                 rows[-1]['mean_rmse'])
    df = pd.DataFrame(rows, columns=['variant', 'stresses', 'allocations',
                                     'mean_rmse', 'std_error'])
    df['diff'] = df.mean_rmse - df.mean_rmse[0]
    best = df.mean_rmse.idxmin()
    pooled = np.hypot(df.std_error, df.std_error[best])
    df['equivalent'] = ((df.mean_rmse - df.mean_rmse[best])
                        <= NEIGHBORHOOD_SE * pooled)
    return df


def rule_of_thumb_plan(stresses, total_units, duration=np.inf,
                       design_stress=0.):
    """3-stress plan with the 4:2:1 (low:medium:high) allocation rule."""
    if len(stresses) != 3:
        raise PlanError('The 4:2:1 rule needs 3 stresses (got %d).'
                        % len(stresses))
    return TestPlan(stresses, apportion([4, 2, 1], total_units),
                    duration=duration, design_stress=design_stress)


def rounded_variants(plan, step=5, n_steps=3):
    """Practical variants of a plan with allocations multiple of `step`.

    The allocations are rounded to the nearest multiple of `step` (the
    rounding residual goes to the lowest stress), then `k * step` units are
    moved from the highest to the lowest stress (k > 0) or vice versa
    (k < 0), for `k = -n_steps, ..., n_steps`. Variants with an allocation
    below 1 are skipped, as are duplicates and the plan itself.

    Returns:
        List of :class:`TestPlan`, ordered by `k`.
    """
    alloc = np.array(plan.allocations)
    base = step * np.round(alloc / step).astype(int)
    base[0] += plan.total_units - base.sum()
    variants, seen = [], {plan.allocations}
    for k in range(-n_steps, n_steps + 1):
        new = base.copy()
        new[0] += k * step
        new[-1] -= k * step
        if new.min() < 1 or tuple(new) in seen:
            continue
        seen.add(tuple(new))
        variants.append(plan.replace(allocations=new))
    return variants


# Stresses closer than MERGE_GAPS granularity steps are one level
MERGE_GAPS = 10


def merge_close_stresses(plan, granularity=1e-5):
    """Merge consecutive stresses closer than `MERGE_GAPS * granularity`.

    Arguments:
        plan (TestPlan): the plan.
        granularity (float): the stress granularity of the optimizer
            (see :class:`altplan.deopt.PlanEncoding`).

    Allocations of a group are summed and the merged stress is the
    allocation-weighted mean of the group.

    Returns:
        2-tuple of arrays: merged stresses and allocations.
    """
    s = np.array(plan.stresses)
    a = np.array(plan.allocations)
    tol = MERGE_GAPS * granularity
    group = np.concatenate([[0], np.cumsum(np.diff(s) >= tol)])
    alloc = np.bincount(group, weights=a).astype(int)
    stresses = np.bincount(group, weights=a * s) / alloc
    return stresses, alloc


def dominant_levels(plan, min_units=5, granularity=1e-5):
    """Merged stress levels with at least `min_units` units.

    Returns:
        2-tuple of arrays: stresses and allocations of the dominant levels.
    """
    stresses, alloc = merge_close_stresses(plan, granularity)
    mask = alloc >= min_units
    return stresses[mask], alloc[mask]
