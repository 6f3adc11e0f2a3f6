#
# altplan - Simulation-based accelerated life test planning.
#
"""
Differential evolution (DE) search of optimal test plans.

The optimizer works on a normalized *genotype* in `[0, 1]**ndim`. A genotype
of a plan with (up to) `N` stresses has `2N` genes: the first `N` genes are
the stress levels (mapped affinely on the stress bounds), the last `N`
genes are the (relative) unit allocations. :func:`decode` repairs any
genotype into a valid :class:`altplan.simulator.TestPlan`:

- allocations are apportioned to integers summing to the total number of
  units (largest-remainder method, ties to the lower index), then raised to
  the minimum number of units per stress taking units from the largest
  allocation;
- in *variable-N* mode, stresses with 0 units are dropped (at least 2 stresses
  are always kept);
- stresses are sorted and shifted so that consecutive levels are at least
  `granularity` apart, without leaving the stress bounds.

The DE strategy is rand/1/bin with synchronous (per generation) greedy
selection. Fitness of surviving vectors is not re-evaluated.
"""

from collections import namedtuple
import numpy as np
import pandas as pd

from .simulator import PlanError, TestPlan

import logging
log = logging.getLogger(__name__)


# When True, every decoded plan is checked against the encoding constraints
debug_checks = False

# Relative tolerance on the granularity for floating point rounding
_GAP_RTOL = 1e-9

# Errors in an objective evaluation that give infinite fitness
_EVALUATION_ERRORS = (ArithmeticError, ValueError, RuntimeError,
                      np.linalg.LinAlgError)


class DeConfig(namedtuple('DeConfig', ['population_size', 'F', 'CR',
                                       'generations', 'strategy'])):
    """Differential evolution settings.

    Arguments:
        population_size (int or None): number of vectors in the population.
            If None, 10 times the genotype dimension.
        F (float): differential weight, in (0, 2].
        CR (float): crossover probability, in [0, 1].
        generations (int): number of generations.
        strategy (string): only 'rand1bin' is supported.
    """
    def __new__(cls, population_size=None, F=0.8, CR=0.9, generations=50,
                strategy='rand1bin'):
        if population_size is not None:
            population_size = int(population_size)
            if population_size < 4:
                raise ValueError('population_size must be >= 4 (got %d).'
                                 % population_size)
        if not 0 < F <= 2:
            raise ValueError('F must be in (0, 2] (got %r).' % F)
        if not 0 <= CR <= 1:
            raise ValueError('CR must be in [0, 1] (got %r).' % CR)
        if int(generations) != generations or generations < 1:
            raise ValueError('generations must be a positive integer '
                             '(got %r).' % generations)
        if strategy != 'rand1bin':
            raise ValueError("Unsupported DE strategy '%s' (only "
                             "'rand1bin')." % strategy)
        return super(DeConfig, cls).__new__(cls, population_size, float(F),
                                            float(CR), int(generations),
                                            strategy)

    def population_for(self, ndim):
        if self.population_size is None:
            return max(10 * ndim, 4)
        return self.population_size


class PlanEncoding(namedtuple('PlanEncoding', [
        'mode', 'n_stresses', 'stress_bounds', 'total_units', 'granularity',
        'duration', 'design_stress'])):
    """Mapping between genotypes and test plans.

    Arguments:
        mode (string): 'fixed' (exactly `n_stresses` levels, each with at
            least 1 unit) or 'variable' (up to `n_stresses` levels, levels
            with 0 units are dropped).
        n_stresses (int): N (fixed mode) or N_max (variable mode), >= 2.
        stress_bounds (2-tuple): (lower, upper) admissible test stresses.
        total_units (int): number of units in every plan.
        granularity (float): min. gap between consecutive stress levels.
        duration (float): test duration of the decoded plans.
        design_stress (float): design stress of the decoded plans.
    """
    def __new__(cls, mode, n_stresses, stress_bounds, total_units,
                granularity=1e-5, duration=np.inf, design_stress=0.):
        if mode not in ('fixed', 'variable'):
            raise ValueError("Encoding mode must be 'fixed' or 'variable' "
                             "(got '%s')." % mode)
        n_stresses, total_units = int(n_stresses), int(total_units)
        lower, upper = (float(v) for v in stress_bounds)
        granularity = float(granularity)
        if n_stresses < 2:
            raise ValueError('At least 2 stresses are needed (got %d).'
                             % n_stresses)
        if not lower < upper:
            raise ValueError('Invalid stress bounds [%g, %g].'
                             % (lower, upper))
        if not granularity > 0:
            raise ValueError('granularity must be > 0 (got %r).'
                             % granularity)
        if (n_stresses - 1) * granularity > upper - lower:
            raise ValueError('%d stresses with granularity %g do not fit in '
                             '[%g, %g].' % (n_stresses, granularity, lower,
                                            upper))
        min_units = 1 if mode == 'fixed' else 0
        if total_units < max(n_stresses * min_units, 2):
            raise ValueError('%d units cannot be allocated to %d stresses.'
                             % (total_units, n_stresses))
        if not float(design_stress) < lower:
            raise ValueError('The design stress (%g) must be below the lower '
                             'stress bound (%g).' % (design_stress, lower))
        return super(PlanEncoding, cls).__new__(
            cls, mode, n_stresses, (lower, upper), total_units, granularity,
            float(duration), float(design_stress))

    @classmethod
    def fixed(cls, n_stresses, stress_bounds, total_units, **kwargs):
        return cls('fixed', n_stresses, stress_bounds, total_units, **kwargs)

    @classmethod
    def variable(cls, n_max, stress_bounds, total_units, **kwargs):
        return cls('variable', n_max, stress_bounds, total_units, **kwargs)

    @property
    def min_units(self):
        return 1 if self.mode == 'fixed' else 0

    @property
    def ndim(self):
        return 2 * self.n_stresses

    @property
    def label(self):
        return ('%d*' if self.mode == 'variable' else '%d') % self.n_stresses


##
# Genotype <-> plan
#
def apportion(weights, total, min_units=0):
    """Integer allocation of `total` units proportional to `weights`.

    Uses the largest-remainder method (ties go to the lower index), then
    raises every allocation below `min_units`, taking the units from the
    largest allocation.

    Arguments:
        weights (array): non-negative weights. All-zero weights are treated
            as equal weights.
        total (int): number of units to allocate.
        min_units (int): minimum units per element.

    Returns:
        Integer array with the same size as `weights` summing to `total`.
    """
    w = np.asarray(weights, dtype=float)
    if w.sum() <= 0:
        w = np.ones_like(w)
    quotas = total * w / w.sum()
    alloc = np.floor(quotas).astype(int)
    remainder = total - alloc.sum()
    order = np.argsort(-(quotas - alloc), kind='stable')
    alloc[order[:remainder]] += 1
    for j in range(alloc.size):
        while alloc[j] < min_units:
            alloc[np.argmax(alloc)] -= 1
            alloc[j] += 1
    return alloc


def repair_gaps(stresses, bounds, granularity):
    """Shift sorted stresses so that consecutive gaps are >= `granularity`.

    A forward sweep moves stresses up by the minimal amount; if the last
    stress exceeds the upper bound, a backward sweep from the upper bound
    moves stresses down.
    """
    lower, upper = bounds
    s = np.clip(np.array(stresses, dtype=float), lower, upper)
    for j in range(1, s.size):
        s[j] = max(s[j], s[j - 1] + granularity)
    if s[-1] > upper:
        s[-1] = upper
        for j in range(s.size - 2, -1, -1):
            s[j] = min(s[j], s[j + 1] - granularity)
    return s


def decode(genes, encoding):
    """Return the :class:`TestPlan` encoded by a genotype in `[0, 1]**ndim`.

    The decoded plan always satisfies the plan constraints: allocations sum
    to `encoding.total_units`, each allocation is >= 1, stresses are inside
    the bounds and at least `encoding.granularity` apart.
    """
    genes = np.clip(np.asarray(genes, dtype=float), 0, 1)
    N = encoding.n_stresses
    if genes.shape != (2 * N,):
        raise ValueError('Expected %d genes (got %s).' % (2 * N, genes.shape))
    stress_genes, alloc_genes = genes[:N], genes[N:]
    alloc = apportion(alloc_genes, encoding.total_units, encoding.min_units)
    keep = alloc > 0
    if keep.sum() < 2:
        largest = np.argsort(-alloc_genes, kind='stable')[:2]
        alloc = np.zeros(N, dtype=int)
        alloc[largest] = (encoding.total_units - 1, 1)
        keep = alloc > 0

    lower, upper = encoding.stress_bounds
    stresses = lower + stress_genes[keep] * (upper - lower)
    alloc = alloc[keep]
    order = np.argsort(stresses, kind='stable')
    stresses = repair_gaps(stresses[order], encoding.stress_bounds,
                           encoding.granularity)
    plan = TestPlan(stresses, alloc[order], duration=encoding.duration,
                    design_stress=encoding.design_stress)
    if debug_checks:
        check_plan(plan, encoding)
    return plan


def encode(plan, encoding):
    """Return a genotype that decodes to `plan` (inverse of :func:`decode`).

    In variable mode, unused slots get zero allocation genes.
    """
    N = encoding.n_stresses
    if plan.n_stresses > N or (encoding.mode == 'fixed' and
                               plan.n_stresses != N):
        raise PlanError('A %d-stress plan cannot be encoded with %s '
                        'encoding N=%d.' % (plan.n_stresses, encoding.mode, N))
    lower, upper = encoding.stress_bounds
    genes = np.zeros(2 * N)
    k = plan.n_stresses
    genes[:k] = (np.array(plan.stresses) - lower) / (upper - lower)
    genes[N:N + k] = np.array(plan.allocations) / plan.total_units
    return np.clip(genes, 0, 1)


def check_plan(plan, encoding):
    """Raise :class:`PlanError` if `plan` violates the encoding constraints.
    """
    lower, upper = encoding.stress_bounds
    s = np.array(plan.stresses)
    tol = _GAP_RTOL * encoding.granularity
    if plan.total_units != encoding.total_units:
        raise PlanError('Plan has %d units, expected %d.'
                        % (plan.total_units, encoding.total_units))
    if plan.n_stresses > encoding.n_stresses:
        raise PlanError('Plan has %d stresses, max. is %d.'
                        % (plan.n_stresses, encoding.n_stresses))
    if encoding.mode == 'fixed' and plan.n_stresses != encoding.n_stresses:
        raise PlanError('Plan has %d stresses, expected %d.'
                        % (plan.n_stresses, encoding.n_stresses))
    if s[0] < lower - tol or s[-1] > upper + tol:
        raise PlanError('Stresses %s outside the bounds [%g, %g].'
                        % (plan.stresses, lower, upper))
    if np.any(np.diff(s) < encoding.granularity - tol):
        raise PlanError('Stresses %s closer than the granularity %g.'
                        % (plan.stresses, encoding.granularity))
    if min(plan.allocations) < max(encoding.min_units, 1):
        raise PlanError('Allocations %s below the minimum.'
                        % (plan.allocations,))


##
# Differential evolution engine
#
DeResult = namedtuple('DeResult', ['genes', 'fitness', 'payload', 'trace'])

PlanSearchResult = namedtuple('PlanSearchResult',
                              ['plan', 'estimate', 'trace', 'genes'])


def _init_population_lhs(rng, size, ndim):
    """Latin hypercube initialization of the population in [0, 1]**ndim."""
    segsize = 1.0 / size
    samples = (segsize * rng.uniform(size=(size, ndim))
               + np.linspace(0., 1., size, endpoint=False)[:, np.newaxis])
    population = np.zeros_like(samples)
    for j in range(ndim):
        order = rng.permutation(size)
        population[:, j] = samples[order, j]
    return population


def _select_samples(rng, candidate, size, number=3):
    """Distinct random population indexes, all different from `candidate`."""
    idx = rng.choice(size - 1, number, replace=False)
    idx[idx >= candidate] += 1
    return idx


def _evaluate(func, genes):
    try:
        fitness, payload = func(genes)
    except _EVALUATION_ERRORS as e:
        log.debug('Evaluation failed (%s: %s), fitness set to inf.',
                  type(e).__name__, e)
        return np.inf, None, True
    return float(fitness), payload, False


def minimize_genotype(func, ndim, config, stream, init=None):
    """Minimize `func` on `[0, 1]**ndim` with DE rand/1/bin.

    Arguments:
        func (callable): function of a genotype array returning the
            2-tuple (fitness, payload). The payload (any object) of the best
            vector is returned. Errors raised by `func` give +inf fitness.
        ndim (int): genotype dimension.
        config (DeConfig): DE settings.
        stream (Stream): random sub-stream for the DE moves.
        init (array or None): optional genotype replacing the first member of
            the initial population.

    Returns:
        A :class:`DeResult` with best genes, fitness, payload and a
        DataFrame `trace` with one row per generation (generation 0 is the
        initial population) and columns `generation`, `best`, `mean`,
        `n_failed`.
    """
    rng = stream.generator()
    size = config.population_for(ndim)
    population = _init_population_lhs(rng, size, ndim)
    if init is not None:
        population[0] = np.clip(init, 0, 1)

    fitness = np.empty(size)
    payloads = [None] * size
    n_failed = 0
    for i in range(size):
        fitness[i], payloads[i], failed = _evaluate(func, population[i])
        n_failed += failed
    rows = [_trace_row(0, fitness, n_failed)]
    log.info('DE generation 0: best %.6g (%d failed evaluations)',
             rows[-1]['best'], n_failed)

    for generation in range(1, config.generations + 1):
        trials = np.empty_like(population)
        for i in range(size):
            r1, r2, r3 = _select_samples(rng, i, size)
            mutant = population[r1] + config.F * (population[r2]
                                                  - population[r3])
            crossover = rng.uniform(size=ndim) < config.CR
            crossover[rng.integers(ndim)] = True
            trials[i] = np.clip(np.where(crossover, mutant, population[i]),
                                0, 1)
        # Synchronous selection: all trials are evaluated first
        results = [_evaluate(func, trial) for trial in trials]
        n_failed = 0
        for i, (f_trial, payload, failed) in enumerate(results):
            n_failed += failed
            if f_trial <= fitness[i]:
                population[i] = trials[i]
                fitness[i], payloads[i] = f_trial, payload
        rows.append(_trace_row(generation, fitness, n_failed))
        log.info('DE generation %d: best %.6g (%d failed evaluations)',
                 generation, rows[-1]['best'], n_failed)

    best = int(np.argmin(fitness))
    trace = pd.DataFrame(rows, columns=['generation', 'best', 'mean',
                                        'n_failed'])
    return DeResult(population[best].copy(), float(fitness[best]),
                    payloads[best], trace)


def _trace_row(generation, fitness, n_failed):
    finite = fitness[np.isfinite(fitness)]
    mean = float(finite.mean()) if finite.size else np.inf
    return dict(generation=generation, best=float(fitness.min()), mean=mean,
                n_failed=n_failed)


def optimize(objective, encoding, config, stream, init_plan=None):
    """Search the test plan minimizing `objective` with DE.

    Arguments:
        objective (callable): function of a :class:`TestPlan` returning an
            :class:`altplan.simulator.RmseEstimate` (for example an
            :class:`altplan.simulator.Objective`).
        encoding (PlanEncoding): the plan search space.
        config (DeConfig): DE settings.
        stream (Stream): random sub-stream for the DE moves.
        init_plan (TestPlan or None): optional plan placed in the initial
            population.

    Returns:
        A `PlanSearchResult` namedtuple (plan, estimate, trace, genes) with
        the best plan found, its RMSE estimate and the per-generation trace
        (see :func:`minimize_genotype`).
    """
    def func(genes):
        plan = decode(genes, encoding)
        estimate = objective(plan)
        return estimate.rmse, (plan, estimate)

    init = None if init_plan is None else encode(init_plan, encoding)
    res = minimize_genotype(func, encoding.ndim, config, stream, init=init)
    if res.payload is None:
        raise RuntimeError('All the objective evaluations failed.')
    plan, estimate = res.payload
    return PlanSearchResult(plan, estimate, res.trace, res.genes)
