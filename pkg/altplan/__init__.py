#
# altplan - Simulation-based accelerated life test planning.
#
"""
altplan: optimal constant-stress accelerated life test plans by simulation.

The main entry points are:

- :mod:`altplan.lifestress`: life-stress relationships (stress bases);
- :mod:`altplan.fit.weibull_aft`: Weibull AFT model and censored MLE;
- :mod:`altplan.simulator`: test plans, scenarios and the Monte Carlo RMSE;
- :mod:`altplan.deopt`: the differential evolution plan search;
- :mod:`altplan.planner`: preliminary fits, optimal-plan studies and
  neighbourhood comparisons;
- :mod:`altplan.cli`: the `altplan` command.
"""
from importlib.metadata import version, PackageNotFoundError
try:
    __version__ = version('altplan')
except PackageNotFoundError:
    __version__ = 'unknown'
del version, PackageNotFoundError

import logging


def init_logging(level=logging.INFO):
    """Attach a stream handler to the 'altplan' logger.

    Calling it again only changes the level.
    """
    logger = logging.getLogger('altplan')
    logger.setLevel(level)
    if not any(getattr(h, '_altplan', False) for h in logger.handlers):
        formatter = logging.Formatter('%(levelname)s %(name)s: %(message)s')
        handler = logging.StreamHandler()
        handler.setFormatter(formatter)
        handler._altplan = True
        logger.addHandler(handler)
    return logger


from .lifestress import (DomainError, LifeStressModel, StressBasis,
                         linear_model, quadratic_model, power_law_model,
                         arrhenius_model, sqrt_model, make_model)
from .fit.weibull_aft import (AftParams, CensoredDataset, FitError,
                              FittedModel, fit_mle)
from .streams import Stream
from .simulator import (PlanError, RmseEstimate, Scenario, TestPlan,
                        evaluate_rmse, generate_dataset, make_objective)
from .deopt import DeConfig, PlanEncoding, decode, encode, optimize
from .planner import (PlanReport, StudyConfig, StudyError,
                      calibrate_duration, compare_neighborhood,
                      fit_preliminary, run_fixed_n_study,
                      run_variable_n_study)
