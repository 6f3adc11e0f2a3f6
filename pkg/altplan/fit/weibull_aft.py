#
# altplan - Simulation-based accelerated life test planning.
#
"""
Weibull accelerated-failure-time (AFT) model for right-censored data.

The log-lifetime at stress `S` is modelled as::

    log T = mu(S) + sigma * eps

where `mu(S)` is a :class:`altplan.lifestress.LifeStressModel` location and
`eps` follows the standard smallest-extreme-value distribution. Hence `T` is
Weibull with shape `1/sigma` and scale `exp(mu(S))`, and the median lifetime
is `exp(mu(S)) * log(2)**sigma`.

This module provides the distribution functions (reliability, density,
quantiles, inverse-transform sampling), the Type-I censored log-likelihood,
the maximum likelihood fit (:func:`fit_mle`) and the AIC used for model
selection.

Only the Weibull distribution is implemented. Other location-scale errors
(log-normal, exponential) would enter through `_log_density_and_reliability`,
`_neg_log_likelihood` and the sampling transform.
"""

from collections import namedtuple
import numpy as np
import pandas as pd
from scipy.optimize import minimize

from ..lifestress import basis_matrix, location

import logging
log = logging.getLogger(__name__)


class FitError(RuntimeError):
    """The dataset does not allow identifying the model parameters."""


class AftParams(namedtuple('AftParams', ['beta', 'sigma'])):
    """Parameters of the Weibull AFT model.

    Arguments:
        beta (sequence of floats): coefficients of the life-stress model.
        sigma (float): scale of the log-lifetime error (> 0), the inverse
            of the Weibull shape parameter.
    """
    def __new__(cls, beta, sigma):
        beta = tuple(float(b) for b in np.atleast_1d(beta))
        sigma = float(sigma)
        if not sigma > 0:
            raise ValueError('sigma must be > 0 (got %r).' % sigma)
        return super(AftParams, cls).__new__(cls, beta, sigma)

    @property
    def shape(self):
        """Weibull shape parameter (1/sigma)."""
        return 1. / self.sigma


CensoredObservation = namedtuple('CensoredObservation',
                                 ['stress', 'time', 'observed'])


class CensoredDataset:
    """Lifetimes (failed or right-censored) of units tested at constant stress.

    Data are stored as three aligned arrays: `stress`, `time` and `observed`
    (True for a failure, False for a right-censored unit).

    Arguments:
        stress (array): stress of each unit, in application units.
        time (array): failure or censoring time of each unit (> 0).
        observed (array of bool): failure indicator of each unit.
    """
    def __init__(self, stress, time, observed):
        self.stress = np.asarray(stress, dtype=float).ravel()
        self.time = np.asarray(time, dtype=float).ravel()
        self.observed = np.asarray(observed, dtype=bool).ravel()
        if not self.stress.size == self.time.size == self.observed.size:
            raise ValueError('stress, time and observed must have the same '
                             'size (got %d, %d, %d).' % (
                                 self.stress.size, self.time.size,
                                 self.observed.size))
        if self.stress.size < 1:
            raise ValueError('A dataset needs at least one observation.')
        if np.any(~(self.time > 0)):
            raise ValueError('All times must be > 0 (got min. %r).'
                             % float(np.nanmin(self.time)))

    @classmethod
    def from_observations(cls, observations):
        """Build a dataset from a sequence of :class:`CensoredObservation`."""
        obs = list(observations)
        if len(obs) == 0:
            raise ValueError('A dataset needs at least one observation.')
        stress, time, observed = zip(*obs)
        return cls(stress, time, observed)

    @classmethod
    def from_frame(cls, df):
        """Build a dataset from a DataFrame with `stress,time,status` columns.
        """
        return cls(df['stress'].values, df['time'].values,
                   df['status'].values == 1)

    def to_frame(self):
        """Return a DataFrame with columns `stress,time,status`."""
        return pd.DataFrame(dict(stress=self.stress, time=self.time,
                                 status=self.observed.astype(int)),
                            columns=['stress', 'time', 'status'])

    @property
    def n(self):
        return self.stress.size

    @property
    def n_failures(self):
        return int(self.observed.sum())

    @property
    def observations(self):
        return [CensoredObservation(float(s), float(t), bool(o))
                for s, t, o in zip(self.stress, self.time, self.observed)]

    def censoring_fractions(self):
        """Return a Series of censored fraction indexed by stress level."""
        df = self.to_frame()
        return 1 - df.groupby('stress')['status'].mean()

    def __len__(self):
        return self.n

    def __repr__(self):
        return '<CensoredDataset: %d units, %d failures, %d stresses>' % (
            self.n, self.n_failures, np.unique(self.stress).size)


class FittedModel(namedtuple('FittedModel',
                             ['model', 'params', 'log_likelihood', 'converged',
                              'n_params', 'aic', 'n_iter'])):
    """Result of :func:`fit_mle`.

    Attributes:
        model (LifeStressModel): the fitted life-stress relationship.
        params (AftParams): the maximum likelihood estimates.
        log_likelihood (float): log-likelihood at `params`.
        converged (bool): True when the optimizer met its tolerances.
        n_params (int): number of free parameters (coefficients + sigma).
        aic (float): `2 * n_params - 2 * log_likelihood`.
        n_iter (int): number of optimizer iterations.
    """


##
# Distribution functions
#
def _standardized(t, s, model, params):
    """Return `(log(t) - mu(s)) / sigma`."""
    mu = location(model, params.beta, s)
    with np.errstate(divide='ignore'):
        return (np.log(t) - mu) / params.sigma


def reliability(t, s, model, params):
    """Return the reliability R(t | S=s) = exp(-(t / exp(mu(s)))**(1/sigma)).

    Arguments:
        t (float or array): time(s) >= 0.
        s (float or array): stress(es) in the model domain.
        model (LifeStressModel): life-stress relationship.
        params (AftParams): model parameters.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError('Times must be >= 0.')
    with np.errstate(over='ignore'):
        R = np.exp(-np.exp(_standardized(t, s, model, params)))
    return float(R) if np.ndim(R) == 0 else R


def density(t, s, model, params):
    """Return the Weibull probability density at time `t` and stress `s`."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError('Times must be > 0 to evaluate the density.')
    w = _standardized(t, s, model, params)
    with np.errstate(over='ignore'):
        f = np.exp(w - np.exp(w)) / (params.sigma * t)
    return float(f) if np.ndim(f) == 0 else f


def quantile(tau, s, model, params):
    """Return the `tau`-quantile of the lifetime at stress `s`.

    The quantile is `exp(mu(s)) * (-log(1 - tau))**sigma`. For `tau=0.5`
    it is the median lifetime.
    """
    tau_arr = np.asarray(tau, dtype=float)
    if np.any((tau_arr <= 0) | (tau_arr >= 1)):
        raise ValueError('tau must be in the open interval (0, 1) (got %r).'
                         % (tau,))
    mu = location(model, params.beta, s)
    q = np.exp(mu + params.sigma * np.log(-np.log1p(-tau_arr)))
    return float(q) if np.ndim(q) == 0 else q


def median(s, model, params):
    """Return the median lifetime `exp(mu(s)) * log(2)**sigma`."""
    return quantile(0.5, s, model, params)


def sample_lifetimes(stresses, model, params, u):
    """Inverse-transform sampling of lifetimes.

    Arguments:
        stresses (float or array): stress of each unit.
        model (LifeStressModel): life-stress relationship.
        params (AftParams): model parameters.
        u (float or array): uniform variates in the open interval (0, 1),
            broadcastable with `stresses`.

    Returns:
        Lifetimes `exp(mu(s) + sigma * log(-log(1 - u)))`.
    """
    u = np.asarray(u, dtype=float)
    if np.any((u <= 0) | (u >= 1)):
        raise ValueError('Uniform variates must be in the open interval '
                         '(0, 1).')
    mu = location(model, params.beta, stresses)
    t = np.exp(mu + params.sigma * np.log(-np.log1p(-u)))
    return float(t) if np.ndim(t) == 0 else t


def sample_lifetime(s, model, params, u):
    """Return one lifetime at stress `s` from the uniform variate `u`."""
    return float(sample_lifetimes(s, model, params, float(u)))


##
# Likelihood
#
def _log_density_and_reliability(w, log_t, log_sigma):
    log_f = w - np.exp(w) - log_sigma - log_t
    log_R = -np.exp(w)
    return log_f, log_R


def _neg_log_likelihood(theta, X, log_t, observed):
    """Negative log-likelihood as function of theta = (beta, log(sigma))."""
    log_sigma = theta[-1]
    with np.errstate(over='ignore', invalid='ignore'):
        w = (log_t - X @ theta[:-1]) * np.exp(-log_sigma)
        ew = np.exp(w)
        ll = np.sum(observed * (w - log_sigma - log_t)) - np.sum(ew)
    if not np.isfinite(ll):
        return np.inf
    return -ll


def log_likelihood(data, model, params):
    """Return the right-censored log-likelihood of `data`.

    The log-likelihood is::

        sum(delta_i * log f(t_i) + (1 - delta_i) * log R(t_i))

    where `delta_i` is 1 for failures and 0 for censored units.

    Arguments:
        data (CensoredDataset): the lifetime data.
        model (LifeStressModel): life-stress relationship.
        params (AftParams): model parameters.
    """
    if np.any(data.time <= 0):
        raise ValueError('All times must be > 0.')
    X = basis_matrix(model, data.stress)
    log_t = np.log(data.time)
    w = (log_t - X @ np.asarray(params.beta)) / params.sigma
    with np.errstate(over='ignore'):
        log_f, log_R = _log_density_and_reliability(w, log_t,
                                                    np.log(params.sigma))
    return float(np.sum(np.where(data.observed, log_f, log_R)))


##
# Fitting
#
def _least_squares(X, log_t):
    coeffs, *_ = np.linalg.lstsq(X, log_t, rcond=None)
    resid_std = np.std(log_t - X @ coeffs)
    return coeffs, resid_std


def initial_params(data, model, min_sigma=1e-3):
    """Least-squares starting point for :func:`fit_mle`.

    The log-times of the failures are regressed on the basis matrix and
    sigma is set to the residual standard deviation. When there are too few
    failures (less than `model.dimension + 1`) all the units are used,
    censored ones included, so that a crude estimate is always available.

    Arguments:
        data (CensoredDataset): the lifetime data.
        model (LifeStressModel): life-stress relationship.
        min_sigma (float): lower bound for the initial sigma.

    Returns:
        An :class:`AftParams` object.
    """
    X = basis_matrix(model, data.stress)
    log_t = np.log(data.time)
    mask = data.observed
    if mask.sum() < model.dimension + 1:
        mask = np.ones(data.n, dtype=bool)
    coeffs, resid_std = _least_squares(X[mask], log_t[mask])
    return AftParams(coeffs, max(resid_std, min_sigma))


def check_identifiable(data, model):
    """Raise :class:`FitError` if `data` cannot identify `model`."""
    dim = model.dimension
    if data.n_failures < dim + 1:
        raise FitError('Fitting a %d-coefficient model requires at least %d '
                       'failures (got %d).' % (dim, dim + 1, data.n_failures))
    if np.unique(data.stress[data.observed]).size < 2:
        raise FitError('Failures must span at least 2 distinct stresses.')
    if np.unique(data.stress).size < dim:
        raise FitError("Basis '%s' needs at least %d distinct stresses "
                       "(got %d)." % (model.basis, dim,
                                      np.unique(data.stress).size))


def fit_mle(data, model, init=None, xrtol=1e-8, frtol=1e-8, maxiter=None):
    """Maximum likelihood fit of the Weibull AFT model to censored data.

    The log-likelihood is maximized over `(R beta, log(sigma))` with the
    Nelder-Mead simplex method, where `X = Q R` is the QR decomposition of
    the basis matrix. Sigma stays positive without constraints.

    Arguments:
        data (CensoredDataset): the lifetime data.
        model (LifeStressModel): life-stress relationship to fit.
        init (AftParams or None): starting point. If None, uses
            :func:`initial_params`.
        xrtol, frtol (floats): relative termination tolerances of the
            simplex on the parameters and on the log-likelihood. They are
            scaled by the magnitude (at least 1) of the starting point and
            of its log-likelihood.
        maxiter (int or None): max number of iterations. Default
            `400 * (number of parameters)`.

    Returns:
        A :class:`FittedModel`. If the optimizer stops before meeting its
        tolerances `converged` is False: the caller decides what to do.

    Raises:
        FitError: if the data cannot identify the model (too few failures,
            or not enough distinct stresses).
    """
    check_identifiable(data, model)
    if init is None:
        init = initial_params(data, model)
    n_params = model.dimension + 1
    if maxiter is None:
        maxiter = 400 * n_params
    X = basis_matrix(model, data.stress)
    log_t = np.log(data.time)
    observed = data.observed.astype(float)

    # Optimize in the coordinates of the (scaled) orthonormal basis Q,
    # where X = Q R: polynomial columns are strongly collinear otherwise
    Q, R = np.linalg.qr(X)
    scale = np.sqrt(data.n)
    Q, R = Q * scale, R / scale
    gamma0 = R @ np.asarray(init.beta)
    theta0 = np.append(gamma0, np.log(init.sigma))
    args = (Q, log_t, observed)
    xatol = xrtol * max(1., np.abs(theta0).max())
    f0 = _neg_log_likelihood(theta0, *args)
    fatol = frtol * (max(1., abs(f0)) if np.isfinite(f0) else 1.)

    res = minimize(_neg_log_likelihood, theta0, args=args,
                   method='Nelder-Mead',
                   options=dict(xatol=xatol, fatol=fatol, maxiter=maxiter,
                                maxfev=2 * maxiter))
    converged = bool(res.success) and np.isfinite(res.fun)
    if not converged:
        log.debug('MLE fit (%s) did not converge: %s', model.basis,
                  res.message)
    beta = np.linalg.solve(R, res.x[:-1])
    params = AftParams(beta, np.exp(res.x[-1]))
    ll = -float(res.fun)
    return FittedModel(model=model, params=params, log_likelihood=ll,
                       converged=converged, n_params=n_params,
                       aic=2 * n_params - 2 * ll, n_iter=int(res.nit))


def aic(fit):
    """Return the Akaike information criterion of a converged fit."""
    if not fit.converged:
        raise ValueError('AIC is defined only for converged fits.')
    return 2 * fit.n_params - 2 * fit.log_likelihood
