#
# altplan - Simulation-based accelerated life test planning.
#
"""
In this module we define the life-stress relationship used by the
accelerated-failure-time model, i.e. the location of the log-lifetime as a
function of the stress `S`::

    mu(S) = beta[0] + beta[1] * g(S) [+ beta[2] * g(S)**2 + ...]

The relationship is described by two objects:

- :class:`StressBasis`: the transform `g` (and the number of terms),
- :class:`LifeStressModel`: a basis plus the interval of admissible stresses.

The common empirical models reduce to one of the bases below once their
constants are folded into the coefficients:

=======================  ====================================  ==============
Empirical model          Log-linear form                       Basis
=======================  ====================================  ==============
Thermochemical           `log T = b0 + b1 S`                   `identity`
Arrhenius                `log T = b0 + b1 / S`                 `reciprocal`
Inverse power law        `log T = b0 + b1 log(S)`              `log`
Exponential sqrt(S)      `log T = b0 + b1 sqrt(S)`             `sqrt`
Polynomial (degree d)    `log T = b0 + b1 S + ... + bd S**d`   `poly:d`
=======================  ====================================  ==============

Bases are created from the strings above with :meth:`StressBasis.from_str`
(the syntax used in configuration files) and printed back with `str()`.
"""

from collections import namedtuple
import numpy as np


class DomainError(ValueError):
    """A stress outside the domain of a basis, or an invalid basis spec."""


_SCALAR_KINDS = ('identity', 'reciprocal', 'log', 'sqrt')

# Aliases accepted by `StressBasis.from_str`
_ALIASES = {'linear': 'identity', 'thermochemical': 'identity',
            'arrhenius': 'reciprocal', 'power': 'log', 'power-law': 'log',
            'quadratic': 'poly:2', 'cubic': 'poly:3'}


# Implementation Rationale:
#
#   As for the other small value types in altplan, the basis is an immutable
#   named tuple: it can be used as dictionary key (e.g. for AIC tables) and
#   compared by value. The __new__ method only allows valid combinations.
#
class StressBasis(namedtuple('StressBasis', ['kind', 'degree'])):
    """Transform of the stress used as regressor of the log-lifetime.

    Arguments:
        kind (string): one of 'identity', 'reciprocal', 'log', 'sqrt'
            or 'poly'.
        degree (int): polynomial degree, only for `kind='poly'` (>= 1).
            Must be None (or 1) for the other kinds.
    """
    valid_kinds = _SCALAR_KINDS + ('poly',)

    def __new__(cls, kind, degree=None):
        if kind not in cls.valid_kinds:
            raise DomainError("Invalid basis kind '%s'. Valid kinds are: %s."
                              % (kind, ', '.join(cls.valid_kinds)))
        if kind == 'poly':
            if degree is None or int(degree) != degree or degree < 1:
                raise DomainError("Polynomial degree must be an integer "
                                  ">= 1 (got %r)." % (degree,))
            degree = int(degree)
        else:
            if degree not in (None, 1):
                raise DomainError("Basis '%s' does not take a degree." % kind)
            degree = 1
        return super(StressBasis, cls).__new__(cls, kind, degree)

    @classmethod
    def from_str(cls, basis_str):
        """Create a basis from strings like 'log' or 'poly:2'."""
        text = basis_str.strip().lower()
        text = _ALIASES.get(text, text)
        if text.startswith('poly'):
            _, sep, degree = text.partition(':')
            try:
                degree = int(degree) if sep else None
            except ValueError:
                raise DomainError("Invalid polynomial degree in '%s'."
                                  % basis_str) from None
            return cls('poly', degree)
        return cls(text)

    @property
    def dimension(self):
        """Number of coefficients, intercept included."""
        return self.degree + 1

    @property
    def requires_positive(self):
        return self.kind in ('reciprocal', 'log')

    @property
    def requires_nonnegative(self):
        return self.kind == 'sqrt'

    def transform(self, s):
        """Return g(s) for the scalar kinds, or `s` for polynomials."""
        if self.kind == 'reciprocal':
            return 1. / s
        elif self.kind == 'log':
            return np.log(s)
        elif self.kind == 'sqrt':
            return np.sqrt(s)
        return s

    def __str__(self):
        if self.kind == 'poly':
            return 'poly:%d' % self.degree
        return self.kind


def parse_basis(basis_str):
    """Return the :class:`StressBasis` described by `basis_str`."""
    return StressBasis.from_str(basis_str)


class LifeStressModel(namedtuple('LifeStressModel',
                                 ['basis', 'stress_domain'])):
    """A life-stress relationship: a basis and the admissible stress range.

    Arguments:
        basis (StressBasis or string): the stress transform.
        stress_domain (2-tuple): (lower, upper) bounds of admissible stresses
            in application units. Bases 'reciprocal' and 'log' require
            lower > 0, 'sqrt' requires lower >= 0.
    """
    def __new__(cls, basis, stress_domain=(0., np.inf)):
        if isinstance(basis, str):
            basis = StressBasis.from_str(basis)
        lower, upper = (float(v) for v in stress_domain)
        if not lower < upper:
            raise DomainError('Empty stress domain [%g, %g].' % (lower, upper))
        if basis.requires_positive and lower <= 0:
            raise DomainError("Basis '%s' requires a stress domain with "
                              "lower bound > 0 (got %g)." % (basis, lower))
        if basis.requires_nonnegative and lower < 0:
            raise DomainError("Basis '%s' requires a stress domain with "
                              "lower bound >= 0 (got %g)." % (basis, lower))
        return super(LifeStressModel, cls).__new__(cls, basis, (lower, upper))

    @property
    def dimension(self):
        return self.basis.dimension

    def contains(self, s):
        """True when all the stresses in `s` are inside the domain."""
        s = np.asarray(s, dtype=float)
        lower, upper = self.stress_domain
        return bool(np.all((s >= lower) & (s <= upper)))

    def check_domain(self, s):
        """Raise :class:`DomainError` if any stress in `s` is out of domain."""
        s = np.asarray(s, dtype=float)
        lower, upper = self.stress_domain
        bad = ~((s >= lower) & (s <= upper))
        if np.any(bad):
            value = np.atleast_1d(s)[np.atleast_1d(bad)][0]
            raise DomainError("Stress %r is outside the domain [%g, %g] of "
                              "basis '%s'." % (float(value), lower, upper,
                                               self.basis))


def linear_model(stress_domain=(0., np.inf)):
    """Linear (thermochemical) model: `mu(S) = b0 + b1 S`."""
    return LifeStressModel('identity', stress_domain)

def quadratic_model(stress_domain=(0., np.inf)):
    """Quadratic model: `mu(S) = b0 + b1 S + b2 S**2`."""
    return LifeStressModel(StressBasis('poly', 2), stress_domain)

def power_law_model(stress_domain=(1e-12, np.inf)):
    """Inverse power law: `mu(S) = b0 + b1 log(S)`."""
    return LifeStressModel('log', stress_domain)

def arrhenius_model(stress_domain=(1e-12, np.inf)):
    """Arrhenius model: `mu(S) = b0 + b1 / S`."""
    return LifeStressModel('reciprocal', stress_domain)

def sqrt_model(stress_domain=(0., np.inf)):
    """Exponential square-root model: `mu(S) = b0 + b1 sqrt(S)`."""
    return LifeStressModel('sqrt', stress_domain)


def make_model(basis, stress_domain=None):
    """Return a model for `basis` (string or StressBasis).

    When `stress_domain` is None, the domain is (0, inf) with a tiny
    positive lower bound for the 'reciprocal' and 'log' bases.
    """
    if isinstance(basis, str):
        basis = StressBasis.from_str(basis)
    if stress_domain is None:
        lower = 1e-12 if basis.requires_positive else 0.
        stress_domain = (lower, np.inf)
    return LifeStressModel(basis, stress_domain)


def basis_matrix(model, stresses):
    """Return the 2-D basis matrix, one row per stress.

    Arguments:
        model (LifeStressModel): the life-stress relationship.
        stresses (array): stresses, all inside `model.stress_domain`.

    Returns:
        Array of shape (len(stresses), model.dimension). First column is 1.
    """
    s = np.atleast_1d(np.asarray(stresses, dtype=float))
    model.check_domain(s)
    basis = model.basis
    g = basis.transform(s)
    return np.vander(g, basis.dimension, increasing=True)


def basis_vector(model, s):
    """Return the basis vector `(1, g(s), [g(s)**2, ...])` for stress `s`."""
    return basis_matrix(model, [s])[0]


def _check_beta(model, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (model.dimension,):
        raise ValueError("Coefficient vector has length %d, basis '%s' "
                         "needs %d." % (beta.size, model.basis,
                                        model.dimension))
    return beta


def location(model, beta, s):
    """Return the location `mu(s) = beta . basis_vector(s)`.

    `s` can be a scalar (returns a float) or an array (returns an array).
    """
    beta = _check_beta(model, beta)
    if np.ndim(s) == 0:
        return float(basis_vector(model, s) @ beta)
    return basis_matrix(model, s) @ beta
