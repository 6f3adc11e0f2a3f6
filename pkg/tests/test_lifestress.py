"""
Unittest for lifestress.py
"""

import pytest
import numpy as np

from altplan.lifestress import (DomainError, LifeStressModel, StressBasis,
                                basis_matrix, basis_vector, linear_model,
                                location, make_model, parse_basis,
                                power_law_model, quadratic_model,
                                arrhenius_model, sqrt_model)


@pytest.mark.parametrize('text, kind, degree', [
    ('identity', 'identity', 1),
    ('Linear', 'identity', 1),
    ('arrhenius', 'reciprocal', 1),
    ('power', 'log', 1),
    ('sqrt', 'sqrt', 1),
    ('quadratic', 'poly', 2),
    ('poly:3', 'poly', 3),
])
def test_parse_basis(text, kind, degree):
    basis = parse_basis(text)
    assert basis == StressBasis(kind, degree if kind == 'poly' else None)
    assert basis.degree == degree
    assert parse_basis(str(basis)) == basis


@pytest.mark.parametrize('text', ['cubic-ish', 'poly:0', 'poly:x', 'poly',
                                  'exp'])
def test_parse_basis_invalid(text):
    with pytest.raises(DomainError):
        parse_basis(text)


def test_basis_kwargs():
    with pytest.raises(DomainError):
        StressBasis('log', 2)
    assert StressBasis('poly', 2).dimension == 3
    assert StressBasis('log').dimension == 2


def test_basis_vector():
    s = 0.3
    assert np.allclose(basis_vector(linear_model(), s), [1, s])
    assert np.allclose(basis_vector(quadratic_model(), s), [1, s, s**2])
    assert np.allclose(basis_vector(power_law_model(), s), [1, np.log(s)])
    assert np.allclose(basis_vector(arrhenius_model(), s), [1, 1 / s])
    assert np.allclose(basis_vector(sqrt_model(), s), [1, np.sqrt(s)])


def test_basis_matrix():
    s = np.array([0.1, 0.5, 0.9])
    X = basis_matrix(quadratic_model(), s)
    assert X.shape == (3, 3)
    assert np.all(X[:, 0] == 1)
    assert np.allclose(X[:, 2], s**2)


def test_domain_errors():
    with pytest.raises(DomainError):
        basis_vector(power_law_model(), 0.)
    with pytest.raises(DomainError):
        basis_matrix(linear_model((0.1, 0.9)), [0.5, 1.5])
    with pytest.raises(DomainError):
        LifeStressModel('log', (0., 1.))
    with pytest.raises(DomainError):
        LifeStressModel('sqrt', (-1., 1.))
    with pytest.raises(DomainError):
        LifeStressModel('identity', (1., 1.))


def test_domain_error_message():
    with pytest.raises(DomainError) as excinfo:
        linear_model((0.1, 0.9)).check_domain(2.)
    msg = str(excinfo.value)
    assert '2.0' in msg and 'identity' in msg


def test_location():
    beta = (12.5, -19.5)
    mu = location(linear_model(), beta, 0.1)
    assert isinstance(mu, float)
    assert mu == pytest.approx(10.55)
    mu = location(linear_model(), beta, [0.1, 0.2])
    assert mu.shape == (2,)
    assert np.allclose(mu, [10.55, 8.6])
    with pytest.raises(ValueError):
        location(linear_model(), (1., 2., 3.), 0.1)


@pytest.mark.parametrize('model, beta, s, expected', [
    (linear_model(), (12.5, -19.5), 0.05, 11.525),
    (quadratic_model(), (13.4, -37.9, 17.7), 0.1, 9.787),
    (power_law_model(), (-6.9, -6.2), 1., -6.9),
])
def test_location_values(model, beta, s, expected):
    assert location(model, beta, s) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize('model', [linear_model(), quadratic_model(),
                                   power_law_model(), arrhenius_model(),
                                   sqrt_model()])
def test_location_linear_in_beta(model):
    rng = np.random.default_rng(5)
    s = np.array([0.1, 0.35, 0.9])
    for _ in range(10):
        b1, b2 = rng.normal(scale=10, size=(2, model.dimension))
        a, b = rng.normal(size=2)
        assert np.allclose(location(model, a * b1 + b * b2, s),
                           a * location(model, b1, s) +
                           b * location(model, b2, s),
                           rtol=1e-12, atol=1e-9)


def test_location_poly_degree_one():
    poly1 = LifeStressModel(StressBasis('poly', 1))
    beta = (12.5, -19.5)
    s = np.linspace(0.05, 0.95, 7)
    assert np.allclose(location(poly1, beta, s),
                       location(linear_model(), beta, s), rtol=1e-15)
    assert np.allclose(basis_matrix(poly1, s),
                       basis_matrix(linear_model(), s))


def test_make_model():
    assert make_model('log').stress_domain[0] > 0
    assert make_model('quadratic').stress_domain == (0., np.inf)
    assert make_model('poly:2') == quadratic_model()
