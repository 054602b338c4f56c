import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopsparse.solver import (
    QuadraticL1Problem,
    coordinate_descent,
    kkt_residual,
    prox_gradient_oracle,
    soft_threshold,
)

from .conftest import random_spd


@pytest.mark.parametrize("z, g, expected", [(2.0, 0.5, 1.5), (0.3, 0.5, 0.0), (-2.0, 0.5, -1.5), (0.5, 0.5, 0.0)])
def test_soft_threshold(z, g, expected):
    assert soft_threshold(z, g) == expected


def one_dim():
    return QuadraticL1Problem([[1.0]], [1.0], [1.0])


def test_one_dim_closed_form():
    # minimize b^2 - 2b + |b|  ->  S(1, 1/2) / 1
    for solve in (coordinate_descent, prox_gradient_oracle):
        rep = solve(one_dim())
        assert rep.converged
        assert rep.beta[0] == pytest.approx(0.5, abs=1e-12)
    assert kkt_residual(one_dim(), [0.5]) <= 1e-12


def test_zero_penalty_is_least_squares():
    rng = np.random.default_rng(0)
    Psi = random_spd(rng, 5, 100.0)
    q = rng.standard_normal(5)
    rep = coordinate_descent(QuadraticL1Problem(Psi, q, np.zeros(5)))
    np.testing.assert_allclose(rep.beta, np.linalg.solve(Psi, q), atol=1e-9)


def test_large_penalty_gives_zero():
    q = np.array([1.0, -2.0, 0.5])
    p = QuadraticL1Problem(np.diag([1.0, 3.0, 2.0]), q, 2 * np.abs(q) + 0.1)
    for solve in (coordinate_descent, prox_gradient_oracle):
        rep = solve(p)
        assert np.array_equal(rep.beta, np.zeros(3))


def test_threshold_tie_maps_to_zero():
    # |q| == gamma / 2 exactly
    rep = coordinate_descent(QuadraticL1Problem([[2.0]], [0.75], [1.5]))
    assert rep.beta[0] == 0.0


def test_kkt_examples():
    p = QuadraticL1Problem(np.eye(2), np.zeros(2), np.ones(2))
    assert kkt_residual(p, np.zeros(2)) == 0.0
    # Psi = I: moving a nonzero coordinate by 0.1 shifts the gradient by 0.2
    p = QuadraticL1Problem(np.eye(1), [2.0], [1.0])
    beta = coordinate_descent(p).beta
    assert beta[0] == pytest.approx(1.5)
    assert kkt_residual(p, beta + 0.1) == pytest.approx(0.2, abs=1e-12)


def test_oracle_fixed_point():
    rng = np.random.default_rng(1)
    p = QuadraticL1Problem(random_spd(rng, 4, 10.0), rng.standard_normal(4), rng.uniform(0, 1, 4))
    beta = coordinate_descent(p).beta
    rep = prox_gradient_oracle(p, beta0=beta)
    assert rep.iterations == 1
    assert np.max(np.abs(rep.beta - beta)) <= 1e-13


def test_plain_ista_agrees_on_easy_problem():
    rng = np.random.default_rng(2)
    p = QuadraticL1Problem(random_spd(rng, 6, 20.0), rng.standard_normal(6) * 3, rng.uniform(0, 2, 6))
    a = coordinate_descent(p)
    b = prox_gradient_oracle(p, accelerate=False)
    assert b.converged
    assert abs(p.objective(a.beta) - p.objective(b.beta)) <= 1e-8


def test_random_instance_m6_objective_agreement():
    rng = np.random.default_rng(6)
    p = QuadraticL1Problem(random_spd(rng, 6, 1e3), rng.standard_normal(6) * 3, rng.uniform(0, 2, 6))
    a, b = coordinate_descent(p), prox_gradient_oracle(p)
    assert a.converged and b.converged
    assert abs(p.objective(a.beta) - p.objective(b.beta)) <= 1e-8


def test_monotone_descent_per_sweep():
    rng = np.random.default_rng(4)
    for _ in range(20):
        m = int(rng.integers(2, 11))
        p = QuadraticL1Problem(random_spd(rng, m, 1e4), rng.standard_normal(m) * 3, rng.uniform(0, 2, m))
        values = []
        coordinate_descent(p, callback=lambda b: values.append(p.objective(b)))
        assert all(b <= a + 1e-12 * (1 + abs(a)) for a, b in zip(values, values[1:]))


def test_nonconvergence_is_reported():
    rng = np.random.default_rng(5)
    p = QuadraticL1Problem(random_spd(rng, 8, 1e4), rng.standard_normal(8), np.zeros(8))
    rep = coordinate_descent(p, max_iters=1)
    assert not rep.converged and rep.iterations == 1


def test_problem_validation():
    with pytest.raises(ValueError):
        QuadraticL1Problem([[1.0, 0.5], [0.0, 1.0]], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        QuadraticL1Problem(np.eye(2), [0, 0], [-1, 0])
    with pytest.raises(ValueError):
        QuadraticL1Problem([[0.0]], [0], [0])
    with pytest.raises(ValueError):
        QuadraticL1Problem(np.eye(2), [0, 0, 0], [0, 0])


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 10), st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_support_exactness_and_scaling(m, seed, c):
    rng = np.random.default_rng(seed)
    p = QuadraticL1Problem(random_spd(rng, m, 1e3), rng.standard_normal(m) * 2, rng.uniform(0, 3, m))
    rep = coordinate_descent(p)
    assert rep.converged
    g = 2 * (p.Psi @ rep.beta - p.q)
    zero = rep.beta == 0
    assert np.all(np.abs(g[zero]) <= p.gamma[zero] + 1e-8)
    scaled = coordinate_descent(QuadraticL1Problem(c * p.Psi, c * p.q, c * p.gamma))
    np.testing.assert_allclose(scaled.beta, rep.beta, atol=1e-7)
    assert np.array_equal(scaled.beta == 0, zero)
