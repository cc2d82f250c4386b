import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from mfc_barycenter.brent import brent_minimize
from mfc_barycenter.errors import DomainError, InvalidArgument
from mfc_barycenter.model import (
    ModelParams,
    PointBars,
    coordinate_objective,
    gamma_cyclic,
    log_mean,
    log_mean_array,
    mobilities,
    objective_gradient,
    pointwise_objective,
    prox_density_field,
    prox_density_sweep,
    recover_flux_source,
)


def bars1(rho_bar, m_bar, s_bar, rho_prev=None, d=1):
    rho_bar = np.atleast_1d(np.asarray(rho_bar, dtype=float))
    N = rho_bar.size
    m_bar = np.asarray(m_bar, dtype=float).reshape(N, d)
    return PointBars(rho_bar, m_bar, np.atleast_1d(np.asarray(s_bar, dtype=float)),
                     rho_bar.copy() if rho_prev is None else np.asarray(rho_prev, dtype=float))


def test_gamma_cyclic():
    assert np.array_equal(gamma_cyclic(2), [[1, -1], [-1, 1]])
    assert np.array_equal(gamma_cyclic(3), [[1, 0, -1], [-1, 1, 0], [0, -1, 1]])
    for N in range(2, 8):
        g = gamma_cyclic(N)
        assert np.allclose(g.sum(axis=0), 0)
        assert np.allclose(np.diag(g @ g.T), 2)
    with pytest.raises(InvalidArgument):
        gamma_cyclic(1)


def test_params_validation():
    with pytest.raises(InvalidArgument, match="alpha"):
        ModelParams(2, gamma_cyclic(2), alpha=-1)
    with pytest.raises(InvalidArgument):
        ModelParams(2, gamma_cyclic(2), beta=-0.1)
    with pytest.raises(InvalidArgument):
        ModelParams(3, np.ones((3, 2)), alpha=1.0)
    p = ModelParams(3, np.ones((3, 2)))
    assert p.R == 2


def test_log_mean_examples():
    assert log_mean(2.0, 2.0) == pytest.approx(2.0)
    assert log_mean(math.e, 1.0) == pytest.approx(math.e - 1)
    assert log_mean(1.0, 1.0 + 1e-12) == pytest.approx(1.0, abs=1e-11)
    with pytest.raises(DomainError):
        log_mean(0.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(a=st.floats(1e-6, 40), b=st.floats(1e-6, 40))
def test_log_mean_bounds(a, b):
    L = log_mean(a, b)
    assert L == pytest.approx(log_mean(b, a), rel=1e-12)
    lo, hi = min(a, b), max(a, b)
    # geometric mean <= log-mean <= arithmetic mean
    assert math.sqrt(a * b) * (1 - 1e-12) <= L <= 0.5 * (a + b) * (1 + 1e-12)
    assert lo * (1 - 1e-12) <= L <= hi * (1 + 1e-12)
    assert log_mean_array(np.array([a]), np.array([b]))[0] == pytest.approx(L, rel=1e-12)


def test_mobilities():
    p = ModelParams(2, gamma_cyclic(2), alpha=3.0)
    V1, V2 = mobilities(np.array([1.0, math.e]), p)
    assert np.allclose(V1, [1, math.e])
    assert np.allclose(V2, 3 * (math.e - 1))
    p0 = ModelParams(2, gamma_cyclic(2))
    assert np.all(mobilities(np.array([1.0, 2.0]), p0)[1] == 0)
    with pytest.raises(DomainError):
        mobilities(np.array([0.0, 1.0]), p)


def test_recovery_examples():
    p = ModelParams(1, np.array([[1.0]]), alpha=0.0)
    b = bars1(1.0, [2.0], [0.0])
    m, s = recover_flux_source(np.array([1.0]), b, p)
    assert np.allclose(m, 1.0)
    assert np.allclose(s, 0.0)
    pa = ModelParams(2, gamma_cyclic(2), alpha=1.0)
    b = bars1([1.0, 1.0], [0.0, 0.0], [3.0, 3.0])
    _, s = recover_flux_source(np.array([1.0, 1.0]), b, pa)
    assert np.allclose(s, 1.5)


def test_objective_example():
    p = ModelParams(1, np.array([[1.0]]))
    b = bars1(1.0, [0.0], [0.0])
    assert float(pointwise_objective(np.array([1.0]), b, p)) == pytest.approx(0.0)
    assert float(pointwise_objective(np.array([2.0]), b, p)) == pytest.approx(0.5)
    with pytest.raises(DomainError):
        pointwise_objective(np.array([50.0]), b, p)


def test_brent_examples():
    x, fx = brent_minimize(lambda x: (x - 2.0) ** 2, 0.0, 5.0)
    assert x == pytest.approx(2.0, abs=1e-7) and fx == pytest.approx(0.0, abs=1e-12)
    # monotone objective: the minimizer is the left endpoint
    x, _ = brent_minimize(lambda x: x, 1e-6, 40.0)
    assert x == pytest.approx(1e-6, abs=1e-7)
    x, _ = brent_minimize(lambda x: -x, 1e-6, 40.0)
    assert x == pytest.approx(40.0, abs=1e-7)


def test_brent_against_grid_oracle():
    f = lambda x: (x - 1) ** 2 / 2 + 0.1 * x * np.log(x)
    x, _ = brent_minimize(f, 1e-6, 40.0)
    grid = np.linspace(1e-6, 40.0, 1_000_000)
    oracle = grid[np.argmin(f(grid))]
    assert abs(x - oracle) <= 1e-4
    assert x == pytest.approx(0.9095, abs=1e-4)


def test_prox_entropy_example():
    p = ModelParams(1, np.array([[1.0]]), beta=0.1)
    b = bars1(1.0, [0.0], [0.0])
    assert prox_density_sweep(b.rho_prev, b, p)[0] == pytest.approx(0.9095, abs=1e-4)


point_params = st.builds(
    lambda N, alpha, beta: ModelParams(N, gamma_cyclic(N), alpha=alpha, beta=beta),
    N=st.integers(2, 4),
    alpha=st.sampled_from([0.0, 1.0, 50.0]),
    beta=st.sampled_from([0.0, 0.001, 0.1]),
)


def random_bars(rng, p, d=2):
    N, R = p.N, p.R
    return PointBars(
        rng.uniform(0.1, 5, N), rng.uniform(-3, 3, (N, d)), rng.uniform(-3, 3, R), rng.uniform(0.1, 5, N)
    )


@settings(max_examples=40, deadline=None)
@given(p=point_params, seed=st.integers(0, 2**31))
def test_coordinate_descent_never_increases(p, seed):
    rng = np.random.default_rng(seed)
    b = random_bars(rng, p)
    prox_density_sweep(b.rho_prev, b, p, check_descent=True)


@settings(max_examples=40, deadline=None)
@given(p=point_params, seed=st.integers(0, 2**31))
def test_field_kernel_matches_python_path(p, seed):
    rng = np.random.default_rng(seed)
    bs = [random_bars(rng, p) for _ in range(5)]
    stacked = PointBars(*(np.stack([getattr(b, k) for b in bs], axis=-1) for k in ("rho_bar", "m_bar", "s_bar", "rho_prev")))
    field = prox_density_field(stacked.rho_prev, stacked, p)
    ref = np.stack([prox_density_sweep(b.rho_prev, b, p) for b in bs], axis=-1)
    assert np.allclose(field, ref, atol=1e-9)
    assert np.all((field >= p.rho_min) & (field <= p.rho_max))


@settings(max_examples=40, deadline=None)
@given(p=point_params, seed=st.integers(0, 2**31))
def test_gradient_matches_finite_differences(p, seed):
    rng = np.random.default_rng(seed)
    b = random_bars(rng, p)
    r = rng.uniform(0.5, 4, p.N)
    assume(np.min(np.abs(np.diff(np.log(r)))) > 1e-3)
    g = objective_gradient(r, b, p)
    h = 1e-6
    for i in range(p.N):
        e = np.zeros(p.N)
        e[i] = h
        fd = (pointwise_objective(r + e, b, p) - pointwise_objective(r - e, b, p)) / (2 * h)
        assert abs(fd - g[i]) <= 1e-5 * max(1.0, abs(g[i]))


@settings(max_examples=40, deadline=None)
@given(p=point_params, seed=st.integers(0, 2**31), i=st.integers(0, 3))
def test_coordinate_slice_is_convex(p, seed, i):
    i = i % p.N
    rng = np.random.default_rng(seed)
    b = random_bars(rng, p)
    f = coordinate_objective(i, rng.uniform(0.1, 5, p.N), b, p)
    x = np.linspace(p.rho_min, p.rho_max, 2001)
    v = np.array([f(t) for t in x])
    second = v[2:] - 2 * v[1:-1] + v[:-2]
    assert np.all(second >= -1e-9 * np.maximum(1.0, np.abs(v[1:-1])))


@settings(max_examples=40, deadline=None)
@given(p=point_params, seed=st.integers(0, 2**31))
def test_recovery_is_stationary(p, seed):
    rng = np.random.default_rng(seed)
    b = random_bars(rng, p)
    rho = rng.uniform(0.1, 5, p.N)
    m, s = recover_flux_source(rho, b, p)
    V1, V2 = mobilities(rho, p)
    sig = p.sigma_u
    # gradient of |m|^2/(2V) + |m - m_bar|^2/(2 sig)
    assert np.allclose(m / V1[:, None] + (m - b.m_bar) / sig, 0, atol=1e-12)
    if p.alpha > 0:
        assert np.allclose(s / V2 + (s - b.s_bar) / sig, 0, atol=1e-12)
    assert np.all(np.abs(m) <= np.abs(b.m_bar) + 1e-15)
