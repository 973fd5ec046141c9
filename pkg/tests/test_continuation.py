import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lrfmp.continuation import (
    ProblemSetup,
    apply_operator,
    operator_matrix,
    synthesize_data,
    upward_sh,
)
from lrfmp.elements import AbelPoisson, SphericalHarmonic
from lrfmp.errors import DomainError
from lrfmp.grids import reuter_grid
from lrfmp.kernels import apk_upward
from lrfmp.spherical import sh_all_cartesian

from .helpers import random_ball, random_unit

SIGMA = 1.06


def setup_for(gamma=10, sigma=SIGMA):
    g = reuter_grid(gamma)
    return ProblemSetup(g, sigma, np.zeros(len(g)))


def test_problem_setup_validation():
    g = reuter_grid(4)
    with pytest.raises(DomainError):
        ProblemSetup(g, 1.0, np.zeros(len(g)))
    with pytest.raises(ValueError):
        ProblemSetup(g, SIGMA, np.zeros(len(g) + 1))
    with pytest.raises(ValueError):
        ProblemSetup(g, SIGMA, np.full(len(g), np.nan))


def test_upward_sh_examples():
    eta = random_unit(np.random.default_rng(0), 1)[0]
    assert upward_sh(0, 0, eta, 2.0) == pytest.approx(0.5 / math.sqrt(4 * math.pi), rel=1e-15)
    assert upward_sh(7, -3, eta, 1.0) == pytest.approx(sh_all_cartesian(7, eta)[49 + 7 - 3], rel=1e-15)
    with pytest.raises(DomainError):
        upward_sh(2, 0, eta, 0.9)


def test_upward_sh_degree_15_by_quadrature():
    # project the continued field back onto Y_{15,8} with a Gauss-Legendre x trapezoid rule
    nodes, weights = np.polynomial.legendre.leggauss(40)
    phi = np.linspace(0, 2 * np.pi, 80, endpoint=False)
    t, p = np.meshgrid(nodes, phi, indexing="ij")
    s = np.sqrt(1 - t * t)
    eta = np.stack([s * np.cos(p), s * np.sin(p), t], axis=-1).reshape(-1, 3)
    w = (weights[:, None] * np.full(phi.shape, 2 * np.pi / phi.size)).ravel()
    y = sh_all_cartesian(15, eta)[225 + 15 + 8]
    cont = upward_sh(15, 8, eta, SIGMA)
    # Fourier coefficient of T Y_{15,8} w.r.t. Y_{15,8} is sigma^{-16}
    assert float(np.sum(w * cont * y)) == pytest.approx(SIGMA ** -16, rel=1e-10)
    rng = np.random.default_rng(1)
    e = random_unit(rng, 1)
    ref = SIGMA ** -16 * sh_all_cartesian(15, e)[225 + 15 + 8]
    assert upward_sh(15, 8, e, SIGMA)[0] == pytest.approx(ref[0], rel=1e-10)


def test_apply_operator_constant_cases():
    st_ = setup_for()
    np.testing.assert_allclose(apply_operator(SphericalHarmonic(0, 0), st_),
                               1 / (SIGMA * math.sqrt(4 * math.pi)), rtol=1e-15)
    np.testing.assert_allclose(apply_operator(AbelPoisson((0.0, 0.0, 0.0)), st_),
                               1 / (4 * math.pi * SIGMA), rtol=1e-15)


def test_apply_operator_apk_series():
    st_ = setup_for(6)
    x = np.array([0.3, -0.5, 0.6])
    h = np.linalg.norm(x)
    vals = apply_operator(AbelPoisson(tuple(x)), st_)
    n = np.arange(900)
    for eta, v in zip(st_.eta, vals):
        u = x @ eta / h
        ref = np.polynomial.legendre.legval(u, (2 * n + 1) / (4 * np.pi) * h ** n * SIGMA ** (-n - 1.0))
        assert v == pytest.approx(ref, rel=1e-10)


def test_operator_matrix_matches_per_element():
    rng = np.random.default_rng(2)
    elems = [SphericalHarmonic(3, -2), AbelPoisson(tuple(random_ball(rng, 1)[0])),
             SphericalHarmonic(0, 0), AbelPoisson(tuple(random_ball(rng, 1)[0]))]
    st_ = setup_for(8)
    m = operator_matrix(elems, st_.eta, SIGMA, chunk=1)
    np.testing.assert_allclose(m[0], upward_sh(3, -2, st_.eta, SIGMA), rtol=1e-15)
    np.testing.assert_allclose(m[1], apk_upward(np.array(elems[1].x), st_.eta, SIGMA), rtol=1e-15)
    for i, d in enumerate(elems):
        np.testing.assert_array_equal(m[i], apply_operator(d, st_))


def test_synthesize_data():
    g = reuter_grid(8)
    assert np.array_equal(synthesize_data([], g, SIGMA), np.zeros(len(g)))
    st_ = ProblemSetup(g, SIGMA, np.zeros(len(g)))
    y20 = apply_operator(SphericalHarmonic(2, 0), st_)
    np.testing.assert_array_equal(synthesize_data([(1.0, SphericalHarmonic(2, 0))], g, SIGMA), y20)
    d = AbelPoisson((0.1, 0.2, 0.7))
    y = synthesize_data([(2.0, SphericalHarmonic(2, 0)), (-0.5, d)], g, SIGMA)
    np.testing.assert_allclose(y, 2.0 * y20 - 0.5 * apply_operator(d, st_), rtol=1e-14, atol=1e-14)


def test_noise_is_seeded_and_relative():
    g = reuter_grid(20)
    model = [(1.0, SphericalHarmonic(1, 0))]
    clean = synthesize_data(model, g, SIGMA)
    a = synthesize_data(model, g, SIGMA, 0.1, seed=5)
    b = synthesize_data(model, g, SIGMA, 0.1, seed=5)
    assert np.array_equal(a, b)
    rms = np.sqrt(np.mean(clean ** 2))
    assert np.sqrt(np.mean((a - clean) ** 2)) == pytest.approx(0.1 * rms, rel=0.15)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_linearity(seed):
    rng = np.random.default_rng(seed)
    st_ = setup_for(6)
    elems = [SphericalHarmonic(int(n), int(rng.integers(-n, n + 1))) for n in rng.integers(0, 8, 3)]
    elems += [AbelPoisson(tuple(x)) for x in random_ball(rng, 3)]
    c = rng.normal(size=len(elems))
    direct = synthesize_data(list(zip(c, elems)), st_.grid, SIGMA)
    combined = sum(ci * apply_operator(d, st_) for ci, d in zip(c, elems))
    assert np.linalg.norm(direct - combined) <= 1e-13 * max(np.linalg.norm(combined), 1e-300)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 60), st.integers(0, 2 ** 32 - 1))
def test_damping_factor_is_exact(n, seed):
    eta = random_unit(np.random.default_rng(seed), 1)[0]
    y = sh_all_cartesian(n, eta)[n * n + n]
    up = upward_sh(n, 0, eta, SIGMA)
    assert abs(up) * SIGMA ** (n + 1) == pytest.approx(abs(y), rel=1e-14, abs=1e-300)
