"""Generator functionals checked against independent mpmath quadrature.

The oracle integrates f(q) q^(m/2-1) gbar(q) with tanh-sinh quadrature at
30 significant digits, sharing nothing with the library's scipy-based
path or with the closed forms under test.
"""

import math

import mpmath
import numpy as np
import pytest
from scipy.linalg import toeplitz

from ellipfim.generators import (
    MomentUndefinedError,
    coefficients,
    expect,
    gaussian,
    generalized_gaussian,
    modular_variate,
    sample,
    student_t,
)

GENS = [gaussian(), student_t(6), student_t(8), generalized_gaussian(0.5)]


def mp_expect(gen, m, f, dps=30):
    """E{f(Q)} via tanh-sinh quadrature on [0, inf) at high precision."""
    with mpmath.workdps(dps):
        norm = mpmath.pi ** (m / 2) / mpmath.gamma(m / 2)

        def integrand(q):
            qf = float(q)
            if qf <= 0.0:
                return mpmath.mpf(0)
            g = math.exp(float(gen.log_gbar(np.array([qf]), m)[0]))
            return norm * f(q) * q ** (m / 2 - 1) * g

        return float(mpmath.quad(integrand, [0, 1, mpmath.inf]))


# ---------------------------------------------------------------------------
# phi_bar
# ---------------------------------------------------------------------------


def test_phi_bar_gaussian_is_one():
    g = gaussian()
    t = np.array([0.1, 1.0, 25.0])
    np.testing.assert_allclose(g.phi_bar(t, 4), np.ones(3), atol=0)


def test_phi_bar_student_t_value():
    # (m + nu) / (nu - 2 + t) at m=4, nu=6, t=4 -> 10/8
    g = student_t(6)
    assert g.phi_bar(np.array([4.0]), 4)[0] == pytest.approx(1.25, abs=1e-15)


@pytest.mark.parametrize("gen", GENS, ids=str)
@pytest.mark.parametrize("t", [0.5, 2.0, 10.0])
def test_phi_bar_matches_log_density_slope(gen, t):
    m = 4
    h = 1e-6
    fd = (gen.log_gbar(np.array([t + h]), m) - gen.log_gbar(np.array([t - h]), m)) / (
        2 * h
    )
    assert abs(gen.phi_bar(np.array([t]), m)[0] + 2.0 * fd[0]) < 1e-6


# ---------------------------------------------------------------------------
# alpha, beta, sigma_q2
# ---------------------------------------------------------------------------


def test_gaussian_coefficients_m4():
    c = coefficients(gaussian(), 4)
    assert c.alpha == pytest.approx(1.0, abs=1e-15)
    assert c.beta == pytest.approx(1.0, abs=1e-15)
    assert c.sigma_q2 == pytest.approx(8.0, abs=1e-12)


def test_student_t6_m4_paper_values():
    c = coefficients(student_t(6), 4)
    assert c.alpha == pytest.approx(10.0 / 12.0, abs=1e-15)
    # sigma_q2 = (2m/(nu-4)) (m+nu-2) = (8/2) * 8 = 32
    assert c.sigma_q2 == pytest.approx(32.0, abs=1e-12)


@pytest.mark.parametrize("gen", GENS, ids=str)
@pytest.mark.parametrize("m", [2, 4, 8])
def test_alpha_beta_against_mp_quadrature(gen, m):
    alpha_q = mp_expect(gen, m, lambda q: (q * float(gen.phi_bar(np.array([float(q)]), m)[0])) ** 2) / (
        m * (m + 2)
    )
    beta_q = mp_expect(gen, m, lambda q: q * float(gen.phi_bar(np.array([float(q)]), m)[0]) ** 2) / m
    assert gen.alpha(m) == pytest.approx(alpha_q, rel=1e-10)
    assert gen.beta(m) == pytest.approx(beta_q, rel=1e-10)


@pytest.mark.parametrize(
    "gen", [gaussian(), student_t(6), student_t(8), generalized_gaussian(0.5)], ids=str
)
@pytest.mark.parametrize("m", [2, 4])
def test_sigma_q2_against_mp_quadrature(gen, m):
    second = mp_expect(gen, m, lambda q: q * q)
    assert gen.sigma_q2(m) == pytest.approx(second - m * m, rel=1e-9)


def test_sigma_q2_rejected_below_nu4():
    with pytest.raises(MomentUndefinedError):
        student_t(3).sigma_q2(4)
    with pytest.raises(MomentUndefinedError):
        coefficients(student_t(4), 4)


def test_student_t_requires_nu_above_2():
    with pytest.raises(ValueError):
        student_t(2.0)


# ---------------------------------------------------------------------------
# moment identities and Q density normalization (library quadrature path)
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("gen", GENS, ids=str)
@pytest.mark.parametrize("m", [2, 4, 8])
def test_footnote_moment_identities(gen, m):
    assert expect(gen, m, lambda q: np.ones_like(q)) == pytest.approx(1.0, abs=1e-8)
    assert expect(gen, m, lambda q: q) == pytest.approx(m, rel=1e-6)
    assert expect(gen, m, lambda q: q * gen.phi_bar(q, m)) == pytest.approx(
        m, rel=1e-6
    )
    assert expect(gen, m, lambda q: q * q * gen.phi_bar(q, m)) == pytest.approx(
        m * (m + 2), rel=1e-6
    )


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_sample_deterministic_given_seed():
    sigma = np.eye(3)
    a = sample(50, np.zeros(3), sigma, student_t(5), seed=123)
    b = sample(50, np.zeros(3), sigma, student_t(5), seed=123)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("gen", [gaussian(), student_t(6)], ids=str)
def test_sample_mean_q_is_m(gen):
    m, n = 4, 100_000
    x = sample(n, np.zeros(m), np.eye(m), gen, seed=2024)
    q = modular_variate(x, np.zeros(m), np.eye(m))
    se = q.std(ddof=1) / math.sqrt(n)
    assert abs(q.mean() - m) < 3 * se


def test_sample_covariance_matches_toeplitz_scatter():
    m, n = 4, 100_000
    sigma = toeplitz(0.8 ** np.arange(m))
    x = sample(n, np.zeros(m), sigma, gaussian(), seed=99)
    emp = x.T @ x / n
    prods = np.einsum("ni,nj->nij", x, x)
    se = prods.std(axis=0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(emp - sigma) < 3 * se)


def test_sample_rejects_non_pd_scatter():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])  # indefinite
    with pytest.raises(Exception):
        sample(10, np.zeros(2), bad, gaussian(), seed=1)


# ---------------------------------------------------------------------------
# modular variate
# ---------------------------------------------------------------------------


def test_modular_variate_at_mu_is_zero():
    mu = np.array([1.0, -2.0])
    assert modular_variate(mu, mu, np.eye(2)) == 0.0


def test_modular_variate_euclidean_case():
    assert modular_variate(np.array([3.0, 4.0]), np.zeros(2), np.eye(2)) == pytest.approx(
        25.0
    )


def test_modular_variate_scaling():
    rng = np.random.default_rng(8)
    x = rng.standard_normal(4)
    mu = rng.standard_normal(4)
    a = rng.standard_normal((4, 4))
    sigma = a @ a.T + 4 * np.eye(4)
    c = 2.7
    q1 = modular_variate(x, mu, sigma)
    q2 = modular_variate(x, mu, c * sigma)
    assert q2 == pytest.approx(q1 / c, rel=1e-12)
