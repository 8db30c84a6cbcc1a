"""Score vectors and Fisher information for elliptical models.

Covers the (mu, shape, scale) parameterization, the general scatter
parameterization vecs(Sigma), and finite-dimensional parameterizations
theta -> (mu(theta), Sigma(theta)) with an interest/nuisance split.  The
semiparametric quantities (efficient scores and FIMs after projecting out
the density generator) are the closed forms; their Monte-Carlo and
Schur-complement counterparts live in the test suite and the invariant
runner.

All score functions accept a single observation (m,) or a batch (n, m)
and return the matching shape.  The x = mu event maps to the continuous
zero-score limit of the location block.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .generators import DensityGenerator
from .matcalc import duplication_matrix, vec
from .scale import ScaleFunctional, m_matrix

__all__ = [
    "FimBlocksEta",
    "IdentifiabilityError",
    "score_eta",
    "score_vecs_sigma",
    "fim_eta",
    "efficient_fim_shape",
    "fim_vecs_sigma",
    "score_theta",
    "efficient_score_theta",
    "fim_theta",
    "sfim_theta",
    "efficient_fim_interest",
]


class IdentifiabilityError(ValueError):
    """Parameterization Jacobians are rank deficient at the evaluation point."""


def _as_batch(x, m):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


def _vec_batch(sym_batch):
    # (n, m, m) -> (n, m*m); the matrices are symmetric, so the row-major
    # flatten coincides with the column-major vec convention.
    n = sym_batch.shape[0]
    return sym_batch.reshape(n, -1)


def _whitened_parts(x, mu, sigma, gen: DensityGenerator):
    """Per-sample (d, W = Sigma^-1 d, Q, phibar(Q)) with the Q=0 branch."""
    m = np.asarray(mu).shape[0]
    xb, single = _as_batch(x, m)
    d = xb - np.asarray(mu, dtype=float)
    cho = linalg.cho_factor(np.asarray(sigma, dtype=float), lower=True)
    w = linalg.cho_solve(cho, d.T).T
    q = np.einsum("ij,ij->i", d, w)
    phi = np.zeros_like(q)
    pos = q > 0
    phi[pos] = gen.phi_bar(q[pos], m)
    return d, w, q, phi, single


def score_eta(x, mu, v, s, scale: ScaleFunctional, gen: DensityGenerator):
    """Score of (mu, ovecs V, s), concatenated; length m + m(m+1)/2."""
    mu = np.asarray(mu, dtype=float)
    m = mu.shape[0]
    sigma = s * np.asarray(v, dtype=float)
    d, w, q, phi, single = _whitened_parts(x, mu, sigma, gen)
    sigma_inv = np.linalg.inv(sigma)
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)

    s_mu = phi[:, None] * w
    # E_l = phibar(Q_l) Sigma^-1 d_l d_l^T Sigma^-1 - Sigma^-1
    outer = phi[:, None, None] * np.einsum("li,lj->lij", w, w) - sigma_inv
    ms = m_matrix(scale, v)
    s_shape = 0.5 * s * _vec_batch(outer) @ ms.T
    s_scale = (q * phi - m)[:, None] / (2.0 * s)
    out = np.concatenate([s_mu, s_shape, s_scale], axis=1)
    return out[0] if single else out


def score_vecs_sigma(x, mu, sigma, gen: DensityGenerator):
    """Score of vecs(Sigma) in the scatter parameterization."""
    mu = np.asarray(mu, dtype=float)
    m = mu.shape[0]
    d, w, q, phi, single = _whitened_parts(x, mu, sigma, gen)
    sigma_inv = np.linalg.inv(np.asarray(sigma, dtype=float))
    sigma_inv = 0.5 * (sigma_inv + sigma_inv.T)
    outer = phi[:, None, None] * np.einsum("li,lj->lij", w, w) - sigma_inv
    dm = duplication_matrix(m)
    out = 0.5 * _vec_batch(outer) @ dm
    return out[0] if single else out


@dataclass(frozen=True)
class FimBlocksEta:
    """FIM blocks of (mu, ovecs V, s); the mu cross blocks are exactly zero."""

    i_mu: np.ndarray
    i_v: np.ndarray
    i_s: float
    i_vs: np.ndarray

    def full(self):
        m = self.i_mu.shape[0]
        k = self.i_v.shape[0]
        out = np.zeros((m + k + 1, m + k + 1))
        out[:m, :m] = self.i_mu
        out[m : m + k, m : m + k] = self.i_v
        out[m : m + k, -1] = self.i_vs
        out[-1, m : m + k] = self.i_vs
        out[-1, -1] = self.i_s
        return out


def fim_eta(v, s, scale: ScaleFunctional, gen: DensityGenerator) -> FimBlocksEta:
    """Analytic FIM blocks for (mu, ovecs V, s)."""
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    alpha = gen.alpha(m)
    beta = gen.beta(m)
    v_inv = np.linalg.inv(v)
    ms = m_matrix(scale, v)
    kron = np.kron(v_inv, v_inv)
    vv = np.outer(vec(v_inv), vec(v_inv))
    i_mu = beta * v_inv / s
    i_v = 0.25 * ms @ (2.0 * alpha * kron + (alpha - 1.0) * vv) @ ms.T
    i_s = (m * (m + 2) * alpha - m * m) / (4.0 * s * s)
    i_vs = ((m + 2) * alpha - m) / (4.0 * s) * (ms @ vec(v_inv))
    return FimBlocksEta(i_mu=i_mu, i_v=i_v, i_s=i_s, i_vs=i_vs)


def efficient_fim_shape(v, scale: ScaleFunctional, gen: DensityGenerator):
    """Semiparametric efficient FIM for the shape: the scale-projected block."""
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    alpha = gen.alpha(m)
    v_inv = np.linalg.inv(v)
    ms = m_matrix(scale, v)
    middle = np.kron(v_inv, v_inv) - np.outer(vec(v_inv), vec(v_inv)) / m
    return 0.5 * alpha * ms @ middle @ ms.T


def fim_vecs_sigma(sigma, gen: DensityGenerator):
    """FIM of vecs(Sigma) in the scatter parameterization."""
    sigma = np.asarray(sigma, dtype=float)
    m = sigma.shape[0]
    alpha = gen.alpha(m)
    sigma_inv = np.linalg.inv(sigma)
    dm = duplication_matrix(m)
    middle = 0.5 * alpha * np.kron(sigma_inv, sigma_inv) + 0.25 * (
        alpha - 1.0
    ) * np.outer(vec(sigma_inv), vec(sigma_inv))
    return dm.T @ middle @ dm


# ---------------------------------------------------------------------------
# parameterized models theta -> (mu(theta), Sigma(theta))
# ---------------------------------------------------------------------------


def _model_geometry(param, theta0):
    theta0 = np.asarray(theta0, dtype=float)
    sigma = np.asarray(param.sigma_fn(theta0), dtype=float)
    j_mu = np.asarray(param.jacobian_mu(theta0), dtype=float)
    j_sig = np.asarray(param.jacobian_vec_sigma(theta0), dtype=float)
    stacked = np.vstack([j_mu, j_sig])
    if np.linalg.matrix_rank(stacked, tol=1e-10 * max(1.0, np.linalg.norm(stacked))) < stacked.shape[1]:
        raise IdentifiabilityError(
            "stacked Jacobian of (mu, vec Sigma) is rank deficient at theta0"
        )
    return theta0, sigma, j_mu, j_sig


def fim_theta(param, theta0, gen: DensityGenerator):
    """Parametric FIM for theta with the generator fully known."""
    _, sigma, j_mu, j_sig = _model_geometry(param, theta0)
    m = sigma.shape[0]
    alpha = gen.alpha(m)
    beta = gen.beta(m)
    sigma_inv = np.linalg.inv(sigma)
    rank1 = 0.5 * (1.0 - 1.0 / alpha)
    middle = np.kron(sigma_inv, sigma_inv) + rank1 * np.outer(
        vec(sigma_inv), vec(sigma_inv)
    )
    out = beta * j_mu.T @ sigma_inv @ j_mu + 0.5 * alpha * j_sig.T @ middle @ j_sig
    return 0.5 * (out + out.T)


def sfim_theta(param, theta0, gen: DensityGenerator):
    """Semiparametric efficient FIM for theta (generator a nuisance function)."""
    _, sigma, j_mu, j_sig = _model_geometry(param, theta0)
    m = sigma.shape[0]
    alpha = gen.alpha(m)
    beta = gen.beta(m)
    sigma_q2 = gen.sigma_q2(m)
    sigma_inv = np.linalg.inv(sigma)
    rank1 = 2.0 / (alpha * sigma_q2) - 1.0 / m
    middle = np.kron(sigma_inv, sigma_inv) + rank1 * np.outer(
        vec(sigma_inv), vec(sigma_inv)
    )
    out = beta * j_mu.T @ sigma_inv @ j_mu + 0.5 * alpha * j_sig.T @ middle @ j_sig
    return 0.5 * (out + out.T)


def _per_sample_parts(x, param, theta0, gen):
    theta0, sigma, j_mu, j_sig = _model_geometry(param, theta0)
    mu = np.asarray(param.mu_fn(theta0), dtype=float)
    m = mu.shape[0]
    d_, w, q, phi, single = _whitened_parts(x, mu, sigma, gen)
    sigma_inv = np.linalg.inv(sigma)
    dim = j_sig.shape[1]
    # tr(P_i) = vec(Sigma^-1)^T vec(Sigma_i) and d^T Sigma^-1 Sigma_i Sigma^-1 d
    tr_p = vec(sigma_inv) @ j_sig
    quad = np.empty((len(q), dim))
    for i in range(dim):
        sig_i = j_sig[:, i].reshape(m, m, order="F")
        quad[:, i] = np.einsum("li,ij,lj->l", w, sig_i, w)
    lin = w @ j_mu  # d^T Sigma^-1 mu_i
    return q, phi, tr_p, quad, lin, single, m


def score_theta(x, param, theta0, gen: DensityGenerator):
    """Score of theta in the parametric model."""
    q, phi, tr_p, quad, lin, single, m = _per_sample_parts(x, param, theta0, gen)
    out = -0.5 * tr_p[None, :] + phi[:, None] * (lin + 0.5 * quad)
    return out[0] if single else out


def efficient_score_theta(x, param, theta0, gen: DensityGenerator):
    """Efficient (generator-projected) score of theta."""
    q, phi, tr_p, quad, lin, single, m = _per_sample_parts(x, param, theta0, gen)
    sigma_q2 = gen.sigma_q2(m)
    qphi = q * phi
    out = (
        phi[:, None] * lin
        + 0.5 * (phi[:, None] * quad - (qphi / m)[:, None] * tr_p[None, :])
        + np.outer((q - m) / sigma_q2, tr_p)
    )
    return out[0] if single else out


def efficient_fim_interest(fim, q: int):
    """Schur complement I_gamma - I_ge I_e^-1 I_ge^T for the leading q block."""
    fim = np.asarray(fim, dtype=float)
    d = fim.shape[0]
    if q > d:
        raise ValueError("interest block larger than the matrix")
    if q == d:
        return fim.copy()
    i_g = fim[:q, :q]
    i_ge = fim[:q, q:]
    i_e = fim[q:, q:]
    try:
        cho = linalg.cho_factor(i_e, lower=True)
    except linalg.LinAlgError as exc:
        raise IdentifiabilityError("singular nuisance information block") from exc
    out = i_g - i_ge @ linalg.cho_solve(cho, i_ge.T)
    return 0.5 * (out + out.T)
