"""Finite-dimensional parameterizations of (mu, Sigma) and adaptivity checks.

A parameterization carries the interest/nuisance split (interest first),
the maps theta -> mu(theta) and theta -> Sigma(theta), and optionally
analytic Jacobians; a central-difference fallback covers the rest.  The
adaptivity condition decides, for a given generator, whether ignorance of
the density generator costs efficiency on the interest block beyond what
the finite-dimensional nuisance already costs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import linalg

from . import fim as fim_mod
from .generators import DensityGenerator
from .matcalc import duplication_matrix, ovecs, unvecs, vec, vecs, vecs_len
from .scale import ScaleFunctional, jacobian_w, reconstruct_shape

__all__ = [
    "Parameterization",
    "LowRankModel",
    "ConditionReport",
    "AdaptivityReport",
    "fd_jacobian",
    "identity_parameterization",
    "shape_scale_parameterization",
    "split_parameterization",
    "linear_split_parameterization",
    "low_rank_parameterization",
    "breaking_parameterization",
    "sinusoid_steering",
    "condition_check",
    "verify_adaptivity_by_fim",
]


def fd_jacobian(f: Callable, theta, h_base: float = 1e-6):
    """Central-difference Jacobian with step h = max(h_base, h_base |theta_i|)."""
    theta = np.asarray(theta, dtype=float)
    f0 = np.asarray(f(theta), dtype=float)
    out = np.empty((f0.size, theta.size))
    for i in range(theta.size):
        h = max(h_base, h_base * abs(theta[i]))
        up = theta.copy()
        dn = theta.copy()
        up[i] += h
        dn[i] -= h
        out[:, i] = (np.asarray(f(up), dtype=float) - np.asarray(f(dn), dtype=float)).ravel() / (2 * h)
    return out


@dataclass
class Parameterization:
    """theta = (gamma, xi) with gamma the leading q interest parameters."""

    q: int
    r: int
    mu_fn: Callable
    sigma_fn: Callable
    jac_mu: Optional[Callable] = None
    jac_vec_sigma: Optional[Callable] = None
    name: str = "custom"

    @property
    def d(self) -> int:
        return self.q + self.r

    def jacobian_mu(self, theta):
        if self.jac_mu is not None:
            return np.asarray(self.jac_mu(theta), dtype=float)
        return fd_jacobian(lambda th: np.asarray(self.mu_fn(th), dtype=float), theta)

    def jacobian_vec_sigma(self, theta):
        if self.jac_vec_sigma is not None:
            return np.asarray(self.jac_vec_sigma(theta), dtype=float)
        return fd_jacobian(
            lambda th: vec(np.asarray(self.sigma_fn(th), dtype=float)), theta
        )


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def identity_parameterization(m: int) -> Parameterization:
    """theta = (mu, vecs Sigma), everything interest."""
    nh = vecs_len(m)
    dm = duplication_matrix(m)

    def jac_mu(theta):
        return np.hstack([np.eye(m), np.zeros((m, nh))])

    def jac_sig(theta):
        return np.hstack([np.zeros((m * m, m)), dm])

    return Parameterization(
        q=m + nh,
        r=0,
        mu_fn=lambda th: th[:m],
        sigma_fn=lambda th: unvecs(th[m:], m),
        jac_mu=jac_mu,
        jac_vec_sigma=jac_sig,
        name="identity",
    )


def shape_scale_parameterization(scale: ScaleFunctional, m: int) -> Parameterization:
    """theta = (mu, ovecs V, s): interest (mu, shape), nuisance the scale."""
    nh = vecs_len(m)
    dm = duplication_matrix(m)

    def mu_fn(theta):
        return theta[:m]

    def sigma_fn(theta):
        v = reconstruct_shape(scale, theta[m : m + nh - 1], m)
        return theta[-1] * v

    def jac_mu(theta):
        out = np.zeros((m, m + nh))
        out[:, :m] = np.eye(m)
        return out

    def jac_sig(theta):
        v = reconstruct_shape(scale, theta[m : m + nh - 1], m)
        out = np.zeros((m * m, m + nh))
        out[:, m:] = dm @ jacobian_w(scale, v, theta[-1])
        return out

    return Parameterization(
        q=m + nh - 1,
        r=1,
        mu_fn=mu_fn,
        sigma_fn=sigma_fn,
        jac_mu=jac_mu,
        jac_vec_sigma=jac_sig,
        name=f"shape_scale[{scale.kind}]",
    )


def split_parameterization(
    q,
    r,
    mu_of_gamma,
    sigma_of_xi,
    jac_mu_gamma=None,
    jac_vec_sigma_xi=None,
    m=None,
) -> Parameterization:
    """mu depends only on gamma, Sigma only on xi (no parameters in common)."""

    def mu_fn(theta):
        return mu_of_gamma(theta[:q])

    def sigma_fn(theta):
        return sigma_of_xi(theta[q:])

    jac_mu = None
    jac_sig = None
    if jac_mu_gamma is not None:

        def jac_mu(theta):
            block = np.asarray(jac_mu_gamma(theta[:q]), dtype=float)
            return np.hstack([block, np.zeros((block.shape[0], r))])

    if jac_vec_sigma_xi is not None:

        def jac_sig(theta):
            block = np.asarray(jac_vec_sigma_xi(theta[q:]), dtype=float)
            return np.hstack([np.zeros((block.shape[0], q)), block])

    return Parameterization(
        q=q, r=r, mu_fn=mu_fn, sigma_fn=sigma_fn, jac_mu=jac_mu,
        jac_vec_sigma=jac_sig, name="split",
    )


def linear_split_parameterization(h, m: int) -> Parameterization:
    """Concrete split model: mu = H gamma, Sigma = unvecs(xi)."""
    h = np.asarray(h, dtype=float)
    q = h.shape[1]
    nh = vecs_len(m)
    dm = duplication_matrix(m)
    return split_parameterization(
        q=q,
        r=nh,
        mu_of_gamma=lambda g: h @ g,
        sigma_of_xi=lambda xi: unvecs(xi, m),
        jac_mu_gamma=lambda g: h,
        jac_vec_sigma_xi=lambda xi: dm,
        m=m,
    )


@dataclass
class LowRankModel:
    """Signal-plus-noise scatter Sigma = A(gamma) Xi A(gamma)^T + lambda I."""

    a_fn: Callable  # gamma -> (m, p)
    a_jac: Callable  # gamma -> (m, p, q)
    signal_cov: np.ndarray  # (p, p) SPD
    noise_level: float
    q: int

    def theta0(self, gamma0):
        gamma0 = np.asarray(gamma0, dtype=float)
        return np.concatenate(
            [gamma0, vecs(np.asarray(self.signal_cov, dtype=float)), [self.noise_level]]
        )


def low_rank_parameterization(model: LowRankModel) -> Parameterization:
    """theta = (gamma, vecs Xi, lambda) with analytic Jacobians."""
    q = model.q
    p = np.asarray(model.signal_cov).shape[0]
    npp = vecs_len(p)
    dp = duplication_matrix(p)

    def unpack(theta):
        gamma = theta[:q]
        xi = unvecs(theta[q : q + npp], p)
        lam = theta[-1]
        return gamma, xi, lam

    def mu_fn(theta):
        a = np.asarray(model.a_fn(theta[:q]), dtype=float)
        return np.zeros(a.shape[0])

    def sigma_fn(theta):
        gamma, xi, lam = unpack(theta)
        a = np.asarray(model.a_fn(gamma), dtype=float)
        return a @ xi @ a.T + lam * np.eye(a.shape[0])

    def jac_mu(theta):
        a = np.asarray(model.a_fn(theta[:q]), dtype=float)
        return np.zeros((a.shape[0], q + npp + 1))

    def jac_sig(theta):
        gamma, xi, lam = unpack(theta)
        a = np.asarray(model.a_fn(gamma), dtype=float)
        m = a.shape[0]
        if np.linalg.matrix_rank(a, tol=1e-12 * max(1.0, np.linalg.norm(a))) < a.shape[1]:
            raise fim_mod.IdentifiabilityError("factor matrix A is rank deficient")
        da = np.asarray(model.a_jac(gamma), dtype=float)
        cols = []
        for k in range(q):
            a_k = da[:, :, k]
            cols.append(vec(a_k @ xi @ a.T + a @ xi @ a_k.T))
        j_gamma = np.column_stack(cols) if cols else np.zeros((m * m, 0))
        j_xi = np.kron(a, a) @ dp
        j_lam = vec(np.eye(m)).reshape(-1, 1)
        return np.hstack([j_gamma, j_xi, j_lam])

    return Parameterization(
        q=q,
        r=npp + 1,
        mu_fn=mu_fn,
        sigma_fn=sigma_fn,
        jac_mu=jac_mu,
        jac_vec_sigma=jac_sig,
        name="low_rank",
    )


def breaking_parameterization(sigma0) -> Parameterization:
    """Deliberately non-adaptive model: Sigma(gamma) = gamma Sigma0.

    A bare overall-scale interest parameter with no compensating nuisance;
    its condition residual is m / gamma0 analytically.
    """
    sigma0 = np.asarray(sigma0, dtype=float)
    m = sigma0.shape[0]

    return Parameterization(
        q=1,
        r=0,
        mu_fn=lambda th: np.zeros(m),
        sigma_fn=lambda th: th[0] * sigma0,
        jac_mu=lambda th: np.zeros((m, 1)),
        jac_vec_sigma=lambda th: vec(sigma0).reshape(-1, 1),
        name="breaking",
    )


def sinusoid_steering(m: int, phase: float = 0.3):
    """Real steering columns a(gamma)_j = cos(j gamma + phase), with Jacobian."""

    def a_fn(gamma):
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        j = np.arange(m)[:, None]
        return np.cos(j * gamma[None, :] + phase)

    def a_jac(gamma):
        gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
        p = gamma.size
        j = np.arange(m)[:, None]
        out = np.zeros((m, p, p))
        for k in range(p):
            out[:, k, k] = -j[:, 0] * np.sin(j[:, 0] * gamma[k] + phase)
        return out

    return a_fn, a_jac


# ---------------------------------------------------------------------------
# adaptivity condition
# ---------------------------------------------------------------------------


@dataclass
class ConditionReport:
    residual: np.ndarray
    interest_term: np.ndarray
    tol: float
    satisfied: bool


@dataclass
class AdaptivityReport:
    fim_interest: np.ndarray
    sfim_interest: np.ndarray
    gap: float
    gap_rel: float
    adaptive: bool
    condition: ConditionReport = field(repr=False, default=None)


def condition_check(
    param: Parameterization, theta0, gen: DensityGenerator, rel_tol: float = 1e-8
) -> ConditionReport:
    """Evaluate the adaptivity condition residual at theta0.

    The residual (J_gamma^T[vec Sigma] - I_ge I_e^-1 J_xi^T[vec Sigma])
    vec(Sigma^-1) vanishes exactly when the semiparametric efficient FIM
    for gamma equals the parametric one (for every non-Gaussian
    generator; for the Gaussian the FIMs agree regardless).  The
    tolerance is relative to the uncorrected interest term because the
    condition is homogeneous in the Jacobian scaling.
    """
    theta0 = np.asarray(theta0, dtype=float)
    sigma = np.asarray(param.sigma_fn(theta0), dtype=float)
    w = vec(np.linalg.inv(sigma))
    j_sig = param.jacobian_vec_sigma(theta0)
    q = param.q
    interest_term = j_sig[:, :q].T @ w
    if param.r > 0:
        full_fim = fim_mod.fim_theta(param, theta0, gen)
        i_ge = full_fim[:q, q:]
        i_e = full_fim[q:, q:]
        try:
            cho = linalg.cho_factor(i_e, lower=True)
        except linalg.LinAlgError as exc:
            raise fim_mod.IdentifiabilityError(
                "singular nuisance information block in condition check"
            ) from exc
        residual = interest_term - i_ge @ linalg.cho_solve(cho, j_sig[:, q:].T @ w)
    else:
        residual = interest_term.copy()
    tol = rel_tol * max(1.0, np.abs(interest_term).max(initial=0.0))
    return ConditionReport(
        residual=residual,
        interest_term=interest_term,
        tol=tol,
        satisfied=bool(np.abs(residual).max(initial=0.0) < tol),
    )


def verify_adaptivity_by_fim(
    param: Parameterization, theta0, gen: DensityGenerator, rel_tol: float = 1e-8
) -> AdaptivityReport:
    """Compare the efficient interest FIMs of the parametric and semiparametric models."""
    full = fim_mod.fim_theta(param, theta0, gen)
    sfull = fim_mod.sfim_theta(param, theta0, gen)
    eff_par = fim_mod.efficient_fim_interest(full, param.q)
    eff_semi = fim_mod.efficient_fim_interest(sfull, param.q)
    gap = float(np.linalg.norm(eff_par - eff_semi))
    ref = max(float(np.linalg.norm(eff_semi)), np.finfo(float).tiny)
    gap_rel = gap / ref
    return AdaptivityReport(
        fim_interest=eff_par,
        sfim_interest=eff_semi,
        gap=gap,
        gap_rel=gap_rel,
        adaptive=bool(gap_rel < rel_tol),
        condition=condition_check(param, theta0, gen, rel_tol),
    )
