"""Scale functionals, the scatter -> (shape, scale) split and its geometry.

A scale functional S is 1-homogeneous, differentiable and has S(I) = 1;
the three concrete choices are the (1,1) entry, the normalized trace and
the m-th root of the determinant.  The shape matrix V = Sigma / S(Sigma)
lives on the manifold S(V) = 1, and the matrices built here (K_V, M_S, U,
P_S, the diffeomorphism Jacobians) encode that manifold's geometry in
half-vectorized coordinates.

Inputs claimed to sit on the manifold are checked against |S(V) - 1| <=
1e-8 and rejected otherwise; renormalization is only ever explicit via
:func:`renormalize`.
"""

from __future__ import annotations

import numpy as np
from scipy import linalg

from .matcalc import (
    duplication_matrix,
    dup_pinv,
    row_selector,
    vec,
    vecs,
    unvecs,
    vecs_len,
)

__all__ = [
    "ScaleFunctional",
    "FIRST_ELEMENT",
    "NORMALIZED_TRACE",
    "DET_ROOT",
    "SCALES",
    "scale_by_name",
    "ManifoldError",
    "ShapeDecomposition",
    "decompose",
    "renormalize",
    "grad_v11",
    "k_matrix",
    "m_matrix",
    "u_basis",
    "p_projector",
    "jacobian_w",
    "jacobian_w_inv",
    "reconstruct_shape",
]

MANIFOLD_TOL = 1e-8


class ManifoldError(ValueError):
    """Input shape matrix does not satisfy S(V) = 1 within tolerance."""


class ScaleFunctional:
    """One of the three named scale functionals; stateless and shareable."""

    kind = "scale"

    def value(self, sigma) -> float:
        raise NotImplementedError

    def gradient(self, sigma):
        """Matrix derivative D_S = dS/dSigma; scale-invariant by homogeneity."""
        raise NotImplementedError

    def __repr__(self):
        return self.kind


class _FirstElement(ScaleFunctional):
    kind = "first"

    def value(self, sigma):
        return float(np.asarray(sigma)[0, 0])

    def gradient(self, sigma):
        m = np.asarray(sigma).shape[0]
        g = np.zeros((m, m))
        g[0, 0] = 1.0
        return g


class _NormalizedTrace(ScaleFunctional):
    kind = "trace"

    def value(self, sigma):
        sigma = np.asarray(sigma)
        return float(np.trace(sigma)) / sigma.shape[0]

    def gradient(self, sigma):
        m = np.asarray(sigma).shape[0]
        return np.eye(m) / m


class _DetRoot(ScaleFunctional):
    kind = "det"

    def value(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        sign, logdet = np.linalg.slogdet(sigma)
        if sign <= 0:
            raise linalg.LinAlgError("determinant-root scale needs a PD matrix")
        return float(np.exp(logdet / sigma.shape[0]))

    def gradient(self, sigma):
        sigma = np.asarray(sigma, dtype=float)
        m = sigma.shape[0]
        return self.value(sigma) * np.linalg.inv(sigma) / m


FIRST_ELEMENT = _FirstElement()
NORMALIZED_TRACE = _NormalizedTrace()
DET_ROOT = _DetRoot()

SCALES = {
    "first": FIRST_ELEMENT,
    "trace": NORMALIZED_TRACE,
    "det": DET_ROOT,
}


def scale_by_name(name: str) -> ScaleFunctional:
    try:
        return SCALES[name]
    except KeyError:
        raise KeyError(
            f"unknown scale {name!r}; valid options: {', '.join(sorted(SCALES))}"
        ) from None


def _check_manifold(scale: ScaleFunctional, v):
    dev = abs(scale.value(v) - 1.0)
    if dev > MANIFOLD_TOL:
        raise ManifoldError(
            f"S(V) = 1 violated by {dev:.3e} for scale {scale.kind!r}; "
            "renormalize explicitly if intended"
        )


class ShapeDecomposition:
    """Shape matrix on the manifold plus the scalar scale that rebuilds Sigma."""

    def __init__(self, v, s, scale: ScaleFunctional):
        self.v = np.asarray(v, dtype=float)
        self.s = float(s)
        self.scale = scale

    def reconstruct(self):
        return self.s * self.v


def decompose(scale: ScaleFunctional, sigma) -> ShapeDecomposition:
    sigma = np.asarray(sigma, dtype=float)
    s = scale.value(sigma)
    return ShapeDecomposition(sigma / s, s, scale)


def renormalize(scale: ScaleFunctional, v):
    """Project a near-manifold matrix back onto S(V) = 1 by rescaling."""
    v = np.asarray(v, dtype=float)
    return v / scale.value(v)


def grad_v11(scale: ScaleFunctional, v):
    """Gradient of the implicit map ovecs(V) -> [V]_11 on the manifold."""
    v = np.asarray(v, dtype=float)
    _check_manifold(scale, v)
    m = v.shape[0]
    if scale.kind == "first":
        return np.zeros(vecs_len(m) - 1)
    if scale.kind == "trace":
        w = vec(np.eye(m))
    else:
        w = vec(np.linalg.inv(v))
    dm = duplication_matrix(m)
    row = w @ dm
    return -row[1:] / row[0]


def k_matrix(scale: ScaleFunctional, v):
    """Tangent-coordinate block: grad of [V]_11 stacked over the identity."""
    m = np.asarray(v).shape[0]
    nh = vecs_len(m)
    k = np.zeros((nh, nh - 1))
    k[0, :] = grad_v11(scale, v)
    k[1:, :] = np.eye(nh - 1)
    return k


def m_matrix(scale: ScaleFunctional, v):
    """M_S = K_V^T D_m^T, full row rank m(m+1)/2 - 1."""
    m = np.asarray(v).shape[0]
    return k_matrix(scale, v).T @ duplication_matrix(m).T


def constraint_gradient_vecs(scale: ScaleFunctional, v):
    """Gradient of S in half-vectorized coordinates: D_m^T vec(D_S)."""
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    return duplication_matrix(m).T @ vec(scale.gradient(v))


def u_basis(scale: ScaleFunctional, v):
    """Orthonormal basis of the manifold tangent space in vecs coordinates.

    The columns span the orthogonal complement of the constraint gradient
    D_m^T vec(D_S), which is what makes col(U) = col(K_V) for every scale
    (for the first-element and trace scales D_S is diagonal and this
    direction coincides with vecs(D_S)).  Built by Householder QR with a
    deterministic sign convention: first nonzero entry of each column
    positive.
    """
    v = np.asarray(v, dtype=float)
    _check_manifold(scale, v)
    g = constraint_gradient_vecs(scale, v)
    q, _ = np.linalg.qr(g.reshape(-1, 1), mode="complete")
    u = q[:, 1:]
    # sign convention for reproducibility
    for j in range(u.shape[1]):
        col = u[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12 * np.abs(col).max())[0]
        if nz.size and col[nz[0]] < 0:
            u[:, j] = -col
    return u


def p_projector(scale: ScaleFunctional, sigma):
    """Annihilator P_S(V) = I - vec(V) vec(D_S)^T used by the shape CRB."""
    sigma = np.asarray(sigma, dtype=float)
    m = sigma.shape[0]
    v = decompose(scale, sigma).v
    return np.eye(m * m) - np.outer(vec(v), vec(scale.gradient(sigma)))


def jacobian_w(scale: ScaleFunctional, v, s):
    """Jacobian of (ovecs V, s) -> vecs(Sigma):  [s K_V , vecs(V)]."""
    v = np.asarray(v, dtype=float)
    if s <= 0:
        raise ValueError("scale s must be positive")
    kv = k_matrix(scale, v)
    return np.hstack([s * kv, vecs(v).reshape(-1, 1)])


def jacobian_w_inv(scale: ScaleFunctional, sigma):
    """Jacobian of vecs(Sigma) -> (ovecs V, s); composes with jacobian_w to I."""
    sigma = np.asarray(sigma, dtype=float)
    m = sigma.shape[0]
    dec = decompose(scale, sigma)
    dm = duplication_matrix(m)
    dpi = dup_pinv(m)
    sel = row_selector(m)
    grad = vec(scale.gradient(sigma))
    p = np.eye(m * m) - np.outer(vec(dec.v), grad)
    top = (sel @ dpi @ p @ dm) / dec.s
    bottom = (grad @ dm).reshape(1, -1)
    return np.vstack([top, bottom])


def reconstruct_shape(scale: ScaleFunctional, ovecs_v, m):
    """Rebuild the manifold shape matrix from its free coordinates.

    [V]_11 is recovered from the constraint S(V) = 1: trivially 1 for the
    first-element scale, m minus the remaining diagonal for the trace
    scale, and by solving the (linear in [V]_11) Laplace expansion of the
    determinant along the first row for the determinant-root scale.
    """
    ovecs_v = np.asarray(ovecs_v, dtype=float)
    full = np.concatenate([[0.0], ovecs_v])
    v = unvecs(full, m)
    if scale.kind == "first":
        v[0, 0] = 1.0
        return v
    if scale.kind == "trace":
        v[0, 0] = m - np.trace(v)
        return v
    # det root: |V| = sum_j v_1j cof_1j = 1, cofactors free of row 1
    idx = np.arange(1, m)
    minors = np.empty(m)
    for j in range(m):
        sub = v[np.ix_(idx, np.delete(np.arange(m), j))]
        minors[j] = np.linalg.det(sub)
    signs = (-1.0) ** np.arange(m)
    rest = float(np.sum(v[0, 1:] * signs[1:] * minors[1:]))
    if abs(minors[0]) < 1e-14:
        raise linalg.LinAlgError("degenerate leading cofactor in shape rebuild")
    v[0, 0] = (1.0 - rest) / minors[0]
    return v
