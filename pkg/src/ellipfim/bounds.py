"""Closed-form parametric CRBs and semiparametric bounds, plus the equality chain.

Every bound here is the inverse of a Fisher information computed in
``fim``; the test suite verifies the inversions numerically.  The
determinant-root scale gets its specialized forms as separate functions
so the general and specialized expressions can be compared directly.

Positive-definite inversions go through Cholesky after a strict symmetry
check: all bound matrices are PD by theory, so a factorization failure is
an upstream bug and should fail loudly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .generators import DensityGenerator
from .matcalc import commutation_matrix, dup_pinv, row_selector, vec
from .scale import DET_ROOT, ScaleFunctional, p_projector
from . import fim as fim_mod

__all__ = [
    "SingularCoefficientError",
    "pd_inverse",
    "crb_location",
    "crb_shape",
    "crb_shape_det_root",
    "ScaleBound",
    "crb_scale",
    "crb_scale_det_root",
    "crb_vecs_sigma",
    "BoundSet",
    "bound_set",
    "ChainLink",
    "ChainReport",
    "verify_chain",
    "write_bounds_csv",
]


class SingularCoefficientError(ValueError):
    """The rank-one correction coefficient is at its singular point."""


def pd_inverse(a):
    """Cholesky inverse of a symmetric positive-definite matrix."""
    a = np.asarray(a, dtype=float)
    norm = np.linalg.norm(a)
    if norm > 0 and np.linalg.norm(a - a.T) / norm > 1e-12:
        raise ValueError("matrix is not symmetric to working precision")
    a = 0.5 * (a + a.T)
    cho = linalg.cho_factor(a, lower=True)
    inv = linalg.cho_solve(cho, np.eye(a.shape[0]))
    return 0.5 * (inv + inv.T)


def _rank1_coeff(alpha: float, m: int) -> float:
    den = (m + 2) * alpha - m
    if abs(den) < 1e-12 * m:
        raise SingularCoefficientError(
            "alpha at the singular value m/(m+2); bound undefined"
        )
    return (alpha - 1.0) / den


def crb_location(v, s, gen: DensityGenerator):
    """CRB for the location: (s / beta) V, the inverse of the location FIM."""
    v = np.asarray(v, dtype=float)
    return (s / gen.beta(v.shape[0])) * v


def crb_shape(scale: ScaleFunctional, v, gen: DensityGenerator):
    """Parametric-and-semiparametric bound on ovecs(V) with unknown scale."""
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    alpha = gen.alpha(m)
    sel = row_selector(m)
    dpi = dup_pinv(m)
    p = p_projector(scale, v)
    core = (np.eye(m * m) + commutation_matrix(m)) @ np.kron(v, v)
    out = (sel @ dpi @ p @ core @ p.T @ dpi.T @ sel.T) / alpha
    return 0.5 * (out + out.T)


def crb_shape_det_root(v, gen: DensityGenerator):
    """Determinant-root specialization of the shape bound."""
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    alpha = gen.alpha(m)
    sel = row_selector(m)
    dpi = dup_pinv(m)
    core = (np.eye(m * m) + commutation_matrix(m)) @ np.kron(v, v) - (
        2.0 / m
    ) * np.outer(vec(v), vec(v))
    out = (sel @ dpi @ core @ dpi.T @ sel.T) / alpha
    return 0.5 * (out + out.T)


@dataclass(frozen=True)
class ScaleBound:
    value: float
    psi: np.ndarray  # cross block between ovecs(V) and s in the CRB


def crb_scale(scale: ScaleFunctional, v, s, gen: DensityGenerator) -> ScaleBound:
    """CRB on the scale given the shape, with the shape/scale cross block."""
    v = np.asarray(v, dtype=float)
    m = v.shape[0]
    alpha = gen.alpha(m)
    g = vec(scale.gradient(v))
    kron_v = np.kron(v, v)
    value = (2.0 * s * s / alpha) * (g @ kron_v @ g - _rank1_coeff(alpha, m))
    sel = row_selector(m)
    dpi = dup_pinv(m)
    p = p_projector(scale, v)
    psi = (2.0 * s / alpha) * (sel @ dpi @ p @ kron_v @ g)
    return ScaleBound(value=float(value), psi=psi)


def crb_scale_det_root(sigma, gen: DensityGenerator) -> float:
    """Closed form 4 |Sigma|^(2/m) / (m (m (alpha - 1) + 2 alpha))."""
    sigma = np.asarray(sigma, dtype=float)
    m = sigma.shape[0]
    alpha = gen.alpha(m)
    det_pow = float(np.exp(2.0 * np.linalg.slogdet(sigma)[1] / m))
    return 4.0 * det_pow / (m * (m * (alpha - 1.0) + 2.0 * alpha))


def crb_vecs_sigma(sigma, gen: DensityGenerator):
    """CRB on vecs(Sigma) in the scatter parameterization."""
    sigma = np.asarray(sigma, dtype=float)
    m = sigma.shape[0]
    alpha = gen.alpha(m)
    dpi = dup_pinv(m)
    middle = np.kron(sigma, sigma) - _rank1_coeff(alpha, m) * np.outer(
        vec(sigma), vec(sigma)
    )
    out = (2.0 / alpha) * dpi @ middle @ dpi.T
    return 0.5 * (out + out.T)


@dataclass
class BoundSet:
    """All bound blocks for one (scale, generator, Sigma) model."""

    crb_mu: np.ndarray
    crb_shape: np.ndarray
    crb_scale: float
    psi_cross: np.ndarray
    crb_vecs_sigma: np.ndarray
    scale_kind: str
    generator: str
    m: int
    s: float

    def blocks(self):
        return {
            "crb_mu": self.crb_mu,
            "crb_shape": self.crb_shape,
            "crb_scale": np.array([[self.crb_scale]]),
            "psi_cross": self.psi_cross.reshape(-1, 1),
            "crb_vecs_sigma": self.crb_vecs_sigma,
        }


def bound_set(scale: ScaleFunctional, sigma, gen: DensityGenerator) -> BoundSet:
    from .scale import decompose

    sigma = np.asarray(sigma, dtype=float)
    dec = decompose(scale, sigma)
    sb = crb_scale(scale, dec.v, dec.s, gen)
    return BoundSet(
        crb_mu=crb_location(dec.v, dec.s, gen),
        crb_shape=crb_shape(scale, dec.v, gen),
        crb_scale=sb.value,
        psi_cross=sb.psi,
        crb_vecs_sigma=crb_vecs_sigma(sigma, gen),
        scale_kind=scale.kind,
        generator=gen.name,
        m=sigma.shape[0],
        s=dec.s,
    )


# ---------------------------------------------------------------------------
# the equality chain
# ---------------------------------------------------------------------------


@dataclass
class ChainLink:
    name: str
    generator: str
    passed: bool
    value: float
    note: str


@dataclass
class ChainReport:
    scale_kind: str
    links: list

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links)

    def format_table(self) -> str:
        width = max(len(l.name) for l in self.links) + 2
        lines = [f"equality chain for scale '{self.scale_kind}'"]
        for l in self.links:
            status = "pass" if l.passed else "FAIL"
            lines.append(
                f"  [{status}] {l.name:<{width}} gen={l.generator:<10} "
                f"value={l.value:.3e}  {l.note}"
            )
        return "\n".join(lines)


def verify_chain(
    scale: ScaleFunctional, v, gens: Sequence[DensityGenerator], m: int
) -> ChainReport:
    """Check the semiparametric/parametric bound equalities on the shape.

    The bounds with scale unknown (generator fully unknown, functionally
    unknown, known up to parameters, or fully known) all equal the single
    closed form by construction, so their shared numeric content is that
    this one formula inverts the one efficient FIM.  The final link, the
    no-nuisance parametric bound, joins the chain exactly for the
    determinant-root scale and sits strictly below it otherwise.
    """
    v = np.asarray(v, dtype=float)
    links = []
    for gen in gens:
        bound = crb_shape(scale, v, gen)
        eff = fim_mod.efficient_fim_shape(v, scale, gen)
        err = np.linalg.norm(bound @ eff - np.eye(bound.shape[0])) / np.sqrt(
            bound.shape[0]
        )
        links.append(
            ChainLink(
                name="shared_bound_inverts_efficient_fim",
                generator=gen.name,
                passed=bool(err < 1e-8),
                value=float(err),
                note="one formula realizes SCRB(.|g), SCRB(.|s,g), CRB(.|s,zeta), CRB(.|s)",
            )
        )
        no_nuisance = pd_inverse(fim_mod.fim_eta(v, 1.0, scale, gen).i_v)
        diff = bound - no_nuisance
        rel = np.linalg.norm(diff) / max(np.linalg.norm(bound), 1e-300)
        if scale is DET_ROOT:
            links.append(
                ChainLink(
                    name="no_nuisance_bound_equality",
                    generator=gen.name,
                    passed=bool(rel < 1e-10),
                    value=float(rel),
                    note="det-root scale: chain extends to the scale-known bound",
                )
            )
        else:
            # the gap is rank one: PSD with a single positive eigenvalue,
            # so "strictly below in Loewner order" means PSD and nonzero
            eigs = np.linalg.eigvalsh(0.5 * (diff + diff.T))
            psd = bool(eigs[0] > -1e-10 * max(eigs[-1], 1.0))
            links.append(
                ChainLink(
                    name="no_nuisance_bound_strict_gap",
                    generator=gen.name,
                    passed=bool(psd and eigs[-1] > 0.0 and rel > 1e-10),
                    value=float(eigs[-1]),
                    note="non-canonical scale: scale-known bound sits strictly below (rank-one gap)",
                )
            )
    return ChainReport(scale_kind=scale.kind, links=links)


def write_bounds_csv(bounds: BoundSet, path):
    """Serialize all bound blocks row-major at 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("block,row,col,value\n")
        for name, mat in bounds.blocks().items():
            mat = np.atleast_2d(mat)
            for i in range(mat.shape[0]):
                for j in range(mat.shape[1]):
                    fh.write(f"{name},{i},{j},{mat[i, j]:.17g}\n")
