"""Efficiency machinery for real and complex elliptically symmetric models.

Modules by theme: ``matcalc`` (vectorization operators and structural
matrices), ``generators`` (constrained density generators), ``scale``
(scale functionals and shape-manifold geometry), ``fim`` (scores and
Fisher information), ``bounds`` (CRBs and semiparametric bounds),
``parameterize`` (parameterized models and adaptivity checks),
``complexces`` (complex embeddings and closed-form complex FIMs),
``estimators`` (SCM / Tyler / rank-based shape estimators),
``simulate`` and ``invariants`` (Monte-Carlo study and invariant suite),
``cli`` (command-line front end).
"""

__version__ = "0.1.0"
