# Shape estimators head to head: SCM, Tyler, and the rank-based one-step.
#
# A small Monte-Carlo at the study configuration (m=4, n=100, Toeplitz 0.8
# scatter).  Heavy tails sink the SCM, Tyler is robust but not efficient,
# and the rank-based estimator with a matched score tracks the
# semiparametric bound.

import numpy as np
from scipy.linalg import toeplitz

from ellipfim.bounds import crb_shape
from ellipfim.estimators import (
    TScore,
    VanDerWaerden,
    mse_index,
    r_estimator,
    scm_shape,
    tyler_shape,
)
from ellipfim.generators import sample, student_t
from ellipfim.scale import NORMALIZED_TRACE, decompose

m, n, trials = 4, 100, 500
scale = NORMALIZED_TRACE
sigma0 = toeplitz(0.8 ** np.arange(m))
v0 = decompose(scale, sigma0).v

print(f"m={m}, n={n}, {trials} trials, trace scale\n")
print(f"{'nu':>5} {'scm':>9} {'tyler':>9} {'r_vdw':>9} {'r_tnu':>9} {'bound':>9}")
for nu in (2.5, 5.0, 20.0):
    gen = student_t(nu)
    bound = np.trace(crb_shape(scale, v0, gen)) / n
    per_est = {"scm": [], "tyler": [], "r_vdw": [], "r_tnu": []}
    for t in range(trials):
        x = sample(n, np.zeros(m), sigma0, gen, seed=(2024, int(10 * nu), t))
        per_est["scm"].append(scm_shape(x, scale))
        pre = tyler_shape(x, scale)
        per_est["tyler"].append(pre)
        per_est["r_vdw"].append(r_estimator(x, scale, VanDerWaerden(), pre))
        per_est["r_tnu"].append(r_estimator(x, scale, TScore(nu), pre))
    row = [mse_index(v, v0) for v in per_est.values()]
    print(f"{nu:>5.1f} " + " ".join(f"{v:>9.5f}" for v in row) + f" {bound:>9.5f}")

print("\nnotes:")
print(" - at nu=2.5 the SCM has no finite fourth moments to lean on and its")
print("   MSE explodes; Tyler ignores the radial distribution entirely")
print(" - the matched-score estimator sits closest to the bound at every nu")
print(" - alpha_hat diagnostics for the last trial:",
      f"{per_est['r_tnu'][-1].alpha_hat:.3f}",
      "(cross-information scalar of the one-step update)")
