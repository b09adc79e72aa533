"""
FD against the other streaming solvers
======================================

Same data, same ell, six ways to get a ridge solution.
"""

# %%
import numpy as np

from fdridge import SKETCHERS, SyntheticSpec, gen_synthetic, make_sketcher
from fdridge.ridge import coef_error

data = gen_synthetic(SyntheticSpec(n=4096, d=256, rank_fraction=0.5, noise_var=4.0, seed=3))
gamma, ell = 2048.0, 64
x_ref = make_sketcher("rr", ell, 256).fit(data.A_train, data.b_train).solve(gamma).x

# %%
for name in SKETCHERS:
    errs = []
    for seed in range(3):  # the random ones differ per seed, the others don't
        sk = make_sketcher(name, ell, 256, seed=seed).fit(data.A_train, data.b_train)
        errs.append(coef_error(sk.solve(gamma).x, x_ref))
    print(f"{name:9s} {np.mean(errs):.4f}")

# %%
# incremental SVD has no guarantee; a few heavy rows followed by many small
# ones in a fresh direction is enough to break it
from fdridge.linalg import spectral_norm

A = np.vstack([10 * np.eye(3)[:2], np.tile(np.eye(3)[2], (400, 1))])
for name in ("isvd", "fd"):
    sk = make_sketcher(name, 2, 3).fit(A)
    print(name, "covariance error", spectral_norm(A.T @ A - sk.covariance()))
