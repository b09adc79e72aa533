"""
Ridge regression straight from the sketch
=========================================

The sketch stores A^T b exactly, so a ridge solve only needs the ell x d
basis.  We also ask how big gamma must be for a given accuracy.
"""

# %%
import numpy as np

from fdridge import FrequentDirections, GramAccumulator, lemma1_bound
from fdridge import theorem_required_ell, theorem_required_gamma
from fdridge.linalg import tails
from fdridge.ridge import coef_error

rng = np.random.default_rng(1)
n, d, ell = 1000, 64, 16
A = rng.standard_normal((n, d)) * 0.9 ** np.arange(d)
b = A @ rng.standard_normal(d) + rng.standard_normal(n)

exact = GramAccumulator(d).fit(A, b)
fd = FrequentDirections(ell, d).fit(A, b)

# %%
for gamma in (0.1, 1.0, 10.0, 100.0):
    x = exact.solve(gamma).x
    x_hat = fd.solve(gamma).x
    bound = lemma1_bound(exact.gram, fd.covariance(), gamma)
    print(f"gamma={gamma:6}: relative error {coef_error(x_hat, x):.4f}, bound {bound.lemma1_factor:.4f}")

# %%
# how much regularization buys a 10% error with this ell?  pick the best k
tail = tails(A)
eps = 0.1
gammas = [theorem_required_gamma(tail[k], ell, k, eps) for k in range(ell)]
k = int(np.argmin(gammas))
gamma = gammas[k]
print("k", k, "gamma needed", gamma)
print("achieved", coef_error(fd.solve(gamma).x, exact.solve(gamma).x))

# %%
# or turn it around: gamma is fixed, how large does the sketch need to be?
print("ell needed at gamma=50:", theorem_required_ell(tail[4], 50.0, 4, eps))
