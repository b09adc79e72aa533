"""
Sketching a stream with Frequent Directions
===========================================

Push rows one at a time, then compare B^T B against A^T A.
"""

# %%
import numpy as np

from fdridge import FrequentDirections
from fdridge.linalg import spectral_norm, tails

rng = np.random.default_rng(0)
n, d = 2000, 50
# columns with decaying scale, so there is something worth keeping
A = rng.standard_normal((n, d)) * np.exp(-np.arange(d) / 8.0)
b = A @ rng.standard_normal(d) + 0.1 * rng.standard_normal(n)

# %%
fd = FrequentDirections(ell=10, d=d)
for row, label in zip(A, b):
    fd.push(row, label)
fd.flush()
print("kept singular values:", np.round(fd.sigma, 3))

# %%
# covariance error against the k-tail guarantee, for every k below ell
err = spectral_norm(A.T @ A - fd.covariance())
tail = tails(A)
for k in range(10):
    print(f"k={k}  error {err:8.2f}  bound {tail[k] / (10 - k):8.2f}")

# %%
# the robust variant keeps a scalar alpha and gets twice the slack
rfd = FrequentDirections(10, d, robust=True).fit(A, b)
err_r = spectral_norm(A.T @ A - rfd.covariance())
print("alpha", rfd.alpha, " rfd error", err_r)

# %%
# two sketches of two halves merge into one sketch of the whole
left = FrequentDirections(10, d).fit(A[:1000], b[:1000])
right = FrequentDirections(10, d).fit(A[1000:], b[1000:])
merged = left.merge(right)
print("merged error", spectral_norm(A.T @ A - merged.covariance()), "vs one pass", err)
