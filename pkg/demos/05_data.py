"""
Synthetic and shingled data
===========================
"""

# %%
import numpy as np

from fdridge import SyntheticSpec, gen_synthetic, select_gamma, shingle_series

# low rank: 10% of the columns carry the signal, high rank: 50%
for frac in (0.1, 0.5):
    spec = SyntheticSpec(n=2000, d=128, rank_fraction=frac, seed=0)
    data = gen_synthetic(spec)
    s = np.linalg.svd(data.A_train, compute_uv=False)
    print(f"R={spec.R:3d}  s[R]/s[0] = {s[spec.R] / s[0]:.3f}   gamma picked: {select_gamma(data)}")

# %%
# a random walk, differenced and cut into windows of length d; the label
# is the next difference
walk = np.cumsum(np.random.default_rng(1).standard_normal(5000))
data = shingle_series(walk, d=16, n=2000, seed=0)
print(data.A_train.shape, data.A_test.shape)
print("gamma for the walk:", select_gamma(data))
