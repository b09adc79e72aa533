"""
Bias and variance of sketched ridge
===================================

Fixed design, b = A x + noise.  The closed forms are checked against a
Monte Carlo run.
"""

# %%
import numpy as np

from fdridge import FrequentDirections, RiskModel, risk_exact, risk_monte_carlo, risk_sketch
from fdridge.risk import exact_solver, gram_solver

rng = np.random.default_rng(2)
n, d = 200, 12
A = rng.standard_normal((n, d)) * np.linspace(2, 0.2, d)
x_true = rng.standard_normal(d)
model = RiskModel(A, x_true, s=0.5, gamma=20.0)

fd = FrequentDirections(9, d).fit(A)
sketch = fd.covariance()

# %%
ex = risk_exact(model)
sk = risk_sketch(model, sketch)
print(f"exact   bias^2 {ex.bias_sq:.4f}  variance {ex.variance:.4f}")
print(f"sketch  bias^2 {sk.bias_sq:.4f}  variance {sk.variance:.4f}")
print("variance bound:", sk.var_bound_main)

# %%
# same numbers from 10^4 noise draws; the +-SE column says how close to expect
mc = risk_monte_carlo(model, gram_solver(A, sketch, model.gamma), trials=10_000, seed=0)
print(f"MC      bias^2 {mc.bias_sq:.4f} +- {mc.bias_se:.4f}  variance {mc.variance:.4f} +- {mc.variance_se:.4f}")
mc0 = risk_monte_carlo(model, exact_solver(A, model.gamma), trials=10_000, seed=0)
print(f"MC rr   variance {mc0.variance:.4f} +- {mc0.variance_se:.4f}")
