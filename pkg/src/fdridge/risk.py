"""Fixed-design risk of exact and sketched ridge estimators.

Model: ``b = A x + s Z`` with ``Z ~ N(0, I_n)`` and ``A``, ``x``, ``s``
fixed.  An estimator that is linear in ``b`` has risk
``E ||A (x_hat - x)||^2 = bias^2 + variance``.  Closed forms are computed
through d x d Gram identities, e.g.
``||A M^{-1} A^T||_F^2 = tr(M^{-1} K M^{-1} K)`` with ``K = A^T A``, so
nothing n x n is formed.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .linalg import InvalidInput, NumericError, as_matrix, as_vector, sym_eigvalsh

__all__ = [
    "RiskModel",
    "RiskReport",
    "RankDeficientError",
    "risk_exact",
    "risk_sketch",
    "variance_bound_l4",
    "variance_bound_l5",
    "variance_bound_perturbation",
    "risk_monte_carlo",
    "exact_solver",
    "gram_solver",
    "has_full_column_rank",
]

FULL_RANK_RTOL = 1e-10


class RankDeficientError(InvalidInput):
    """The requested bound assumes ``A`` has full column rank."""


@dataclass
class RiskModel:
    A: np.ndarray
    x_true: np.ndarray
    s: float
    gamma: float

    def __post_init__(self):
        self.A = as_matrix(self.A, "A")
        self.x_true = as_vector(self.x_true, "x_true")
        if self.x_true.shape[0] != self.A.shape[1]:
            raise InvalidInput(f"x_true has length {self.x_true.shape[0]}, A has {self.A.shape[1]} columns")
        if not self.s > 0:
            raise InvalidInput(f"noise scale s must be > 0, got {self.s}")
        if self.gamma < 0:
            raise InvalidInput(f"gamma must be >= 0, got {self.gamma}")

    @property
    def gram(self) -> np.ndarray:
        return self.A.T @ self.A


@dataclass
class RiskReport:
    bias_sq: float
    variance: float
    risk: float
    bias_bound: Optional[float] = None
    var_bound_main: Optional[float] = None
    var_bound_l4: Optional[float] = None
    var_bound_l5: Optional[float] = None
    full_column_rank: Optional[bool] = None
    # Monte-Carlo standard errors; None for closed forms
    bias_se: Optional[float] = None
    variance_se: Optional[float] = None


def has_full_column_rank(A) -> bool:
    s = np.linalg.svd(as_matrix(A), compute_uv=False)
    if A.shape[0] < A.shape[1] or s[0] == 0:
        return False
    return bool(s[-1] > FULL_RANK_RTOL * s[0])


def _inv_apply(M: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        f = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"regularized Gram is singular: {exc}") from exc
    return scipy.linalg.cho_solve(f, rhs, check_finite=False)


def _closed_forms(K: np.ndarray, Kh: np.ndarray, x: np.ndarray, s: float, gamma: float):
    """(bias^2, variance) of ``(Kh + gamma I)^{-1} A^T b`` given ``K = A^T A``."""
    d = K.shape[0]
    Mh = Kh + gamma * np.eye(d)
    y = _inv_apply(Mh, K @ x) - x
    bias_sq = float(y @ K @ y)
    P = _inv_apply(Mh, K)  # Mh^{-1} K
    variance = float(s ** 2 * np.sum(P * P.T))  # tr(P P)
    return max(bias_sq, 0.0), max(variance, 0.0)


def _check_sketch(Kh, d):
    Kh = as_matrix(Kh, "gram_sketch")
    if Kh.shape != (d, d):
        raise InvalidInput(f"gram_sketch must be {d}x{d}, got {Kh.shape}")
    scale = max(1.0, float(np.max(np.abs(Kh))))
    if np.max(np.abs(Kh - Kh.T)) > 1e-10 * scale:
        raise InvalidInput("gram_sketch is not symmetric")
    ev = sym_eigvalsh(Kh)
    if ev[0] < -1e-9 * max(1.0, ev[-1]):
        raise InvalidInput(f"gram_sketch is not PSD (lambda_min={ev[0]:.3g})")
    return 0.5 * (Kh + Kh.T)


def risk_exact(m: RiskModel) -> RiskReport:
    """Bias^2 and variance of ``x_gamma = (A^T A + gamma I)^{-1} A^T b``."""
    K = m.gram
    bias_sq, variance = _closed_forms(K, K, m.x_true, m.s, m.gamma)
    return RiskReport(bias_sq, variance, bias_sq + variance)


def risk_sketch(m: RiskModel, gram_sketch) -> RiskReport:
    """Risk of ``(C^T C + gamma I)^{-1} A^T b`` plus the bias and variance bounds.

    The variance bounds need ``A`` to have full column rank; without it
    they are left as ``None``, ``full_column_rank`` is False and a
    warning is issued.
    """
    K = m.gram
    Kh = _check_sketch(gram_sketch, K.shape[0])
    if not m.gamma > 0:
        raise InvalidInput("risk bounds for sketches need gamma > 0")
    bias_sq, variance = _closed_forms(K, Kh, m.x_true, m.s, m.gamma)
    exact = risk_exact(m)
    a2 = float(np.linalg.norm(m.A, 2)) ** 2
    dev = sym_eigvalsh(K - Kh)
    delta = float(max(abs(dev[0]), abs(dev[-1])))
    g = m.gamma
    report = RiskReport(bias_sq, variance, bias_sq + variance)
    report.bias_bound = (1.0 + a2 ** 2 * delta ** 2 / g ** 4) * exact.bias_sq
    report.full_column_rank = has_full_column_rank(m.A)
    if report.full_column_rank:
        report.var_bound_main = (1.0 + a2 / g) ** 2 * exact.variance
        report.var_bound_l4 = variance_bound_l4(m, Kh)
        report.var_bound_l5 = variance_bound_l5(m, Kh)
    else:
        warnings.warn("A is not full column rank; variance bounds omitted", RuntimeWarning, stacklevel=2)
    return report


def _pinv_norm_sq(A) -> float:
    s = np.linalg.svd(A, compute_uv=False)
    return float(1.0 / s[-1] ** 2)


def variance_bound_l4(m: RiskModel, gram_sketch) -> float:
    """``(1 + ||A||^2 ||A^T A - C^T C||^2 ||A^+||^2 / gamma) * V(x_gamma)``."""
    if not has_full_column_rank(m.A):
        raise RankDeficientError("variance_bound_l4 requires A with full column rank")
    K = m.gram
    Kh = _check_sketch(gram_sketch, K.shape[0])
    dev = sym_eigvalsh(K - Kh)
    delta = float(max(abs(dev[0]), abs(dev[-1])))
    a2 = float(np.linalg.norm(m.A, 2)) ** 2
    factor = 1.0 + a2 * delta ** 2 * _pinv_norm_sq(m.A) / m.gamma
    return factor * risk_exact(m).variance


def variance_bound_perturbation(m: RiskModel, gram_sketch) -> float:
    """``(1 + ||A|| ||A^T A - C^T C|| ||A^+|| / gamma)^2 * V(x_gamma)``.

    Scale-invariant companion of :func:`variance_bound_l4`.  Writing
    ``(C^T C + g)^{-1} = (A^T A + g)^{-1} + (C^T C + g)^{-1} D (A^T A + g)^{-1}``
    with ``D = A^T A - C^T C`` and ``(A^T A + g)^{-1} A^T = A^+ M`` for the
    exact hat matrix ``M`` gives
    ``||A (C^T C + g)^{-1} A^T||_F <= (1 + ||A|| ||D|| ||A^+|| / g) ||M||_F``.
    At ``A = I``, ``C = 0``, ``gamma = 1`` it is attained with equality
    (``4 V``), where the l4 form gives only ``2 V``.
    """
    if not has_full_column_rank(m.A):
        raise RankDeficientError("variance_bound_perturbation requires A with full column rank")
    K = m.gram
    Kh = _check_sketch(gram_sketch, K.shape[0])
    dev = sym_eigvalsh(K - Kh)
    delta = float(max(abs(dev[0]), abs(dev[-1])))
    a = float(np.linalg.norm(m.A, 2))
    factor = (1.0 + a * delta * np.sqrt(_pinv_norm_sq(m.A)) / m.gamma) ** 2
    return factor * risk_exact(m).variance


def variance_bound_l5(m: RiskModel, gram_sketch) -> Optional[float]:
    """``V(x_gamma) / (1 - ||A^+||^2 ||C^T C - A^T A||)`` or None when the
    denominator is not positive or ``A`` is rank deficient."""
    if not has_full_column_rank(m.A):
        return None
    K = m.gram
    Kh = _check_sketch(gram_sketch, K.shape[0])
    dev = sym_eigvalsh(Kh - K)
    rho = _pinv_norm_sq(m.A) * float(max(abs(dev[0]), abs(dev[-1])))
    if rho >= 1.0:
        return None
    return risk_exact(m).variance / (1.0 - rho)


# --- Monte-Carlo oracle -----------------------------------------------------

def exact_solver(A, gamma: float) -> Callable[[np.ndarray], np.ndarray]:
    """Linear map ``b -> (A^T A + gamma I)^{-1} A^T b`` over label columns."""
    A = as_matrix(A)
    return gram_solver(A, A.T @ A, gamma)


def gram_solver(A, gram_sketch, gamma: float) -> Callable[[np.ndarray], np.ndarray]:
    A = as_matrix(A)
    Mh = np.asarray(gram_sketch, dtype=np.float64) + gamma * np.eye(A.shape[1])
    f = scipy.linalg.cho_factor(Mh, lower=True)
    return lambda B: scipy.linalg.cho_solve(f, A.T @ B, check_finite=False)


def risk_monte_carlo(m: RiskModel, solver: Callable, trials: int = 10_000, seed: int = 0,
                     vectorized: bool = True, chunk: int = 2000) -> RiskReport:
    """Empirical bias^2 and variance from fresh noise draws.

    ``solver`` maps labels to coefficients.  With ``vectorized=True`` it
    receives an ``n x t`` block of label columns and returns ``d x t``;
    otherwise it is called once per draw with an ``n`` vector.

    The variance is the unbiased sample variance of ``A x_hat``.  Since
    ``||A (mean - x)||^2`` overshoots the squared bias by ``V / trials`` in
    expectation, that term is subtracted.  Noise comes from a Philox
    generator so each seed reproduces bit-for-bit.
    """
    if trials < 100:
        raise InvalidInput(f"need at least 100 trials, got {trials}")
    rng = np.random.Generator(np.random.Philox(seed))
    A, x, s = m.A, m.x_true, m.s
    n = A.shape[0]
    clean = A @ x
    cols = []
    done = 0
    while done < trials:
        t = min(chunk, trials - done)
        B = clean[:, None] + s * rng.standard_normal((n, t))
        if vectorized:
            X = solver(B)
        else:
            X = np.column_stack([solver(B[:, j]) for j in range(t)])
        cols.append(A @ X)
        done += t
    P = np.hstack(cols)  # n x trials: predictions A x_hat
    mean = P.mean(axis=1)
    R = P - mean[:, None]
    q = np.einsum("ij,ij->j", R, R)
    variance = float(q.sum() / (trials - 1))
    variance_se = float(q.std(ddof=1) / np.sqrt(trials))
    u = mean - clean
    bias_sq = float(u @ u - variance / trials)
    proj = u @ R
    bias_se = float(np.sqrt(4.0 * proj.var(ddof=1) / trials + 2.0 * variance ** 2 / trials ** 2))
    return RiskReport(bias_sq, variance, bias_sq + variance, bias_se=bias_se, variance_se=variance_se)
