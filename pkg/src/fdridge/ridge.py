"""Ridge solutions from exact Gram matrices and from FD sketches, plus the
coefficient-error bound and the sufficient (ell, gamma) calculators."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .linalg import BOUND_SLACK, InvalidInput, NumericError, as_matrix, as_vector, sym_eigvalsh

__all__ = [
    "SOLVER_TAGS",
    "GramAccumulator",
    "RidgeSolution",
    "BoundReport",
    "solve_exact",
    "solve_spd",
    "solve_from_sketch",
    "lemma1_bound",
    "best_k",
    "theorem_required_gamma",
    "theorem_required_ell",
    "coef_error",
    "pred_error",
]

SOLVER_TAGS = ("exact", "fd", "rfd", "isvd", "twolevel", "rp", "cs")


@dataclass
class RidgeSolution:
    x: np.ndarray
    gamma_effective: float
    solver: str

    def __post_init__(self):
        if self.solver not in SOLVER_TAGS:
            raise InvalidInput(f"unknown solver tag {self.solver!r}")
        if not np.all(np.isfinite(self.x)):
            raise NumericError(f"{self.solver} solution is not finite")


@dataclass
class BoundReport:
    """Quantities of the coefficient-error bound
    ``||x_hat - x|| <= ||A^T A - C^T C||_2 / (lambda_min(C^T C) + gamma) * ||x||``."""

    covariance_error: float
    lambda_min_sketch: float
    lemma1_factor: float
    k_best: int = 0
    tail_at_k: float = float("nan")
    gamma: float = float("nan")

    @property
    def factor_without_lambda_min(self) -> float:
        """The looser factor with ``lambda_min`` dropped, used by the required gamma and ell calculators."""
        return self.covariance_error / self.gamma


class GramAccumulator:
    """Exact streaming ``A^T A`` and ``A^T b`` (the naive ``rr`` baseline).

    Uses O(d^2) memory.  Rows may be pushed one at a time or in blocks;
    block pushes are a single rank-k update.
    """

    kind = "exact"

    def __init__(self, d: int):
        d = int(d)
        if d < 1:
            raise InvalidInput(f"d must be >= 1, got {d}")
        self.d = d
        self.gram = np.zeros((d, d))
        self.c = np.zeros(d)
        self.n_seen = 0
        self.pending = 0

    def push(self, row, label: float = 0.0):
        row = as_vector(row, "row")
        if row.shape[0] != self.d:
            raise InvalidInput(f"row has dimension {row.shape[0]}, expected {self.d}")
        self.gram += np.outer(row, row)
        self.c += row * float(label)
        self.n_seen += 1
        return self

    def push_batch(self, rows, labels=None):
        rows = as_matrix(rows, "rows")
        if rows.shape[1] != self.d:
            raise InvalidInput(f"rows have dimension {rows.shape[1]}, expected {self.d}")
        labels = np.zeros(rows.shape[0]) if labels is None else as_vector(labels, "labels")
        if labels.shape[0] != rows.shape[0]:
            raise InvalidInput("rows and labels disagree in length")
        self.gram += rows.T @ rows
        self.c += rows.T @ labels
        self.n_seen += rows.shape[0]
        return self

    def flush(self):
        return self

    def fit(self, A, b=None):
        return self.push_batch(A, b)

    def solve(self, gamma: float) -> RidgeSolution:
        return solve_exact(self, gamma)

    def _require_flushed(self, what):
        pass


def solve_spd(gram, rhs, gamma: float) -> np.ndarray:
    """Solve ``(gram + gamma I) x = rhs`` with a Cholesky factorization."""
    gram = np.asarray(gram, dtype=np.float64)
    M = gram + gamma * np.eye(gram.shape[0])
    try:
        factor = scipy.linalg.cho_factor(M, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"system is not positive definite at gamma={gamma}: {exc}") from exc
    return scipy.linalg.cho_solve(factor, rhs, check_finite=False)


def solve_exact(acc: GramAccumulator, gamma: float) -> RidgeSolution:
    """``x = (A^T A + gamma I)^{-1} A^T b``.

    ``gamma = 0`` is accepted only when the Gram matrix is numerically
    nonsingular.
    """
    gamma = float(gamma)
    if gamma < 0:
        raise InvalidInput(f"gamma must be >= 0, got {gamma}")
    x = solve_spd(acc.gram, acc.c, gamma)
    if gamma == 0:
        # Cholesky can succeed on a barely-singular matrix; check conditioning
        if np.linalg.cond(acc.gram) > 1e12:
            raise NumericError("Gram matrix is singular; use gamma > 0")
    return RidgeSolution(x, gamma, "exact")


def solve_from_sketch(state, gamma: float, solver: Optional[str] = None) -> RidgeSolution:
    """Ridge solution from a flushed FD-family sketch in O(ell d).

    Uses the eigenbasis of ``V Sigma^2 V^T + g I``: inside the row space of
    ``v_rows`` the eigenvalues are ``sigma_i^2 + g``, on its complement
    they are ``g``.  For RFD, ``g = gamma + alpha``.
    """
    gamma = float(gamma)
    if not gamma > 0:
        raise InvalidInput(f"sketch solvers need gamma > 0, got {gamma}")
    state._require_flushed("solve")
    g = gamma + float(getattr(state, "alpha", 0.0))
    V = state.v_rows
    c = state.c
    c_proj = V @ c
    x = V.T @ (c_proj / (state.sigma ** 2 + g)) + (c - V.T @ c_proj) / g
    return RidgeSolution(x, g, solver or state.kind)


def best_k(tail_by_k, ell: int) -> tuple[int, float]:
    """``argmin_k tail[k] / (ell - k)`` over ``0 <= k < ell`` (brute force)."""
    tail_by_k = np.asarray(tail_by_k, dtype=np.float64)
    ks = np.arange(min(ell, tail_by_k.shape[0]))
    vals = tail_by_k[ks] / (ell - ks)
    k = int(ks[np.argmin(vals)])
    return k, float(tail_by_k[k])


def lemma1_bound(gram_exact, gram_sketch, gamma: float, ell: Optional[int] = None) -> BoundReport:
    """Relative coefficient-error bound for ``(gram_sketch + gamma I)^{-1} c``.

    When ``ell`` is given, ``k_best``/``tail_at_k`` report the ``k``
    minimizing ``tail_k / (ell - k)`` with tails read off the eigenvalues
    of ``gram_exact``.
    """
    K = as_matrix(gram_exact, "gram_exact")
    Kh = as_matrix(gram_sketch, "gram_sketch")
    if K.shape != Kh.shape or K.shape[0] != K.shape[1]:
        raise InvalidInput(f"expected equal square matrices, got {K.shape} and {Kh.shape}")
    for name, m in (("gram_exact", K), ("gram_sketch", Kh)):
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.max(np.abs(m - m.T)) > 1e-10 * scale:
            raise InvalidInput(f"{name} is not symmetric")
    gamma = float(gamma)
    if not gamma > 0:
        raise InvalidInput(f"gamma must be > 0, got {gamma}")
    ev = sym_eigvalsh(K - Kh)
    cov_err = float(max(abs(ev[0]), abs(ev[-1])))
    lam_min = float(sym_eigvalsh(Kh)[0])
    factor = cov_err / (max(lam_min, 0.0) + gamma)
    k, tail = 0, float("nan")
    if ell is not None:
        lam = np.clip(sym_eigvalsh(K)[::-1], 0.0, None)
        tail_by_k = np.concatenate([np.cumsum(lam[::-1])[::-1], [0.0]])
        k, tail = best_k(tail_by_k, int(ell))
    return BoundReport(cov_err, lam_min, factor, k, tail, gamma)


def theorem_required_gamma(tail: float, ell: int, k: int, eps: float, robust: bool = False) -> float:
    """Smallest gamma with ``tail / (gamma (ell - k)) <= eps`` (halved for RFD)."""
    if not 0 <= k < ell:
        raise InvalidInput(f"need 0 <= k < ell, got k={k}, ell={ell}")
    if not eps > 0:
        raise InvalidInput(f"eps must be > 0, got {eps}")
    if tail < 0:
        raise InvalidInput(f"tail must be >= 0, got {tail}")
    g = tail / (eps * (ell - k))
    return g / 2.0 if robust else g


def theorem_required_ell(tail: float, gamma: float, k: int, eps: float, robust: bool = False) -> int:
    """Smallest ell with ``ell >= tail / (gamma eps) + k`` (denominator doubled for RFD)."""
    if not gamma > 0:
        raise InvalidInput(f"gamma must be > 0, got {gamma}")
    if not eps > 0:
        raise InvalidInput(f"eps must be > 0, got {eps}")
    if tail < 0 or k < 0:
        raise InvalidInput("tail and k must be >= 0")
    # divide step by step: gamma * eps can underflow when gamma is denormal
    need = tail / gamma / eps / (2.0 if robust else 1.0)
    if not math.isfinite(need):
        raise NumericError(f"required ell overflows (tail={tail}, gamma={gamma}, eps={eps})")
    # absorb float noise so that e.g. 5.000000000001 does not round up
    ell = math.ceil(need * (1 - 1e-12)) + k
    return max(ell, k + 1, 2)


def coef_error(x_hat, x_ref) -> float:
    """``||x_hat - x_ref|| / ||x_ref||``."""
    x_hat, x_ref = as_vector(x_hat, "x_hat"), as_vector(x_ref, "x_ref")
    if x_hat.shape != x_ref.shape:
        raise InvalidInput(f"shape mismatch {x_hat.shape} vs {x_ref.shape}")
    ref = np.linalg.norm(x_ref)
    if ref == 0:
        raise InvalidInput("reference solution is zero")
    return float(np.linalg.norm(x_hat - x_ref) / ref)


def pred_error(A_test, b_test, x) -> float:
    """Mean squared prediction error ``||A x - b||^2 / n``."""
    A, b, x = as_matrix(A_test, "A_test"), as_vector(b_test, "b_test"), as_vector(x, "x")
    if A.shape[0] != b.shape[0] or A.shape[1] != x.shape[0]:
        raise InvalidInput(f"shape mismatch: A {A.shape}, b {b.shape}, x {x.shape}")
    r = A @ x - b
    return float(r @ r / A.shape[0])


def check_bound(actual: float, bound: float) -> bool:
    return actual <= bound + BOUND_SLACK
