"""Comparison sketchers: truncated incremental SVD, two-level FD, and the
random-projection / CountSketch ridge solvers.

All of them follow the :class:`~fdridge.sketch.RowSketch` streaming
interface (``push``/``push_batch``/``flush``/``solve``).  The exact
``rr`` baseline is :class:`~fdridge.ridge.GramAccumulator`.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .linalg import InvalidInput, thin_svd
from .ridge import GramAccumulator, RidgeSolution, solve_from_sketch, solve_spd
from .sketch import FrequentDirections, RowSketch, fd_update

__all__ = [
    "IncrementalSVD",
    "TwoLevelFD",
    "RandomProjectionRidge",
    "CountSketchRidge",
    "naive_rr_push",
    "make_sketcher",
    "SKETCHERS",
]


class IncrementalSVD(RowSketch):
    """Best rank-``ell`` approximation after every batch; no shrinkage.

    No error guarantee exists for this heuristic; rotating inputs can make
    its covariance error arbitrarily bad relative to FD.
    """

    kind = "isvd"

    def __init__(self, ell: int, d: int):
        if int(ell) < 1:
            raise InvalidInput(f"ell must be >= 1, got {ell}")
        super().__init__(ell, d)
        self.sigma = np.zeros(self.ell)
        self.v_rows = np.zeros((self.ell, self.d))
        self.c = np.zeros(self.d)

    def _absorb(self, rows, labels):
        self.c += rows.T @ labels

    def _reduce(self, batch, labels=None):
        self.sigma, self.v_rows, _, _, _ = fd_update(self.sigma, self.v_rows, batch, self.ell, shrink=False)

    def covariance(self):
        B = self.sigma[:, None] * self.v_rows
        return B.T @ B

    def solve(self, gamma):
        return solve_from_sketch(self, gamma, "isvd")


class TwoLevelFD(RowSketch):
    """Two-level sketch: an FD sketch ``B`` with ``3k`` rows plus a sample
    ``Q`` of what FD shrinks away.

    Every component removed by an FD step (``min(s_i^2, delta)`` along
    ``v_i`` for the kept directions, all of ``s_i^2`` for the dropped ones)
    enters a with-replacement weighted reservoir of ``q_cap`` slots; slot
    ``j`` holds a unit direction drawn with probability proportional to
    removed mass.  With ``W`` the total removed mass,
    ``Q = sqrt(W / q_cap) * slots`` so ``E[Q^T Q]`` equals the removed
    part of ``A^T A`` and ``tr(Q^T Q) = W`` exactly.

    ``ell`` is the total row budget ``3k + q_cap``; ``k`` defaults to
    ``max(1, ell // 6)``.
    """

    kind = "twolevel"

    def __init__(self, ell: int, d: int, k: Optional[int] = None, seed: Optional[int] = None):
        ell = int(ell)
        k = max(1, ell // 6) if k is None else int(k)
        if k < 1 or 3 * k >= ell:
            raise InvalidInput(f"two-level FD needs 1 <= k and 3k < ell, got k={k}, ell={ell}")
        super().__init__(ell, d)
        self.k = k
        self.q_cap = ell - 3 * k
        self.b_sketch = FrequentDirections(3 * k, d)
        self.batch_rows = 3 * k
        self._buf = np.zeros((self.batch_rows, self.d))
        self._buf_labels = np.zeros(self.batch_rows)
        self.c = np.zeros(self.d)
        self.removed_mass = 0.0
        self.slots = np.zeros((self.q_cap, self.d))
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def _absorb(self, rows, labels):
        self.c += rows.T @ labels

    def _reduce(self, batch, labels=None):
        b = self.b_sketch
        ell_b = b.ell
        b.sigma, b.v_rows, delta, s, vt = fd_update(b.sigma, b.v_rows, batch, ell_b)
        if delta <= 0.0:
            return
        s2 = s ** 2
        w = s2.copy()
        w[:ell_b] = np.minimum(s2[:ell_b], delta)
        for i in np.flatnonzero(w > 0):
            self.removed_mass += w[i]
            hit = self._rng.random(self.q_cap) < w[i] / self.removed_mass
            self.slots[hit] = vt[i]

    @property
    def Q(self) -> np.ndarray:
        if self.removed_mass <= 0:
            return np.zeros((0, self.d))
        return np.sqrt(self.removed_mass / self.q_cap) * self.slots

    def stacked(self) -> np.ndarray:
        return np.vstack([self.b_sketch.B, self.Q])

    def covariance(self):
        C = self.stacked()
        return C.T @ C

    def solve(self, gamma) -> RidgeSolution:
        """Decompose ``[B; Q]`` at query time, then use the FD solve."""
        self._require_flushed("solve")
        svd = thin_svd(self.stacked(), compute_left=False)
        view = _SvdView(svd.singular_values, svd.right_vectors, self.c)
        return solve_from_sketch(view, gamma, "twolevel")


class _SvdView:
    def __init__(self, sigma, v_rows, c):
        self.sigma, self.v_rows, self.c = sigma, v_rows, c

    def _require_flushed(self, what):
        pass


class _ProjectionRidge(RowSketch):
    """Shared state for the oblivious ``C += S A_batch`` sketches."""

    def __init__(self, ell: int, d: int, seed: Optional[int] = None):
        if int(ell) < 1:
            raise InvalidInput(f"ell must be >= 1, got {ell}")
        super().__init__(ell, d)
        self.C = np.zeros((self.ell, self.d))
        self.c_proj = np.zeros(self.ell)
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def _reduce(self, batch, labels):
        raise NotImplementedError

    def covariance(self):
        return self.C.T @ self.C

    def solve(self, gamma) -> RidgeSolution:
        """``(C^T C + gamma I)^{-1} C^T c_proj`` by a dense d x d solve."""
        gamma = float(gamma)
        if not gamma > 0:
            raise InvalidInput(f"gamma must be > 0, got {gamma}")
        self._require_flushed("solve")
        x = solve_spd(self.C.T @ self.C, self.C.T @ self.c_proj, gamma)
        return RidgeSolution(x, gamma, self.kind)


class RandomProjectionRidge(_ProjectionRidge):
    """Dense sign projection; ``S`` has i.i.d. entries ``+-1/sqrt(ell)`` so
    that ``E[S^T S] = I``."""

    kind = "rp"

    def sample_S(self) -> np.ndarray:
        signs = self._rng.integers(0, 2, size=(self.ell, self.ell), dtype=np.int8)
        return (2.0 * signs - 1.0) / np.sqrt(self.ell)

    def _reduce(self, batch, labels):
        S = self.sample_S()
        self.C += S @ batch
        self.c_proj += S @ labels


class CountSketchRidge(_ProjectionRidge):
    """CountSketch: each input row lands in one uniformly chosen sketch row
    with a random sign."""

    kind = "cs"

    def sample_hash(self) -> tuple[np.ndarray, np.ndarray]:
        rows = self._rng.integers(0, self.ell, size=self.ell)
        signs = 2.0 * self._rng.integers(0, 2, size=self.ell) - 1.0
        return rows, signs

    def sample_S(self) -> np.ndarray:
        rows, signs = self.sample_hash()
        S = np.zeros((self.ell, self.ell))
        S[rows, np.arange(self.ell)] = signs
        return S

    def _reduce(self, batch, labels):
        rows, signs = self.sample_hash()
        np.add.at(self.C, rows, signs[:, None] * batch)
        np.add.at(self.c_proj, rows, signs * labels)


def naive_rr_push(acc: GramAccumulator, row, label: float) -> GramAccumulator:
    return acc.push(row, label)


SKETCHERS = ("rr", "fd", "rfd", "isvd", "twolevel", "rp", "cs")


def make_sketcher(name: str, ell: int, d: int, seed: Optional[int] = None):
    """Build a fresh streaming sketcher by its tag."""
    if name == "rr":
        return GramAccumulator(d)
    if name == "fd":
        return FrequentDirections(ell, d)
    if name == "rfd":
        return FrequentDirections(ell, d, robust=True)
    if name == "isvd":
        return IncrementalSVD(ell, d)
    if name == "twolevel":
        return TwoLevelFD(ell, d, seed=seed)
    if name == "rp":
        return RandomProjectionRidge(ell, d, seed=seed)
    if name == "cs":
        return CountSketchRidge(ell, d, seed=seed)
    raise InvalidInput(f"unknown solver {name!r}; choose from {', '.join(SKETCHERS)}")
