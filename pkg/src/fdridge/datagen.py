"""Synthetic low/high-rank regression data, time-series shingling,
dataset persistence and gamma selection."""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.fft

from .linalg import InvalidInput, as_vector, read_fdrm, write_fdrm
from .ridge import GramAccumulator, solve_exact

__all__ = [
    "SyntheticSpec",
    "Dataset",
    "dct_matrix",
    "gen_synthetic",
    "shingle_series",
    "select_gamma",
    "default_gamma_grid",
    "save_dataset",
    "load_dataset",
    "RANK_FRACTIONS",
]

RANK_FRACTIONS = {"lr": 0.1, "hr": 0.5}


@dataclass
class SyntheticSpec:
    n: int
    d: int
    rank_fraction: float = 0.5
    noise_var: float = 4.0
    seed: int = 0
    n_test: Optional[int] = None

    @property
    def R(self) -> int:
        return int(np.floor(self.rank_fraction * self.d))

    def __post_init__(self):
        if not 0 < self.rank_fraction <= 1:
            raise InvalidInput(f"rank_fraction must lie in (0, 1], got {self.rank_fraction}")
        if self.n < 1 or self.d < 1:
            raise InvalidInput("n and d must be positive")
        if self.R < 1:
            raise InvalidInput(f"floor({self.rank_fraction} * {self.d}) = 0; need R >= 1")
        if self.noise_var < 0:
            raise InvalidInput("noise_var must be >= 0")


@dataclass
class Dataset:
    A_train: np.ndarray
    b_train: np.ndarray
    A_test: np.ndarray
    b_test: np.ndarray
    x_true: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.A_train.shape[0]

    @property
    def d(self) -> int:
        return self.A_train.shape[1]


def dct_matrix(d: int) -> np.ndarray:
    """Orthonormal DCT-II matrix ``W`` (``W @ v`` is the DCT of ``v``)."""
    return scipy.fft.dct(np.eye(d), type=2, norm="ortho", axis=0)


def _draw(spec: SyntheticSpec, rng, rows: int, x: np.ndarray):
    i = np.arange(spec.d)
    stds = np.exp(-(i ** 2) / spec.R ** 2)
    A = rng.standard_normal((rows, spec.d)) * stds
    b = A @ x + np.sqrt(spec.noise_var) * rng.standard_normal(rows)
    return A, b


def gen_synthetic(spec: SyntheticSpec, rotate: bool = True) -> Dataset:
    """Rows with independent coordinates ``N(0, exp(-i^2/R^2)^2)``, a unit
    coefficient vector supported on the first ``R`` coordinates, labels
    ``b = A x + N(0, noise_var)``, then ``A`` mixed by an orthonormal DCT.

    Labels are drawn before the rotation; ``x_true`` is returned in the
    rotated coordinates, so ``A_train @ x_true`` is still the noiseless
    signal.
    """
    rng = np.random.default_rng(spec.seed)
    x = np.zeros(spec.d)
    x[:spec.R] = rng.standard_normal(spec.R)
    x /= np.linalg.norm(x)
    n_test = spec.d if spec.n_test is None else spec.n_test
    A, b = _draw(spec, rng, spec.n, x)
    At, bt = _draw(spec, rng, n_test, x)
    if rotate:
        # row-wise DCT == right-multiplication by W^T
        A = scipy.fft.dct(A, type=2, norm="ortho", axis=1)
        At = scipy.fft.dct(At, type=2, norm="ortho", axis=1)
        x = scipy.fft.dct(x, type=2, norm="ortho")
    return Dataset(A, b, At, bt, x)


def shingle_series(series: Sequence[float], d: int, n: int, seed: int = 0,
                   n_test: Optional[int] = None) -> Dataset:
    """Autoregressive rows from a scalar series.

    Row ``i`` holds ``d`` consecutive first differences starting at
    difference ``i``; its label is the next difference.  ``n`` training
    and ``n_test`` (default ``d``) test shingles are drawn without
    replacement and are disjoint.
    """
    y = as_vector(series, "series")
    n_test = d if n_test is None else int(n_test)
    if d < 1 or n < 1 or n_test < 0:
        raise InvalidInput("d and n must be positive")
    if y.shape[0] < d + n + n_test + 1:
        raise InvalidInput(f"series of length {y.shape[0]} too short; need >= {d + n + n_test + 1}")
    diffs = np.diff(y)
    count = diffs.shape[0] - d
    windows = np.lib.stride_tricks.sliding_window_view(diffs, d + 1)[:count]
    rng = np.random.default_rng(seed)
    pick = rng.choice(count, size=n + n_test, replace=False)
    rows = windows[pick]
    A, b = rows[:, :d].copy(), rows[:, d].copy()
    return Dataset(A[:n], b[:n], A[n:], b[n:], None)


def default_gamma_grid() -> np.ndarray:
    return 2.0 ** np.arange(0, 21)


def select_gamma(data: Dataset, solver_exact: Optional[Callable] = None,
                 grid: Optional[Sequence[float]] = None) -> float:
    """Grid value whose exact ridge solution has the smallest test residual.

    ``solver_exact(acc, gamma)`` defaults to :func:`solve_exact`; ties go to
    the smaller gamma.
    """
    grid = default_gamma_grid() if grid is None else np.asarray(list(grid), dtype=np.float64)
    if grid.size == 0:
        raise InvalidInput("gamma grid is empty")
    if np.any(grid <= 0):
        raise InvalidInput("gamma grid must be positive")
    solver_exact = solver_exact or solve_exact
    acc = GramAccumulator(data.d).push_batch(data.A_train, data.b_train)
    best, best_res = None, np.inf
    for g in np.sort(grid):
        x = solver_exact(acc, float(g)).x
        res = float(np.linalg.norm(data.A_test @ x - data.b_test))
        if res < best_res:
            best, best_res = float(g), res
    return best


# --- persistence ------------------------------------------------------------

_FILES = {"A_train": "A_train.fdrm", "b_train": "b_train.fdrm",
          "A_test": "A_test.fdrm", "b_test": "b_test.fdrm", "x_true": "x_true.fdrm"}


def save_dataset(data: Dataset, out_dir, meta: dict) -> dict:
    """Write FDRM files plus ``manifest.json``; returns the manifest."""
    out = Path(out_dir)
    if not out.is_dir():
        raise FileNotFoundError(f"output directory {out} does not exist")
    files = {}
    digest = hashlib.sha256()
    for key, fname in _FILES.items():
        arr = getattr(data, key)
        if arr is None:
            continue
        arr = np.asarray(arr)
        write_fdrm(out / fname, arr if arr.ndim == 2 else arr[:, None])
        digest.update((out / fname).read_bytes())
        files[key] = fname
    manifest = dict(meta)
    manifest.update(files=files, creation_hash=digest.hexdigest(), n=data.n, d=data.d,
                    n_test=int(data.A_test.shape[0]))
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return manifest


def load_dataset(path) -> tuple[Dataset, dict]:
    p = Path(path)
    manifest = json.loads((p / "manifest.json").read_text())
    arrays = {}
    for key, fname in manifest["files"].items():
        a = read_fdrm(p / fname)
        arrays[key] = a if key.startswith("A_") else a[:, 0]
    data = Dataset(arrays["A_train"], arrays["b_train"], arrays["A_test"], arrays["b_test"],
                   arrays.get("x_true"))
    return data, manifest


def spec_dict(spec: SyntheticSpec) -> dict:
    out = asdict(spec)
    out["R"] = spec.R
    return out
