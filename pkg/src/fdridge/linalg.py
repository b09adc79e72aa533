"""Dense linear-algebra helpers shared by the sketches and solvers.

Matrices and vectors are plain float64 numpy arrays.  The helpers here
validate them (finite, right shape) and wrap the handful of
decompositions the rest of the package needs.
"""
from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "InvalidInput",
    "NumericError",
    "ThinSvd",
    "as_matrix",
    "as_vector",
    "thin_svd",
    "spectral_norm",
    "squared_frobenius_tail",
    "sym_eigvalsh",
    "write_fdrm",
    "read_fdrm",
    "write_csv_matrix",
    "read_csv_matrix",
]

ORTHO_TOL = 1e-8
RECON_TOL = 1e-10
BOUND_SLACK = 1e-9
# singular values below this fraction of the largest one are set to 0
ZERO_CLAMP = 1e-12


class InvalidInput(ValueError):
    """Bad argument: wrong shape, non-finite entries, out-of-range parameter."""


class NumericError(ArithmeticError):
    """A decomposition or solve failed to converge or hit a singular system."""


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    a = np.asarray(m, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise InvalidInput(f"{name} must be 2-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    return a


def as_vector(v, name: str = "vector") -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1)
    if a.ndim != 1:
        raise InvalidInput(f"{name} must be 1-D, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class ThinSvd:
    """Thin SVD ``m = U diag(s) Vt``.

    ``singular_values`` is non-increasing and non-negative; ``right_vectors``
    has orthonormal rows.
    """

    singular_values: np.ndarray
    right_vectors: np.ndarray
    left_vectors: Optional[np.ndarray] = None

    def reconstruct(self) -> np.ndarray:
        if self.left_vectors is None:
            raise InvalidInput("left singular vectors were not computed")
        return (self.left_vectors * self.singular_values) @ self.right_vectors


def thin_svd(m, compute_left: bool = True) -> ThinSvd:
    """Thin SVD with tiny singular values clamped to exactly zero.

    Wide inputs are decomposed through their transpose, which is the cheap
    direction for ell x d sketches with ell << d.
    """
    a = as_matrix(m)
    if a.size == 0:
        raise InvalidInput("cannot decompose an empty matrix")
    wide = a.shape[1] > a.shape[0]
    work = a.T if wide else a
    try:
        u, s, vt = np.linalg.svd(work, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"SVD did not converge: {exc}") from exc
    if wide:
        u, vt = vt.T, u.T
    if s.size and s[0] > 0:
        s = np.where(s < ZERO_CLAMP * s[0], 0.0, s)
    return ThinSvd(s, vt, u if compute_left else None)


def spectral_norm(m) -> float:
    a = as_matrix(m)
    if a.size == 0:
        return 0.0
    try:
        return float(np.linalg.norm(a, 2))
    except np.linalg.LinAlgError as exc:
        raise NumericError(str(exc)) from exc


def squared_frobenius_tail(m, k: int) -> float:
    """Sum of squared singular values beyond the top ``k``, i.e. ``||m - m_k||_F^2``."""
    a = as_matrix(m)
    r = min(a.shape)
    if not 0 <= k <= r:
        raise InvalidInput(f"k={k} outside [0, {r}]")
    s = np.linalg.svd(a, compute_uv=False)
    return float(np.sum(s[k:] ** 2))


def tails(m) -> np.ndarray:
    """All tails at once: ``out[k] = squared_frobenius_tail(m, k)`` for k = 0..min(shape)."""
    s2 = np.linalg.svd(as_matrix(m), compute_uv=False) ** 2
    return np.concatenate([np.cumsum(s2[::-1])[::-1], [0.0]])


def sym_eigvalsh(m) -> np.ndarray:
    """Ascending eigenvalues of the symmetric part of a square matrix."""
    a = as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise InvalidInput(f"expected a square matrix, got {a.shape}")
    return np.linalg.eigvalsh(0.5 * (a + a.T))


# --- FDRM binary format -----------------------------------------------------
# magic "FDRM", u32 version, u64 rows, u64 cols, rows*cols little-endian f64.

_FDRM_MAGIC = b"FDRM"
_FDRM_HEADER = struct.Struct("<4sIQQ")


def write_fdrm(path, m) -> None:
    a = as_matrix(m)
    with open(path, "wb") as fh:
        fh.write(_FDRM_HEADER.pack(_FDRM_MAGIC, 1, a.shape[0], a.shape[1]))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_fdrm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_FDRM_HEADER.size)
        if len(head) != _FDRM_HEADER.size:
            raise InvalidInput(f"{path}: truncated FDRM header")
        magic, version, rows, cols = _FDRM_HEADER.unpack(head)
        if magic != _FDRM_MAGIC:
            raise InvalidInput(f"{path}: bad magic {magic!r}")
        if version != 1:
            raise InvalidInput(f"{path}: unsupported FDRM version {version}")
        payload = fh.read()
    if len(payload) != 8 * rows * cols:
        raise InvalidInput(f"{path}: expected {rows}x{cols} payload, got {len(payload)} bytes")
    a = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(rows, cols)
    return as_matrix(a, str(path))


def write_csv_matrix(path, m) -> None:
    a = as_matrix(m)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in a:
            w.writerow([repr(float(x)) for x in row])


def read_csv_matrix(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.reader(fh):
            if rec:
                rows.append([float(x) for x in rec])
    if not rows:
        raise InvalidInput(f"{Path(path)}: empty CSV")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise InvalidInput(f"{Path(path)}: ragged CSV rows")
    return as_matrix(rows, str(path))
