"""Streaming Frequent Directions (FD) and Robust Frequent Directions (RFD).

The sketch keeps ``ell`` singular values ``sigma`` and right singular
vectors ``v_rows`` so that ``B = diag(sigma) @ v_rows`` and
``B.T @ B`` approximates ``A.T @ A``.  Rows arrive one at a time or in
blocks; every ``ell`` rows the buffered batch is stacked under ``B``,
the stack is decomposed, and all squared singular values are shrunk by
the ``(ell+1)``-th one.  The exact ``c = A.T @ b`` rides along.

RFD additionally tracks ``alpha``, half of the total shrinkage, which is
added back as an isotropic term ``alpha * I`` at solve time.
"""
from __future__ import annotations

import struct
from typing import Optional

import numpy as np

from .linalg import InvalidInput, as_matrix, as_vector, thin_svd

__all__ = [
    "RowSketch",
    "FrequentDirections",
    "SketchStateError",
    "fd_update",
    "dumps",
    "loads",
    "COVARIANCE_MAX_D",
]

COVARIANCE_MAX_D = 4096


class SketchStateError(RuntimeError):
    """Operation not allowed in the sketch's current state (e.g. unflushed rows)."""


class RowSketch:
    """Buffered row stream shared by every sketcher.

    Subclasses implement ``_reduce(batch, labels)`` which receives at most
    ``ell`` rows, and ``solve(gamma)``.  The public surface is
    ``push`` / ``push_batch`` / ``flush`` / ``solve``.
    """

    kind = "base"

    def __init__(self, ell: int, d: int):
        ell, d = int(ell), int(d)
        if d < 1:
            raise InvalidInput(f"d must be >= 1, got {d}")
        self.ell = ell
        self.d = d
        self.batch_rows = ell
        self.n_seen = 0
        self._buf = np.zeros((ell, d))
        self._buf_labels = np.zeros(ell)
        self._n_pending = 0

    @property
    def pending(self) -> int:
        return self._n_pending

    def push(self, row, label: float = 0.0):
        row = as_vector(row, "row")
        if row.shape[0] != self.d:
            raise InvalidInput(f"row has dimension {row.shape[0]}, expected {self.d}")
        return self.push_batch(row[None, :], np.array([float(label)]))

    def push_batch(self, rows, labels=None):
        rows = as_matrix(rows, "rows")
        if rows.shape[1] != self.d:
            raise InvalidInput(f"rows have dimension {rows.shape[1]}, expected {self.d}")
        if labels is None:
            labels = np.zeros(rows.shape[0])
        labels = as_vector(labels, "labels")
        if labels.shape[0] != rows.shape[0]:
            raise InvalidInput("rows and labels disagree in length")
        self._absorb(rows, labels)
        i = 0
        n = rows.shape[0]
        while i < n:
            take = min(self.batch_rows - self._n_pending, n - i)
            if self._n_pending == 0 and take == self.batch_rows:
                # full batch straight from the input, no copy into the buffer
                self._reduce(rows[i:i + take], labels[i:i + take])
            else:
                p = self._n_pending
                self._buf[p:p + take] = rows[i:i + take]
                self._buf_labels[p:p + take] = labels[i:i + take]
                self._n_pending += take
                if self._n_pending == self.batch_rows:
                    self._reduce(self._buf, self._buf_labels)
                    self._n_pending = 0
            i += take
        self.n_seen += n
        return self

    def flush(self):
        """Reduce whatever is buffered, zero-padded to a full batch."""
        if self._n_pending:
            p = self._n_pending
            self._buf[p:] = 0.0
            self._buf_labels[p:] = 0.0
            self._reduce(self._buf, self._buf_labels)
            self._n_pending = 0
        return self

    def fit(self, A, b=None):
        """Stream all rows of ``A`` (with labels ``b``) and flush."""
        return self.push_batch(A, b).flush()

    def _absorb(self, rows: np.ndarray, labels: np.ndarray) -> None:
        pass

    def _reduce(self, batch: np.ndarray, labels: np.ndarray) -> None:
        raise NotImplementedError

    def solve(self, gamma: float):
        raise NotImplementedError

    def _require_flushed(self, what: str) -> None:
        if self._n_pending:
            raise SketchStateError(f"{what} requires a flushed sketch ({self._n_pending} rows pending)")


def fd_update(sigma: np.ndarray, v_rows: np.ndarray, batch: np.ndarray, ell: int,
              shrink: bool = True):
    """One FD step on the stack ``[diag(sigma) v_rows; batch]``.

    Returns ``(new_sigma, new_v_rows, delta, s_all, vt_all)`` where
    ``delta`` is the squared ``(ell+1)``-th singular value of the stack
    (0 if there is none) and ``s_all``/``vt_all`` is the full thin SVD,
    for callers that need the discarded part.  With ``shrink=False`` the
    top ``ell`` values are kept as-is (truncated incremental SVD).
    """
    d = v_rows.shape[1]
    stack = np.vstack([sigma[:, None] * v_rows, batch])
    svd = thin_svd(stack, compute_left=False)
    s, vt = svd.singular_values, svd.right_vectors
    delta = float(s[ell] ** 2) if s.shape[0] > ell else 0.0
    m = min(ell, s.shape[0])
    new_sigma = np.zeros(ell)
    new_v = np.zeros((ell, d))
    top = s[:m] ** 2 - delta if shrink else s[:m] ** 2
    new_sigma[:m] = np.sqrt(np.maximum(top, 0.0))
    new_v[:m] = vt[:m]
    return new_sigma, new_v, delta, s, vt


class FrequentDirections(RowSketch):
    """FD sketch of a row stream plus the exact ``c = A^T b``.

    ``robust=True`` gives the RFD variant, which also accumulates
    ``alpha`` and solves with ``gamma + alpha``.

    >>> fd = FrequentDirections(ell=4, d=3).fit(np.eye(3), np.ones(3))
    >>> np.allclose(fd.covariance(), np.eye(3))
    True
    """

    def __init__(self, ell: int, d: int, robust: bool = False):
        ell = int(ell)
        if ell < 2:
            raise InvalidInput(f"ell must be >= 2, got {ell}")
        super().__init__(ell, d)
        self.robust = bool(robust)
        self.sigma = np.zeros(self.ell)
        self.v_rows = np.zeros((self.ell, self.d))
        self.c = np.zeros(self.d)
        self.alpha = 0.0

    @property
    def kind(self) -> str:
        return "rfd" if self.robust else "fd"

    def _absorb(self, rows, labels):
        self.c += rows.T @ labels

    def _reduce(self, batch, labels=None):
        self.reduce_step(batch)

    def reduce_step(self, batch) -> float:
        """Fold a batch of at most ``ell`` rows into the sketch.

        Does not touch ``c`` or ``n_seen``.  Returns the shrinkage
        ``delta`` (squared ``(ell+1)``-th singular value of the stack).
        """
        batch = as_matrix(batch, "batch")
        if batch.shape[1] != self.d:
            raise InvalidInput(f"batch has {batch.shape[1]} columns, expected {self.d}")
        if batch.shape[0] > self.ell:
            raise InvalidInput(f"batch has {batch.shape[0]} rows, at most {self.ell} allowed")
        self.sigma, self.v_rows, delta, _, _ = fd_update(self.sigma, self.v_rows, batch, self.ell)
        if self.robust:
            self.alpha += delta / 2.0
        return delta

    @property
    def B(self) -> np.ndarray:
        return self.sigma[:, None] * self.v_rows

    def covariance(self) -> np.ndarray:
        """Materialize ``B^T B`` (without the RFD ``alpha I`` term). Meant for tests."""
        if self.d > COVARIANCE_MAX_D:
            raise SketchStateError(f"refusing to materialize a {self.d}x{self.d} covariance")
        B = self.B
        return B.T @ B

    def merge(self, other: "FrequentDirections") -> "FrequentDirections":
        """Sketch of the concatenation of both streams; neither input is modified."""
        if not isinstance(other, FrequentDirections):
            raise InvalidInput("can only merge with another FrequentDirections sketch")
        if (self.ell, self.d, self.robust) != (other.ell, other.d, other.robust):
            raise InvalidInput(
                f"cannot merge (ell={self.ell}, d={self.d}, robust={self.robust}) with "
                f"(ell={other.ell}, d={other.d}, robust={other.robust})")
        self._require_flushed("merge")
        other._require_flushed("merge")
        out = self.copy()
        out.reduce_step(other.B)
        out.c += other.c
        out.alpha += other.alpha
        out.n_seen += other.n_seen
        return out

    def copy(self) -> "FrequentDirections":
        out = FrequentDirections(self.ell, self.d, self.robust)
        out.sigma = self.sigma.copy()
        out.v_rows = self.v_rows.copy()
        out.c = self.c.copy()
        out.alpha = self.alpha
        out.n_seen = self.n_seen
        out._buf = self._buf.copy()
        out._buf_labels = self._buf_labels.copy()
        out._n_pending = self._n_pending
        return out

    def solve(self, gamma: float):
        from .ridge import solve_from_sketch

        return solve_from_sketch(self, gamma)

    def __repr__(self):
        return (f"FrequentDirections(ell={self.ell}, d={self.d}, robust={self.robust}, "
                f"n_seen={self.n_seen}, alpha={self.alpha:.6g})")


# --- FDSK serialization -----------------------------------------------------
# magic "FDSK", u32 version, u8 kind, u64 ell, u64 d, u64 n_seen, f64 alpha,
# then sigma (ell f64), v_rows (ell*d f64), c (d f64); little-endian.

_FDSK_MAGIC = b"FDSK"
_FDSK_HEADER = struct.Struct("<4sIBQQQd")
KIND_CODES = {"fd": 0, "rfd": 1, "isvd": 2, "twolevel": 3, "rp": 4, "cs": 5}


def _payload(sk) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    if isinstance(sk, FrequentDirections):
        return sk.sigma, sk.v_rows, sk.c, sk.alpha
    if sk.kind == "isvd":
        return sk.sigma, sk.v_rows, sk.c, 0.0
    if sk.kind in ("rp", "cs"):
        # sigma slot carries the projected labels, v_rows the projected data
        return sk.c_proj, sk.C, sk.C.T @ sk.c_proj, 0.0
    raise InvalidInput(f"no FDSK layout for sketch kind {sk.kind!r}")


def dumps(sk) -> bytes:
    """Serialize a flushed sketch to FDSK bytes."""
    sk._require_flushed("serialization")
    sigma, v_rows, c, alpha = _payload(sk)
    head = _FDSK_HEADER.pack(_FDSK_MAGIC, 1, KIND_CODES[sk.kind], sk.ell, sk.d, sk.n_seen, alpha)
    body = b"".join(np.ascontiguousarray(x, dtype="<f8").tobytes() for x in (sigma, v_rows, c))
    return head + body


def loads(data: bytes, seed: Optional[int] = None):
    """Inverse of :func:`dumps`.

    Randomized sketches (rp, cs) come back with a fresh generator seeded
    by ``seed``; their original random stream is not stored.
    """
    if len(data) < _FDSK_HEADER.size:
        raise InvalidInput("truncated FDSK header")
    magic, version, kind, ell, d, n_seen, alpha = _FDSK_HEADER.unpack_from(data)
    if magic != _FDSK_MAGIC:
        raise InvalidInput(f"bad magic {magic!r}")
    if version != 1:
        raise InvalidInput(f"unsupported FDSK version {version}")
    expect = _FDSK_HEADER.size + 8 * (ell + ell * d + d)
    if len(data) != expect:
        raise InvalidInput(f"FDSK payload length {len(data)}, expected {expect}")
    body = np.frombuffer(data, dtype="<f8", offset=_FDSK_HEADER.size).astype(np.float64)
    sigma = body[:ell].copy()
    v_rows = body[ell:ell + ell * d].reshape(ell, d).copy()
    c = body[ell + ell * d:].copy()
    if kind in (0, 1):
        sk = FrequentDirections(ell, d, robust=kind == 1)
        sk.sigma, sk.v_rows, sk.c, sk.alpha = sigma, v_rows, c, float(alpha)
    elif kind == 2:
        from .baselines import IncrementalSVD

        sk = IncrementalSVD(ell, d)
        sk.sigma, sk.v_rows, sk.c = sigma, v_rows, c
    elif kind in (4, 5):
        from .baselines import CountSketchRidge, RandomProjectionRidge

        cls = RandomProjectionRidge if kind == 4 else CountSketchRidge
        sk = cls(ell, d, seed=seed)
        sk.c_proj, sk.C = sigma, v_rows
    else:
        raise InvalidInput(f"unsupported FDSK kind code {kind}")
    sk.n_seen = int(n_seen)
    return sk
