"""Frieze-Kannan-Vempala sketch SVD.

Length-square sample ``r`` rows of the input matrix ``A`` and rescale them
into an implicit ``r x n`` matrix ``R``, then sample ``c`` of R's columns
and rescale those into the small ``r x c`` matrix ``C``. The singular
values of ``C`` approximate those of ``A``, and C's left singular vectors
give implicit access to approximate singular vectors of ``A``:

    right:  v_l = (1 / sigma_l) R^T omega_l       (entry cost O(r))
    left:   u_l = A (1 / sigma_l^2) R^T omega_l   (needs a full row pass)

Repeated sample indices are allowed; sampling is with replacement.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, RefusedAtScale
from .matrices import MAX_DENSE_ENTRIES, SampleableMatrix

# Singular values below this fraction of the largest are dropped: the
# singular-vector formulas divide by sigma, so near-zero values explode.
SIGMA_DROP_RATIO = 1e-8


@dataclass
class FkvSketch:
    """Sampled-index description of an approximate SVD.

    ``row_indices[s]`` with ``row_scales[s]`` define row ``s`` of the
    implicit matrix R (``R[s] = row_scales[s] * A[row_indices[s]]``);
    ``sigma`` and ``omega`` are the retained singular values and left
    singular vectors of C. ``k`` is the requested truncation rank; fewer
    triples are retained when C's numerical rank falls short.
    """

    row_indices: np.ndarray
    row_scales: np.ndarray
    col_indices: np.ndarray
    C: np.ndarray
    sigma: np.ndarray
    omega: np.ndarray
    k: int
    frobenius_norm: float
    zero_columns: tuple = field(default_factory=tuple)

    @property
    def r(self) -> int:
        return len(self.row_indices)

    @property
    def c(self) -> int:
        return len(self.col_indices)

    @property
    def n_retained(self) -> int:
        return len(self.sigma)

    def save(self, path) -> None:
        np.savez(path, row_indices=self.row_indices, row_scales=self.row_scales,
                 col_indices=self.col_indices, C=self.C, sigma=self.sigma,
                 omega=self.omega, k=np.int64(self.k),
                 frobenius_norm=np.float64(self.frobenius_norm),
                 zero_columns=np.asarray(self.zero_columns, dtype=np.int64))

    @classmethod
    def load(cls, path) -> "FkvSketch":
        z = np.load(path)
        return cls(row_indices=z["row_indices"], row_scales=z["row_scales"],
                   col_indices=z["col_indices"], C=z["C"], sigma=z["sigma"],
                   omega=z["omega"], k=int(z["k"]),
                   frobenius_norm=float(z["frobenius_norm"]),
                   zero_columns=tuple(z["zero_columns"].tolist()))


def sample_rows(A: SampleableMatrix, r: int, rng):
    """Draw r row indices i ~ ||A_i||^2 / ||A||_F^2 with their rescale factors."""
    if r < 1:
        raise InvalidInput("need at least one sampled row")
    idx = A.sample_rows(rng, r)
    norms = np.array([A.row_norm(i) for i in idx])
    scales = A.frobenius_norm / (np.sqrt(r) * norms)
    return idx, scales


def sample_columns(A: SampleableMatrix, row_indices, c: int, rng) -> np.ndarray:
    """Draw c column indices: pick a sampled row uniformly, then j ~ q_row(j)."""
    if c < 1:
        raise InvalidInput("need at least one sampled column")
    row_indices = np.asarray(row_indices)
    if row_indices.size == 0:
        raise InvalidInput("row_indices must be non-empty")
    s = rng.integers(0, row_indices.size, size=c)
    return A.sample_cols_in_rows(row_indices[s], rng)


def build_c_matrix(A: SampleableMatrix, row_indices, row_scales, col_indices):
    """Assemble C: gather A on the sampled indices, rescale rows then columns.

    Returns ``(C, zero_columns)``. A sampled column of R that is identically
    zero cannot be normalized; it is left as zeros and reported.
    """
    R = np.asarray(row_scales)[:, None] * A.submatrix(row_indices, col_indices)
    col_norms = np.linalg.norm(R, axis=0)
    zero_cols = tuple(np.flatnonzero(col_norms == 0.0).tolist())
    if zero_cols:
        warnings.warn(f"{len(zero_cols)} sampled column(s) of R are zero; "
                      "left unnormalized", RuntimeWarning)
    safe = np.where(col_norms == 0.0, 1.0, col_norms)
    c = len(col_indices)
    C = R * (A.frobenius_norm / (np.sqrt(c) * safe))[None, :]
    return C, zero_cols


def decompose(C: np.ndarray, k: int, drop_ratio: float = SIGMA_DROP_RATIO):
    """Top-k singular values and left singular vectors of C, in descending order.

    Values below ``drop_ratio`` times the largest are discarded; if fewer
    than k remain, the shorter spectrum is returned with a warning. Each
    retained vector is sign-fixed so its largest-magnitude entry is positive.
    """
    if k < 1 or k > min(C.shape):
        raise InvalidInput(f"k={k} not in [1, min(C.shape)]")
    if not np.any(C):
        raise InvalidInput("C has no nonzero entries")
    w, s, _ = np.linalg.svd(C, full_matrices=False)
    keep = s > drop_ratio * s[0]
    retained = min(k, int(keep.sum()))
    if retained < k:
        warnings.warn(f"requested k={k} but only {retained} singular values "
                      "exceed the retention threshold", RuntimeWarning)
    sigma = s[:retained].copy()
    omega = w[:, :retained].copy()
    for ell in range(retained):
        if omega[np.argmax(np.abs(omega[:, ell])), ell] < 0:
            omega[:, ell] = -omega[:, ell]
    return sigma, omega


def build_sketch(A: SampleableMatrix, r: int, c: int, k: int, rng) -> FkvSketch:
    """Run the three sketching steps end to end."""
    rows, scales = sample_rows(A, r, rng)
    cols = sample_columns(A, rows, c, rng)
    C, zero_cols = build_c_matrix(A, rows, scales, cols)
    sigma, omega = decompose(C, min(k, min(r, c)))
    return FkvSketch(row_indices=rows, row_scales=scales, col_indices=cols,
                     C=C, sigma=sigma, omega=omega, k=k,
                     frobenius_norm=A.frobenius_norm, zero_columns=zero_cols)


def exhaustive_sketch(A: SampleableMatrix, k: int,
                      size_limit: int = MAX_DENSE_ENTRIES) -> FkvSketch:
    """Degenerate sketch that holds the whole matrix: C = A with unit scales.

    Every row and column appears exactly once and no rescaling is applied,
    so the decomposition is the exact SVD of A and the downstream
    singular-vector formulas reproduce exact singular vectors. Useful as an
    oracle and for full-sampling consistency tests.
    """
    dense = A.to_dense(size_limit)
    m, n = dense.shape
    sigma, omega = decompose(dense, min(k, m, n))
    return FkvSketch(row_indices=np.arange(m), row_scales=np.ones(m),
                     col_indices=np.arange(n), C=dense.copy(), sigma=sigma,
                     omega=omega, k=k, frobenius_norm=A.frobenius_norm)


def _check_ell(sketch: FkvSketch, ell: int) -> None:
    if not 0 <= ell < sketch.n_retained:
        raise InvalidInput(
            f"singular index {ell} not retained (have {sketch.n_retained})")


def right_singular_entries(sketch: FkvSketch, A: SampleableMatrix,
                           ell: int, cols) -> np.ndarray:
    """Entries of the approximate right singular vector v_l at ``cols``.

    Cost is O(r) entry queries per requested column.
    """
    _check_ell(sketch, ell)
    sub = A.submatrix(sketch.row_indices, cols)            # (r, len(cols))
    weights = sketch.row_scales * sketch.omega[:, ell]
    return (weights @ sub) / sketch.sigma[ell]


def right_singular_entry(sketch, A, ell: int, j) -> float:
    return float(right_singular_entries(sketch, A, ell, [j])[0])


def right_singular_vectors(sketch: FkvSketch, A: SampleableMatrix,
                           size_limit: int = MAX_DENSE_ENTRIES) -> np.ndarray:
    """All approximate right singular vectors as a dense (n, k') matrix."""
    if A.n_cols * sketch.r > size_limit:
        raise RefusedAtScale("right singular vectors too large to materialize")
    sub = A.submatrix(sketch.row_indices, np.arange(A.n_cols))
    R = sketch.row_scales[:, None] * sub
    return (R.T @ sketch.omega) / sketch.sigma[None, :]


def left_singular_entry(sketch: FkvSketch, A: SampleableMatrix,
                        ell: int, i) -> float:
    """Entry i of the approximate left singular vector u_l (full row pass)."""
    _check_ell(sketch, ell)
    v = right_singular_entries(sketch, A, ell, np.arange(A.n_cols))
    row = A.submatrix([i], np.arange(A.n_cols))[0]
    return float(row @ v / sketch.sigma[ell])


def singular_vector_pair(sketch: FkvSketch, A: SampleableMatrix, ell: int,
                         size_limit: int = MAX_DENSE_ENTRIES):
    """Approximate (u_l, v_l) as dense vectors, at desk scale only."""
    _check_ell(sketch, ell)
    v = right_singular_vectors(sketch, A, size_limit)[:, ell]
    u = A.to_dense(size_limit) @ v / sketch.sigma[ell]
    return u, v


def reconstruct(sketch: FkvSketch, A: SampleableMatrix, mode: str = "matrix",
                size_limit: int = MAX_DENSE_ENTRIES) -> np.ndarray:
    """Dense rank-k' reconstruction of A (``matrix``) or its pseudoinverse."""
    if mode not in ("matrix", "pseudoinverse"):
        raise InvalidInput(f"unknown mode {mode!r}")
    if A.n_rows * A.n_cols > size_limit:
        raise RefusedAtScale("reconstruction exceeds the dense size limit")
    V = right_singular_vectors(sketch, A, size_limit)
    U = A.to_dense(size_limit) @ V / sketch.sigma[None, :]
    if mode == "matrix":
        return (U * sketch.sigma[None, :]) @ V.T
    return (V / sketch.sigma[None, :]) @ U.T
