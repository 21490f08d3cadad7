"""Matrix access model: entry queries plus length-square sampling.

Every solver in this library is written against `SampleableMatrix`, which
exposes row sampling with probability ``row_norm(i)^2 / frobenius_norm^2``
and, within a row, column sampling with probability
``entry(i, j)^2 / row_norm(i)^2``. Dense and sparse implementations cache
cumulative squared-mass arrays at construction so no later operation scans
the matrix; implicit implementations (see `synthetic`) answer the same
queries from closed-form structure.
"""

import abc

import numpy as np

from .errors import DegenerateDistribution, InvalidInput, RefusedAtScale
from .sampling import LengthSquareTree

# Dense materializations above this entry count are refused unless the
# caller raises the limit explicitly.
MAX_DENSE_ENTRIES = 50_000_000


def _clip_below(x):
    # largest float strictly below x (vectorized)
    return np.nextafter(x, -np.inf)


class SampleableMatrix(abc.ABC):
    """Entry-query and length-square sampling access to a real matrix."""

    @property
    @abc.abstractmethod
    def n_rows(self) -> int: ...

    @property
    @abc.abstractmethod
    def n_cols(self) -> int: ...

    @property
    @abc.abstractmethod
    def frobenius_norm(self) -> float: ...

    @abc.abstractmethod
    def entry(self, i, j) -> float: ...

    @abc.abstractmethod
    def row_norm(self, i) -> float: ...

    @abc.abstractmethod
    def sample_row(self, rng: np.random.Generator): ...

    @abc.abstractmethod
    def sample_col_in_row(self, i, rng: np.random.Generator): ...

    # Vectorized defaults; subclasses override with fast paths.

    def sample_rows(self, rng, size: int) -> np.ndarray:
        return np.array([self.sample_row(rng) for _ in range(size)])

    def sample_cols_in_rows(self, rows, rng) -> np.ndarray:
        return np.array([self.sample_col_in_row(i, rng) for i in rows])

    def sample_entry(self, rng):
        i = self.sample_row(rng)
        return i, self.sample_col_in_row(i, rng)

    def entries(self, rows, cols) -> np.ndarray:
        return np.array([self.entry(i, j) for i, j in zip(rows, cols)])

    def submatrix(self, rows, cols) -> np.ndarray:
        """Dense gather of the given row and column index arrays."""
        out = np.empty((len(rows), len(cols)))
        for s, i in enumerate(rows):
            for t, j in enumerate(cols):
                out[s, t] = self.entry(i, j)
        return out

    def to_dense(self, size_limit: int = MAX_DENSE_ENTRIES) -> np.ndarray:
        if self.n_rows * self.n_cols > size_limit:
            raise RefusedAtScale(
                f"{self.n_rows}x{self.n_cols} exceeds the dense size limit")
        return self.submatrix(range(self.n_rows), range(self.n_cols))


class DenseSampleableMatrix(SampleableMatrix):
    """Dense matrix with precomputed cumulative squared-mass arrays.

    One flat cumulative sum over all squared entries serves both stages of
    sampling: row masses are read off at row boundaries, and column draws
    binary-search inside a row's slice. The ``tree`` backend swaps the
    vectorized searches for `LengthSquareTree` lookups; it is selectable to
    study the dynamic structure, not a speed setting.
    """

    def __init__(self, values, backend: str = "direct"):
        A = np.ascontiguousarray(values, dtype=np.float64)
        if A.ndim != 2 or A.size == 0:
            raise InvalidInput("need a non-empty 2-D matrix")
        if backend not in ("direct", "tree"):
            raise InvalidInput(f"unknown backend {backend!r}")
        self.values = A
        self.backend = backend
        m, n = A.shape
        self._flat_cum = np.cumsum(np.square(A.ravel()))
        self._row_ends = self._flat_cum[n - 1::n]          # cumulative mass at row ends
        self._fro2 = float(self._flat_cum[-1])
        if self._fro2 == 0.0:
            raise DegenerateDistribution("matrix has no nonzero entries")
        row_starts = np.concatenate(([0.0], self._row_ends[:-1]))
        self._row_sq = self._row_ends - row_starts
        self._row_starts = row_starts
        if backend == "tree":
            self._row_tree = LengthSquareTree(self._row_sq)
            self._col_trees: dict[int, LengthSquareTree] = {}

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    @property
    def frobenius_norm(self) -> float:
        return float(np.sqrt(self._fro2))

    def entry(self, i, j) -> float:
        return float(self.values[i, j])

    def entries(self, rows, cols) -> np.ndarray:
        return self.values[np.asarray(rows), np.asarray(cols)]

    def submatrix(self, rows, cols) -> np.ndarray:
        return self.values[np.ix_(np.asarray(rows), np.asarray(cols))]

    def row(self, i) -> np.ndarray:
        return self.values[i]

    def row_norm(self, i) -> float:
        return float(np.sqrt(self._row_sq[i]))

    def row_norms_sq(self) -> np.ndarray:
        return self._row_sq.copy()

    def to_dense(self, size_limit: int = MAX_DENSE_ENTRIES) -> np.ndarray:
        return self.values

    def _col_tree(self, i) -> LengthSquareTree:
        tree = self._col_trees.get(i)
        if tree is None:
            tree = LengthSquareTree(np.square(self.values[i]))
            self._col_trees[i] = tree
        return tree

    def sample_row(self, rng) -> int:
        if self.backend == "tree":
            return self._row_tree.sample(rng)
        return int(self.sample_rows(rng, 1)[0])

    def sample_col_in_row(self, i, rng) -> int:
        if self._row_sq[i] == 0.0:
            raise DegenerateDistribution(f"row {i} has no nonzero entries")
        if self.backend == "tree":
            return self._col_tree(i).sample(rng)
        return int(self.sample_cols_in_rows(np.array([i]), rng)[0])

    def sample_rows(self, rng, size: int) -> np.ndarray:
        if self.backend == "tree":
            return self._row_tree.sample_many(rng, size)
        target = np.minimum(rng.random(size) * self._fro2,
                            np.nextafter(self._fro2, 0.0))
        return np.searchsorted(self._row_ends, target, side="right")

    def sample_cols_in_rows(self, rows, rng) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        if self.backend == "tree":
            return np.array([self._col_tree(int(i)).sample(rng) for i in rows])
        base = self._row_starts[rows]
        mass = self._row_sq[rows]
        if np.any(mass == 0.0):
            raise DegenerateDistribution("sampled a row with no nonzero entries")
        target = np.minimum(base + rng.random(rows.size) * mass,
                            _clip_below(self._row_ends[rows]))
        flat = np.searchsorted(self._flat_cum, target, side="right")
        return flat - rows * self.n_cols


class SparseRatingsMatrix(SampleableMatrix):
    """CSR-stored sparse matrix; unlisted entries are exactly zero.

    Same flat cumulative-mass trick as the dense case, applied to the
    stored values only, so sampling cost is independent of the ambient
    column dimension.
    """

    def __init__(self, n_rows: int, n_cols: int, indptr, col_idx, values):
        self._m = int(n_rows)
        self._n = int(n_cols)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.col_idx = np.asarray(col_idx, dtype=np.int64)
        self.data = np.asarray(values, dtype=np.float64)
        if self.indptr.shape != (self._m + 1,):
            raise InvalidInput("indptr must have n_rows + 1 entries")
        if self.data.size == 0 or not np.any(self.data != 0):
            raise DegenerateDistribution("matrix has no nonzero entries")
        self._flat_cum = np.cumsum(np.square(self.data))
        cum0 = np.concatenate(([0.0], self._flat_cum))
        self._row_start_mass = cum0[self.indptr[:-1]]
        self._row_end_mass = cum0[self.indptr[1:]]
        self._row_sq = self._row_end_mass - self._row_start_mass
        self._row_cum = np.cumsum(self._row_sq)
        self._fro2 = float(self._flat_cum[-1])
        self.n_duplicates = 0

    @classmethod
    def from_coo(cls, n_rows, n_cols, rows, cols, values) -> "SparseRatingsMatrix":
        """Build from triplets. Duplicate (row, col) pairs: last write wins."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=np.float64)
        if not (rows.size == cols.size == values.size):
            raise InvalidInput("rows, cols, values must have equal length")
        if rows.size and (rows.min() < 0 or rows.max() >= n_rows
                          or cols.min() < 0 or cols.max() >= n_cols):
            raise InvalidInput("triplet index out of range")
        # stable sort keeps input order within duplicates; keep the last one
        order = np.argsort(rows * n_cols + cols, kind="stable")
        rows, cols, values = rows[order], cols[order], values[order]
        key = rows * n_cols + cols
        keep = np.concatenate((key[1:] != key[:-1], [True]))
        n_duplicates = int(rows.size - keep.sum())
        rows, cols, values = rows[keep], cols[keep], values[keep]
        counts = np.bincount(rows, minlength=n_rows)
        indptr = np.concatenate(([0], np.cumsum(counts)))
        out = cls(n_rows, n_cols, indptr, cols, values)
        out.n_duplicates = n_duplicates
        return out

    @property
    def n_rows(self) -> int:
        return self._m

    @property
    def n_cols(self) -> int:
        return self._n

    @property
    def nnz(self) -> int:
        return self.data.size

    @property
    def frobenius_norm(self) -> float:
        return float(np.sqrt(self._fro2))

    def entry(self, i, j) -> float:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = lo + np.searchsorted(self.col_idx[lo:hi], j)
        if pos < hi and self.col_idx[pos] == j:
            return float(self.data[pos])
        return 0.0

    def row_dense(self, i) -> np.ndarray:
        out = np.zeros(self._n)
        lo, hi = self.indptr[i], self.indptr[i + 1]
        out[self.col_idx[lo:hi]] = self.data[lo:hi]
        return out

    def row_norm(self, i) -> float:
        return float(np.sqrt(self._row_sq[i]))

    def row_norms_sq(self) -> np.ndarray:
        return self._row_sq.copy()

    def submatrix(self, rows, cols) -> np.ndarray:
        cols = np.asarray(cols, dtype=np.int64)
        out = np.zeros((len(rows), cols.size))
        for s, i in enumerate(rows):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            if hi == lo:
                continue
            row_cols = self.col_idx[lo:hi]
            pos = np.searchsorted(row_cols, cols)
            pos_c = np.minimum(pos, hi - lo - 1)
            hit = (pos < hi - lo) & (row_cols[pos_c] == cols)
            out[s, hit] = self.data[lo + pos[hit]]
        return out

    def to_dense(self, size_limit: int = MAX_DENSE_ENTRIES) -> np.ndarray:
        if self._m * self._n > size_limit:
            raise RefusedAtScale(
                f"{self._m}x{self._n} exceeds the dense size limit")
        out = np.zeros((self._m, self._n))
        for i in range(self._m):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.col_idx[lo:hi]] = self.data[lo:hi]
        return out

    def sample_row(self, rng) -> int:
        return int(self.sample_rows(rng, 1)[0])

    def sample_col_in_row(self, i, rng) -> int:
        return int(self.sample_cols_in_rows(np.array([i]), rng)[0])

    def sample_rows(self, rng, size: int) -> np.ndarray:
        target = np.minimum(rng.random(size) * self._fro2,
                            np.nextafter(self._fro2, 0.0))
        return np.searchsorted(self._row_cum, target, side="right")

    def sample_cols_in_rows(self, rows, rng) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.int64)
        mass = self._row_sq[rows]
        if np.any(mass == 0.0):
            raise DegenerateDistribution("sampled a row with no nonzero entries")
        target = np.minimum(self._row_start_mass[rows] + rng.random(rows.size) * mass,
                            _clip_below(self._row_end_mass[rows]))
        flat = np.searchsorted(self._flat_cum, target, side="right")
        return self.col_idx[flat]


class VectorSampler:
    """Length-square sampler over the entries of a vector."""

    def __init__(self, v):
        self.v = np.asarray(v, dtype=np.float64)
        if self.v.ndim != 1 or self.v.size == 0:
            raise InvalidInput("need a non-empty vector")
        self._cum = np.cumsum(np.square(self.v))
        self.norm_sq = float(self._cum[-1])
        if self.norm_sq == 0.0:
            raise DegenerateDistribution("vector is identically zero")

    @property
    def n(self) -> int:
        return self.v.size

    def probabilities(self) -> np.ndarray:
        return np.square(self.v) / self.norm_sq

    def sample_at(self, u: float) -> int:
        target = min(u * self.norm_sq, np.nextafter(self.norm_sq, 0.0))
        return int(np.searchsorted(self._cum, target, side="right"))

    def sample(self, rng) -> int:
        return self.sample_at(rng.random())

    def sample_many(self, rng, size: int) -> np.ndarray:
        target = np.minimum(rng.random(size) * self.norm_sq,
                            np.nextafter(self.norm_sq, 0.0))
        return np.searchsorted(self._cum, target, side="right")
