"""Implicit solution vectors: entry queries, rejection sampling, baselines.

The approximate solution never exists as a dense vector. It is carried as
x = R^T w with w = sum_l (lambda_l / sigma_l) omega_l over the sketch's
rows, so single entries cost O(r) queries and length-square sampling of
entries works by rejection against per-column quantities that are
recomputed on the fly (caching them for all n columns would forfeit the
sublinear memory footprint the representation exists for).
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import (InternalInvariantViolation, InvalidInput, RefusedAtScale,
                     SamplerStalled)
from .fkv import FkvSketch, exhaustive_sketch, right_singular_vectors
from .matrices import MAX_DENSE_ENTRIES, SampleableMatrix

REJECTION_TRIAL_CAP = 10 ** 6


@dataclass
class ImplicitSolution:
    """x = R^T w for a sketch and estimated expansion coefficients."""

    sketch: FkvSketch
    lambdas: np.ndarray
    w: np.ndarray

    @classmethod
    def from_coefficients(cls, sketch: FkvSketch, lambdas) -> "ImplicitSolution":
        lambdas = np.asarray(lambdas, dtype=np.float64)
        if lambdas.shape != sketch.sigma.shape:
            raise InvalidInput("need one coefficient per retained singular value")
        w = sketch.omega @ (lambdas / sketch.sigma)
        return cls(sketch=sketch, lambdas=lambdas, w=w)

    @property
    def norm_w(self) -> float:
        return float(np.linalg.norm(self.w))

    def expected_trials(self, x_norm_sq: float) -> float:
        """Expected rejection-sampler proposals per accepted index.

        This is the classic count r ||w||^2 / ||x||^2 stated for a sketch
        whose rows are unit-normalized. The rows here carry norm
        ||A||_F / sqrt(r) instead, so w picks up the factor
        ||A||_F / sqrt(r) when re-expressed in that frame and the count
        becomes ||A||_F^2 ||w||^2 / ||x||^2. The acceptance ratio itself is
        a squared cosine and does not depend on the frame.
        """
        return float(self.sketch.frobenius_norm ** 2 * (self.w @ self.w)
                     / x_norm_sq)


def solution_entries(sol: ImplicitSolution, A: SampleableMatrix, cols) -> np.ndarray:
    """x_j = sum_s row_scales[s] * A[i_s, j] * w[s] for each requested j."""
    sub = A.submatrix(sol.sketch.row_indices, cols)
    return (sol.sketch.row_scales * sol.w) @ sub


def solution_entry(sol: ImplicitSolution, A: SampleableMatrix, j) -> float:
    return float(solution_entries(sol, A, [j])[0])


def solution_vector(sol: ImplicitSolution, A: SampleableMatrix,
                    size_limit: int = MAX_DENSE_ENTRIES) -> np.ndarray:
    """All n entries at once; the O(kn) direct-calculation route."""
    if A.n_cols * sol.sketch.r > size_limit:
        raise RefusedAtScale("solution vector too large to materialize")
    return solution_entries(sol, A, np.arange(A.n_cols))


def rejection_sample_entry(sol: ImplicitSolution, A: SampleableMatrix, rng,
                           max_trials: int = REJECTION_TRIAL_CAP):
    """Draw a column index j with probability x_j^2 / ||x||^2.

    Proposes j by picking a sketch row uniformly and length-square sampling
    within it, then accepts with probability
    <w, R_col_j>^2 / (||R_col_j||^2 ||w||^2), which Cauchy-Schwarz bounds
    by one. Returns ``(j, n_trials)``. Expected trials are
    r ||w||^2 / ||x||^2.
    """
    sketch = sol.sketch
    w = sol.w
    w_norm_sq = float(w @ w)
    if w_norm_sq == 0.0:
        raise SamplerStalled("implicit solution is identically zero")
    rows = sketch.row_indices
    scales = sketch.row_scales
    for trial in range(1, max_trials + 1):
        s = int(rng.integers(sketch.r))
        j = A.sample_col_in_row(rows[s], rng)
        col = scales * A.entries(rows, np.full(sketch.r, j))
        col_norm_sq = float(col @ col)
        dot = float(col @ w)
        accept = dot * dot / (col_norm_sq * w_norm_sq)
        if accept > 1.0 + 1e-9:
            raise InternalInvariantViolation(
                f"acceptance probability {accept} exceeds 1")
        if rng.random() < min(accept, 1.0):
            return j, trial
    raise SamplerStalled(f"no acceptance within {max_trials} trials")


def rejection_sample_entries(sol: ImplicitSolution, A: SampleableMatrix, rng,
                             size: int, max_trials: int = REJECTION_TRIAL_CAP):
    """Draw ``size`` independent entry indices; returns (indices, trials)."""
    idx = np.empty(size, dtype=np.int64)
    trials = np.empty(size, dtype=np.int64)
    for t in range(size):
        idx[t], trials[t] = rejection_sample_entry(sol, A, rng, max_trials)
    return idx, trials


@dataclass
class DirectSolveResult:
    """Full solution vector from a direct (non-sampling) calculation."""

    x: np.ndarray
    sigma: np.ndarray
    lambdas: np.ndarray
    seconds_svd: float
    seconds_coeffs: float
    seconds_solution: float


def direct_solution(A, b=None, user_row=None, k: int = 10,
                    method: str = "exact_svd", sketch: FkvSketch = None,
                    size_limit: int = MAX_DENSE_ENTRIES) -> DirectSolveResult:
    """O(kn) baseline: expand the solution directly in singular vectors.

    ``exact_svd`` decomposes the dense matrix; ``fkv_direct`` uses the
    sketch's approximate singular values and vectors with no Monte Carlo.
    Exactly one of ``b`` (linear system) or ``user_row`` (recommendation)
    selects the coefficient rule.
    """
    if (b is None) == (user_row is None):
        raise InvalidInput("pass exactly one of b or user_row")
    dense = A.to_dense(size_limit) if isinstance(A, SampleableMatrix) \
        else np.asarray(A, dtype=np.float64)
    if dense.size > size_limit:
        raise RefusedAtScale("matrix exceeds the dense size limit")

    t0 = time.perf_counter()
    if method == "exact_svd":
        _, s, vt = np.linalg.svd(dense, full_matrices=False)
        kk = min(k, np.count_nonzero(s > s[0] * 1e-12))
        sigma = s[:kk]
        V = vt[:kk].T
    elif method == "fkv_direct":
        if sketch is None:
            sketch = exhaustive_sketch(
                DenseView(dense) if not isinstance(A, SampleableMatrix) else A,
                k, size_limit)
        sigma = sketch.sigma
        src = A if isinstance(A, SampleableMatrix) else DenseView(dense)
        V = right_singular_vectors(sketch, src, size_limit)
    else:
        raise InvalidInput(f"unknown method {method!r}")
    t_svd = time.perf_counter() - t0

    t0 = time.perf_counter()
    if b is not None:
        atb = dense.T @ np.asarray(b, dtype=np.float64)
        lambdas = (V.T @ atb) / sigma ** 2
    else:
        lambdas = V.T @ dense[user_row]
    t_coeffs = time.perf_counter() - t0

    t0 = time.perf_counter()
    x = V @ lambdas
    t_sol = time.perf_counter() - t0
    return DirectSolveResult(x=x, sigma=sigma, lambdas=lambdas,
                             seconds_svd=t_svd, seconds_coeffs=t_coeffs,
                             seconds_solution=t_sol)


class DenseView(SampleableMatrix):
    """Minimal read-only adapter so plain arrays fit the access interface."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    @property
    def frobenius_norm(self):
        return float(np.linalg.norm(self.values))

    def entry(self, i, j):
        return float(self.values[i, j])

    def entries(self, rows, cols):
        return self.values[np.asarray(rows), np.asarray(cols)]

    def submatrix(self, rows, cols):
        return self.values[np.ix_(np.asarray(rows), np.asarray(cols))]

    def to_dense(self, size_limit: int = MAX_DENSE_ENTRIES):
        return self.values

    def row_norm(self, i):
        return float(np.linalg.norm(self.values[i]))

    def sample_row(self, rng):
        raise InvalidInput("DenseView does not support sampling")

    def sample_col_in_row(self, i, rng):
        raise InvalidInput("DenseView does not support sampling")
