"""Movie recommendation from a sparse ratings matrix.

Ratings load into a users-by-movies `SparseRatingsMatrix` where zero means
unrated. Predicting for user i targets the i-th row of the rank-k
approximation of the matrix; unrated movies are then ranked by predicted
value. Evaluation is reconstruction-based against the exact rank-k
baseline, not held-out rating prediction.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyUserHistory, InvalidInput
from .matrices import SparseRatingsMatrix
from .pipeline import SolverParams, run_direct, run_sampled_recommendation

RATING_MIN = 0.5
RATING_MAX = 5.0


@dataclass
class PreferenceMatrix:
    """Sparse ratings with dense re-indexing of the original ids."""

    matrix: SparseRatingsMatrix
    user_ids: np.ndarray       # original id for each row
    movie_ids: np.ndarray      # original id for each column
    n_rejected: int = 0
    rejected_examples: list = field(default_factory=list)

    @property
    def n_duplicates(self) -> int:
        return self.matrix.n_duplicates


def load_movielens(ratings_path) -> PreferenceMatrix:
    """Read a ``userId,movieId,rating,timestamp`` CSV.

    Ratings outside [0.5, 5] are rejected and counted; duplicate
    (user, movie) pairs keep the last row. Users and movies are re-indexed
    densely in sorted id order.
    """
    users, movies, ratings = [], [], []
    n_rejected = 0
    examples = []
    with open(ratings_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"userId", "movieId", "rating"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise InvalidInput(f"expected header with {sorted(required)}")
        for row in reader:
            try:
                u = int(row["userId"])
                m = int(row["movieId"])
                val = float(row["rating"])
            except (TypeError, ValueError):
                n_rejected += 1
                if len(examples) < 5:
                    examples.append(dict(row))
                continue
            if not RATING_MIN <= val <= RATING_MAX:
                n_rejected += 1
                if len(examples) < 5:
                    examples.append(dict(row))
                continue
            users.append(u)
            movies.append(m)
            ratings.append(val)
    if not ratings:
        raise InvalidInput("no valid rating rows")
    user_ids, user_rows = np.unique(users, return_inverse=True)
    movie_ids, movie_cols = np.unique(movies, return_inverse=True)
    matrix = SparseRatingsMatrix.from_coo(
        len(user_ids), len(movie_ids), user_rows, movie_cols, ratings)
    return PreferenceMatrix(matrix=matrix, user_ids=user_ids,
                            movie_ids=movie_ids, n_rejected=n_rejected,
                            rejected_examples=examples)


@dataclass
class RecommendationResult:
    user: int
    predicted_row: np.ndarray       # sampled pipeline, original column order
    baseline_row: np.ndarray        # exact rank-k projection
    recommended: list               # (movie_id, predicted value), unrated only
    baseline_recommended: list
    run: object                     # SampledRun
    baseline: object                # DirectRun


def _rank_unrated(row_values, rated_cols, movie_ids, top_n):
    mask = np.ones(row_values.size, dtype=bool)
    mask[rated_cols] = False
    cand = np.flatnonzero(mask)
    order = cand[np.argsort(row_values[cand])[::-1][:top_n]]
    return [(int(movie_ids[j]), float(row_values[j])) for j in order]


def recommend(prefs: PreferenceMatrix, user: int, params: SolverParams, rng,
              top_n: int = 10,
              sample_solution: bool = True) -> RecommendationResult:
    """Predict user's full preference row and rank the unrated movies.

    Runs the sampled pipeline and the exact rank-k baseline; both rankings
    are returned for comparison.
    """
    A = prefs.matrix
    if not 0 <= user < A.n_rows:
        raise InvalidInput(f"user index {user} out of range")
    if A.row_norm(user) == 0.0:
        raise EmptyUserHistory(f"user {user} has no ratings")
    run = run_sampled_recommendation(lambda: A, user, params, rng,
                                     sample_solution=sample_solution)
    predicted = run.solution_vector()
    baseline = run_direct(A, user_row=user, k=params.k)

    lo, hi = A.indptr[user], A.indptr[user + 1]
    rated_cols = A.col_idx[lo:hi]
    recommended = _rank_unrated(predicted, rated_cols, prefs.movie_ids, top_n)
    baseline_recommended = _rank_unrated(baseline.x, rated_cols,
                                         prefs.movie_ids, top_n)
    return RecommendationResult(user=user, predicted_row=predicted,
                                baseline_row=baseline.x,
                                recommended=recommended,
                                baseline_recommended=baseline_recommended,
                                run=run, baseline=baseline)


def synthetic_ratings(n_users: int, n_movies: int, nnz: int, rank: int,
                      seed) -> PreferenceMatrix:
    """Low-rank-plus-noise sparse ratings for tests without the real dataset."""
    rng = np.random.default_rng(seed)
    U = np.abs(rng.standard_normal((n_users, rank)))
    V = np.abs(rng.standard_normal((rank, n_movies)))
    flat = rng.choice(n_users * n_movies, size=nnz, replace=False)
    rows, cols = np.divmod(flat, n_movies)
    dense_vals = np.einsum("ik,ki->i", U[rows], V[:, cols])
    scale = (RATING_MAX - RATING_MIN) / dense_vals.max()
    vals = np.clip(np.round(2 * (RATING_MIN + dense_vals * scale)) / 2,
                   RATING_MIN, RATING_MAX)
    matrix = SparseRatingsMatrix.from_coo(n_users, n_movies, rows, cols, vals)
    return PreferenceMatrix(matrix=matrix,
                            user_ids=np.arange(1, n_users + 1),
                            movie_ids=np.arange(1, n_movies + 1))
