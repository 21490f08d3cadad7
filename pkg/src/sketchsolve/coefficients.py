"""Monte Carlo estimation of solution-expansion coefficients.

Each coefficient is an inner product lambda = <y, z>. Drawing indices from
the length-square distribution of y and averaging chi_i = y_i z_i / p(i)
gives an unbiased estimator with second moment ||y||^2 ||z||^2, so the
variance of an N-sample mean is (||y||^2 ||z||^2 - lambda^2) / N. More
samples sharpen precision only: any bias inherited from approximate
singular values or vectors stays.

The default aggregation is the median of 10 independent N-sample means,
with a plain mean selectable.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateDistribution, EmptyUserHistory, InvalidInput,
                     NumericalInstability)
from .fkv import FkvSketch, right_singular_entries
from .matrices import SampleableMatrix, VectorSampler


@dataclass
class CoefficientEstimate:
    """An aggregated coefficient estimate with its sampling diagnostics."""

    value: float
    n_samples: int
    empirical_variance: float     # pooled variance of the sampled chi values
    n_repetitions: int
    aggregation: str
    repetition_means: np.ndarray

    @property
    def mean_of_means(self) -> float:
        return float(np.mean(self.repetition_means))

    @property
    def median_of_means(self) -> float:
        return float(np.median(self.repetition_means))


@dataclass
class SampleBudget:
    """Parameters of the sample-count planning formulas."""

    k: int
    kappa: float
    kappa_entry: float   # coefficient-ratio condition number (beta or nu)
    epsilon: float

    def __post_init__(self):
        if min(self.k, self.kappa, self.kappa_entry, self.epsilon) <= 0:
            raise InvalidInput("all budget parameters must be positive")


def aggregate_repetitions(values) -> float:
    """Median of per-repetition estimates."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise InvalidInput("no estimates to aggregate")
    return float(np.median(values))


def _aggregate(rep_means, chis, n_samples, n_repetitions, aggregation):
    if aggregation not in ("median", "mean"):
        raise InvalidInput(f"unknown aggregation {aggregation!r}")
    rep_means = np.asarray(rep_means)
    value = (aggregate_repetitions(rep_means) if aggregation == "median"
             else float(np.mean(rep_means)))
    return CoefficientEstimate(
        value=value, n_samples=n_samples,
        empirical_variance=float(np.var(chis)),
        n_repetitions=n_repetitions, aggregation=aggregation,
        repetition_means=rep_means)


def estimate_inner_product(y, z, n_samples: int, rng,
                           n_repetitions: int = 1,
                           aggregation: str = "mean") -> CoefficientEstimate:
    """Estimate <y, z> by length-square sampling indices of y."""
    if n_samples < 1:
        raise InvalidInput("need at least one sample")
    sampler = y if isinstance(y, VectorSampler) else VectorSampler(y)
    z = np.asarray(z, dtype=np.float64)
    rep_means = []
    chis = []
    for _ in range(n_repetitions):
        idx = sampler.sample_many(rng, n_samples)
        chi = sampler.norm_sq * z[idx] / sampler.v[idx]
        rep_means.append(chi.mean())
        chis.append(chi)
    return _aggregate(rep_means, np.concatenate(chis), n_samples,
                      n_repetitions, aggregation)


def _sigma_for(sketch: FkvSketch, ell: int) -> float:
    if not 0 <= ell < sketch.n_retained:
        raise NumericalInstability(
            f"singular value {ell} below retention threshold "
            f"(sketch kept {sketch.n_retained})")
    return float(sketch.sigma[ell])


def estimate_lambda_linear(A: SampleableMatrix, b, sketch: FkvSketch,
                           ell: int, n_samples: int, rng,
                           n_repetitions: int = 10,
                           aggregation: str = "median") -> CoefficientEstimate:
    """Estimate lambda_l = <v_l, A^T b> / sigma_l^2 for a linear system.

    Entries (i, j) are drawn with probability A_ij^2 / ||A||_F^2 and
    chi = ||A||_F^2 * b_i * v_l(j) / (A_ij * sigma_l^2), with v_l(j)
    evaluated through the sketch at O(r) cost per sampled column.
    ``b`` may be an array or a callable mapping index arrays to values.
    """
    sig = _sigma_for(sketch, ell)
    fro2 = sketch.frobenius_norm ** 2
    b_at = b if callable(b) else np.asarray(b, dtype=np.float64).__getitem__
    rep_means = []
    chis = []
    for _ in range(n_repetitions):
        i = A.sample_rows(rng, n_samples)
        j = A.sample_cols_in_rows(i, rng)
        a_ij = A.entries(i, j)
        if np.any(a_ij == 0.0):
            # length-square sampling puts zero mass on zero entries
            raise DegenerateDistribution("sampled a zero entry")
        uj, inv = np.unique(j, return_inverse=True)
        v_j = right_singular_entries(sketch, A, ell, uj)[inv]
        chi = fro2 * b_at(i) * v_j / (a_ij * sig ** 2)
        rep_means.append(chi.mean())
        chis.append(chi)
    return _aggregate(rep_means, np.concatenate(chis), n_samples,
                      n_repetitions, aggregation)


def estimate_lambda_recommendation(A: SampleableMatrix, user: int,
                                   sketch: FkvSketch, ell: int,
                                   n_samples: int, rng,
                                   n_repetitions: int = 10,
                                   aggregation: str = "median") -> CoefficientEstimate:
    """Estimate lambda_l = <A_user, v_l> by sampling within the user's row."""
    _sigma_for(sketch, ell)
    row_sq = A.row_norm(user) ** 2
    if row_sq == 0.0:
        raise EmptyUserHistory(f"user row {user} has no ratings")
    rows = np.full(n_samples, user, dtype=np.int64)
    rep_means = []
    chis = []
    for _ in range(n_repetitions):
        j = A.sample_cols_in_rows(rows, rng)
        a_uj = A.entries(rows, j)
        uj, inv = np.unique(j, return_inverse=True)
        v_j = right_singular_entries(sketch, A, ell, uj)[inv]
        chi = row_sq * v_j / a_uj
        rep_means.append(chi.mean())
        chis.append(chi)
    return _aggregate(rep_means, np.concatenate(chis), n_samples,
                      n_repetitions, aggregation)


def required_samples(budget: SampleBudget, problem: str) -> int:
    """Order-of-magnitude sample budget with unit constant.

    ``linear``: k^2 kappa^2 kappa_beta^2 / eps^2.
    ``recommendation``: k kappa_nu^2 / eps^2.
    A planning heuristic only; the hidden constant is taken as 1.
    """
    if problem == "linear":
        n = (budget.k ** 2 * budget.kappa ** 2 * budget.kappa_entry ** 2
             / budget.epsilon ** 2)
    elif problem == "recommendation":
        n = budget.k * budget.kappa_entry ** 2 / budget.epsilon ** 2
    else:
        raise InvalidInput(f"unknown problem kind {problem!r}")
    return int(math.ceil(n))
