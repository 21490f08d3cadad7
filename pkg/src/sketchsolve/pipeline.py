"""End-to-end solver runs with per-phase wall-clock accounting.

A sampled run mirrors the three algorithm stages (sketch SVD, Monte Carlo
coefficients, solution access) plus the one-off cost of building the
length-square access structures. The direct baseline decomposes the dense
matrix and computes coefficients and the full solution without sampling.
Reported totals are the sum of the phase timings.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import coefficients as coeffs
from . import fkv, solution
from .matrices import SampleableMatrix


@dataclass
class SolverParams:
    """Knobs for one sampled solve."""

    r: int
    c: int
    k: int
    n_coeff_samples: int = 10_000
    n_coeff_repetitions: int = 10
    aggregation: str = "median"
    n_solution_samples: int = 500
    rejection_cap: int = solution.REJECTION_TRIAL_CAP


@dataclass
class PhaseTimings:
    ls: float = 0.0
    svd_c: float = 0.0
    coeff: float = 0.0
    solution: float = 0.0

    @property
    def total(self) -> float:
        return self.ls + self.svd_c + self.coeff + self.solution


@dataclass
class SampledRun:
    """Everything a sampled solve produced."""

    matrix: SampleableMatrix
    sketch: fkv.FkvSketch
    estimates: list
    lambdas: np.ndarray
    implicit: solution.ImplicitSolution
    sampled_indices: np.ndarray
    sampled_trials: np.ndarray
    timings: PhaseTimings = field(default_factory=PhaseTimings)

    def solution_vector(self, size_limit=None) -> np.ndarray:
        kwargs = {} if size_limit is None else {"size_limit": size_limit}
        return solution.solution_vector(self.implicit, self.matrix, **kwargs)


def _estimate_all(estimate_one, n_retained, params):
    estimates = [estimate_one(ell) for ell in range(n_retained)]
    lambdas = np.array([e.value for e in estimates])
    return estimates, lambdas


def _finish_run(A, sketch, estimates, lambdas, params, rng, timings,
                sample_solution=True):
    t0 = time.perf_counter()
    implicit = solution.ImplicitSolution.from_coefficients(sketch, lambdas)
    if sample_solution and params.n_solution_samples > 0:
        idx, trials = solution.rejection_sample_entries(
            implicit, A, rng, params.n_solution_samples, params.rejection_cap)
    else:
        idx = np.empty(0, dtype=np.int64)
        trials = np.empty(0, dtype=np.int64)
    timings.solution = time.perf_counter() - t0
    return SampledRun(matrix=A, sketch=sketch, estimates=estimates,
                      lambdas=lambdas, implicit=implicit, sampled_indices=idx,
                      sampled_trials=trials, timings=timings)


def run_sampled_linear(matrix_factory, b, params: SolverParams, rng,
                       sample_solution: bool = True) -> SampledRun:
    """Sampled pipeline for A x = b.

    ``matrix_factory`` is a zero-argument callable building the
    SampleableMatrix; its run time is booked as the length-square
    construction phase. ``b`` is an array or an index-vectorized callable.
    """
    timings = PhaseTimings()
    t0 = time.perf_counter()
    A = matrix_factory()
    timings.ls = time.perf_counter() - t0

    t0 = time.perf_counter()
    sketch = fkv.build_sketch(A, params.r, params.c, params.k, rng)
    timings.svd_c = time.perf_counter() - t0

    t0 = time.perf_counter()
    estimates, lambdas = _estimate_all(
        lambda ell: coeffs.estimate_lambda_linear(
            A, b, sketch, ell, params.n_coeff_samples, rng,
            params.n_coeff_repetitions, params.aggregation),
        sketch.n_retained, params)
    timings.coeff = time.perf_counter() - t0
    return _finish_run(A, sketch, estimates, lambdas, params, rng, timings,
                       sample_solution)


def run_sampled_recommendation(matrix_factory, user: int,
                               params: SolverParams, rng,
                               sample_solution: bool = True) -> SampledRun:
    """Sampled pipeline for predicting one user's preference row."""
    timings = PhaseTimings()
    t0 = time.perf_counter()
    A = matrix_factory()
    timings.ls = time.perf_counter() - t0

    t0 = time.perf_counter()
    sketch = fkv.build_sketch(A, params.r, params.c, params.k, rng)
    timings.svd_c = time.perf_counter() - t0

    t0 = time.perf_counter()
    estimates, lambdas = _estimate_all(
        lambda ell: coeffs.estimate_lambda_recommendation(
            A, user, sketch, ell, params.n_coeff_samples, rng,
            params.n_coeff_repetitions, params.aggregation),
        sketch.n_retained, params)
    timings.coeff = time.perf_counter() - t0
    return _finish_run(A, sketch, estimates, lambdas, params, rng, timings,
                       sample_solution)


@dataclass
class DirectTimings:
    svd_a: float = 0.0
    coeff: float = 0.0
    solution: float = 0.0

    @property
    def total(self) -> float:
        return self.svd_a + self.coeff + self.solution


@dataclass
class DirectRun:
    x: np.ndarray
    sigma: np.ndarray
    lambdas: np.ndarray
    timings: DirectTimings


def run_direct(A, b=None, user_row=None, k: int = 10,
               size_limit=None) -> DirectRun:
    """Timed exact-SVD baseline producing the full solution vector."""
    kwargs = {} if size_limit is None else {"size_limit": size_limit}
    res = solution.direct_solution(A, b=b, user_row=user_row, k=k,
                                   method="exact_svd", **kwargs)
    return DirectRun(x=res.x, sigma=res.sigma, lambdas=res.lambdas,
                     timings=DirectTimings(svd_a=res.seconds_svd,
                                           coeff=res.seconds_coeffs,
                                           solution=res.seconds_solution))


def spawn_rng(seed, *key) -> np.random.Generator:
    """Independent generator for (seed, key...) so repetitions are replayable
    regardless of execution order."""
    return np.random.default_rng(np.random.SeedSequence(
        entropy=seed, spawn_key=tuple(int(x) for x in key)))
