import numpy as np
import pytest

from sketchsolve import coefficients as co
from sketchsolve import fkv, solution
from sketchsolve.errors import InvalidInput, SamplerStalled
from sketchsolve.matrices import DenseSampleableMatrix
from sketchsolve.metrics import total_variation_distance
from sketchsolve.pipeline import spawn_rng
from sketchsolve.synthetic import gaussian_problem
from conftest import chi_square_pvalue


def dense(values):
    return DenseSampleableMatrix(np.asarray(values, dtype=float))


class TestSolutionEntries:
    def test_diagonal_pseudoinverse_solution(self):
        A = dense(np.diag([3.0, 4.0]))
        sketch = fkv.exhaustive_sketch(A, k=2)
        # exact coefficients for b = (0, 1): lambda = <v_l, A^T b> / sigma^2
        b = np.array([0.0, 1.0])
        lambdas = (sketch.omega.T @ (A.values.T @ b)) / sketch.sigma ** 2
        sol = solution.ImplicitSolution.from_coefficients(sketch, lambdas)
        x = solution.solution_vector(sol, A)
        assert x == pytest.approx([0.0, 0.25], abs=1e-12)

    def test_zero_coefficients_zero_solution(self, rng):
        A = dense(np.eye(3))
        sketch = fkv.build_sketch(A, 3, 3, 2, rng)
        sol = solution.ImplicitSolution.from_coefficients(
            sketch, np.zeros(sketch.n_retained))
        assert np.all(solution.solution_vector(sol, A) == 0)

    def test_entry_matches_vector(self, rng):
        A = dense(rng.standard_normal((12, 9)))
        sketch = fkv.build_sketch(A, 6, 6, 3, rng)
        lambdas = rng.standard_normal(sketch.n_retained)
        sol = solution.ImplicitSolution.from_coefficients(sketch, lambdas)
        full = solution.solution_vector(sol, A)
        for j in (0, 4, 8):
            assert solution.solution_entry(sol, A, j) == pytest.approx(full[j])

    def test_w_recomposition(self, rng):
        A = dense(rng.standard_normal((10, 10)))
        sketch = fkv.build_sketch(A, 5, 5, 3, rng)
        lambdas = rng.standard_normal(sketch.n_retained)
        sol = solution.ImplicitSolution.from_coefficients(sketch, lambdas)
        w_again = sketch.omega @ (lambdas / sketch.sigma)
        assert np.allclose(sol.w, w_again, atol=1e-12)

    def test_coefficient_count_checked(self, rng):
        A = dense(np.eye(3))
        sketch = fkv.build_sketch(A, 3, 3, 2, rng)
        with pytest.raises(InvalidInput):
            solution.ImplicitSolution.from_coefficients(sketch, np.ones(7))

    def test_sampled_pipeline_accuracy_small(self):
        # favorable spectrum draw; documents the stated error level
        p = gaussian_problem(200, 100, 3, 3.0, seed=[555, 4])
        A = dense(p.materialize())
        rng = spawn_rng(777, 4, 3)
        sketch = fkv.build_sketch(A, 80, 80, 3, rng)
        lambdas = np.array([
            co.estimate_lambda_linear(A, p.b, sketch, ell, 10_000, rng).value
            for ell in range(sketch.n_retained)])
        sol = solution.ImplicitSolution.from_coefficients(sketch, lambdas)
        x_tilde = solution.solution_vector(sol, A)
        x = p.exact_solution()
        err = np.median(np.abs(x_tilde - x) / np.abs(x))
        assert err < 0.15


class TestRejectionSampling:
    def test_all_ones_always_accepts(self, rng):
        A = dense(np.ones((4, 4)))
        sketch = fkv.build_sketch(A, 4, 4, 1, rng)
        sol = solution.ImplicitSolution.from_coefficients(sketch, np.ones(1))
        trials = []
        idx = []
        for _ in range(4000):
            j, t = solution.rejection_sample_entry(sol, A, rng)
            idx.append(j)
            trials.append(t)
        assert all(t == 1 for t in trials)
        assert chi_square_pvalue(idx, np.ones(4)) > 0.001

    def test_zero_solution_stalls(self, rng):
        A = dense(np.eye(2))
        sketch = fkv.build_sketch(A, 2, 2, 1, rng)
        sol = solution.ImplicitSolution.from_coefficients(
            sketch, np.zeros(sketch.n_retained))
        with pytest.raises(SamplerStalled):
            solution.rejection_sample_entry(sol, A, rng)

    def test_distribution_and_trial_count(self, rng):
        p = gaussian_problem(60, 50, 3, 2.0, seed=12)
        A = dense(p.materialize())
        sketch = fkv.build_sketch(A, 40, 40, 3, rng)
        lambdas = np.array([
            co.estimate_lambda_linear(A, p.b, sketch, ell, 2000, rng).value
            for ell in range(sketch.n_retained)])
        sol = solution.ImplicitSolution.from_coefficients(sketch, lambdas)
        x_tilde = solution.solution_vector(sol, A)
        target = x_tilde ** 2 / np.sum(x_tilde ** 2)

        n_draws = 30_000
        idx, trials = solution.rejection_sample_entries(sol, A, rng, n_draws)
        emp = np.bincount(idx, minlength=50) / n_draws
        assert total_variation_distance(emp, target) < 0.02

        expected_trials = sol.expected_trials(float(np.sum(x_tilde ** 2)))
        assert abs(trials.mean() / expected_trials - 1.0) < 0.15

    def test_agreement_with_entry_queries(self, rng):
        # sampled frequencies match normalized squares of queried entries
        A = dense(rng.standard_normal((10, 8)))
        sketch = fkv.build_sketch(A, 8, 8, 3, rng)
        lambdas = rng.standard_normal(sketch.n_retained)
        sol = solution.ImplicitSolution.from_coefficients(sketch, lambdas)
        entries = solution.solution_entries(sol, A, np.arange(8))
        idx, _ = solution.rejection_sample_entries(sol, A, rng, 30_000)
        assert chi_square_pvalue(idx, entries ** 2) > 0.001


class TestDirectSolution:
    def test_diagonal_inverse(self):
        res = solution.direct_solution(np.diag([3.0, 4.0]),
                                       b=np.array([1.0, 1.0]), k=2)
        assert res.x == pytest.approx([1 / 3, 1 / 4])

    def test_markowitz_two_by_two(self):
        r, mu = 0.03, 0.05
        A = np.array([[0.0, r], [r, r ** 2]])
        res = solution.direct_solution(A, b=np.array([mu, 0.0]), k=2)
        assert res.x == pytest.approx([-mu, mu / r], abs=1e-10)

    def test_fkv_direct_with_exhaustive_sketch_matches_exact(self):
        for seed in range(5):
            p = gaussian_problem(20, 10, 3, 4.0, seed=[88, seed])
            dense_vals = p.materialize()
            exact = solution.direct_solution(dense_vals, b=p.b, k=3)
            approx = solution.direct_solution(dense_vals, b=p.b, k=3,
                                              method="fkv_direct")
            assert np.allclose(approx.x, exact.x, atol=1e-6, rtol=1e-6)

    def test_recommendation_mode(self):
        vals = np.diag([2.0, 1.0])
        res = solution.direct_solution(vals, user_row=0, k=2)
        assert res.x == pytest.approx(vals[0])  # full-rank projection

    def test_requires_exactly_one_target(self):
        with pytest.raises(InvalidInput):
            solution.direct_solution(np.eye(2), b=np.ones(2), user_row=0, k=1)
        with pytest.raises(InvalidInput):
            solution.direct_solution(np.eye(2), k=1)
