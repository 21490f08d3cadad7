import numpy as np
import pytest

from sketchsolve import fkv
from sketchsolve.errors import InvalidInput
from sketchsolve.synthetic import (GaussianLowRankProblem, HadamardProblem,
                                   gaussian_problem, linear_spectrum,
                                   random_hadamard_problem)
from conftest import chi_square_pvalue


def make_problem(n_bits=4, sigma=(2.0, 1.0), bitstrings=(0, 1),
                 beta=(1.0, 0.5)):
    return HadamardProblem(n_bits=n_bits, sigma=np.array(sigma),
                           bitstrings=np.array(bitstrings, dtype=np.uint64),
                           beta=np.array(beta))


class TestParityEntries:
    def test_constant_matrix_for_zero_bitstring(self):
        p = make_problem(n_bits=3, sigma=(1.0,), bitstrings=(0,), beta=(1.0,))
        for i, j in [(0, 0), (1, 5), (7, 2)]:
            assert p.entry(i, j) == pytest.approx(1 / 8)

    def test_hand_computed_entry(self):
        # strings 00 and 01, sigma (2, 1): y=00, z=01 gives 2 - 1 = 1
        p = make_problem(n_bits=2, sigma=(2.0, 1.0), bitstrings=(0, 1),
                         beta=(1.0, 1.0))
        assert p.entry(0b00, 0b01) == pytest.approx(1 / 4)

    def test_row_norms_equal_and_match_scan(self):
        p = make_problem(n_bits=6, sigma=(3.0, 2.0, 1.0),
                         bitstrings=(5, 9, 33), beta=(1.0, 1.0, 1.0))
        dense = p.to_dense()
        scan_norms = np.linalg.norm(dense, axis=1)
        assert np.allclose(scan_norms, scan_norms[0], atol=1e-12)
        assert p.row_norm(0) == pytest.approx(scan_norms[0])

    def test_row_norms_equal_at_large_n(self):
        p = random_hadamard_problem(20, 3, seed=4)
        rows = np.random.default_rng(0).integers(0, p.dim, size=100)
        norms = {p.row_norm(int(i)) for i in rows}
        assert len(norms) == 1

    def test_frobenius_identities(self):
        p = make_problem(n_bits=5, sigma=(3.0, 1.0), bitstrings=(3, 17),
                         beta=(1.0, 1.0))
        assert p.frobenius_norm == pytest.approx(np.sqrt(10.0))
        assert p.a_norm == pytest.approx(np.sqrt(2 ** p.k * 10.0))
        dense = p.to_dense()
        assert np.linalg.norm(dense) == pytest.approx(p.frobenius_norm)

    def test_distinct_bitstrings_required(self):
        with pytest.raises(InvalidInput):
            make_problem(bitstrings=(3, 3))

    def test_svd_matches_design(self):
        p = make_problem(n_bits=6, sigma=(3.0, 2.0, 1.0),
                         bitstrings=(1, 2, 12), beta=(1.0, 1.0, 1.0))
        dense = p.to_dense()
        U, s, Vt = np.linalg.svd(dense)
        assert np.allclose(s[:3], p.sigma, atol=1e-8)
        assert np.allclose(s[3:], 0.0, atol=1e-8)
        for ell in range(3):
            v_exact = p.exact_v_entries(ell, np.arange(64, dtype=np.uint64))
            overlap = abs(float(Vt[ell] @ v_exact))
            assert overlap == pytest.approx(1.0, abs=1e-6)


class TestHadamardSampling:
    def test_rows_uniform(self, rng):
        p = make_problem(n_bits=2)
        idx = p.sample_rows(rng, 40_000)
        assert chi_square_pvalue(idx, np.ones(4)) > 0.001

    def test_large_n_row_sampling_is_cheap(self, rng):
        p = random_hadamard_problem(50, 3, seed=1)
        idx = p.sample_rows(rng, 1000)
        assert idx.max() < p.dim

    def test_rank_one_columns_uniform(self, rng):
        p = make_problem(n_bits=3, sigma=(2.0,), bitstrings=(5,), beta=(1.0,))
        cols = p.sample_cols_in_rows(p.sample_rows(rng, 30_000), rng)
        assert chi_square_pvalue(cols, np.ones(8)) > 0.001

    def test_columns_match_brute_force_distribution(self, rng):
        p = make_problem(n_bits=4, sigma=(2.0, 1.0), bitstrings=(3, 9),
                         beta=(1.0, 1.0))
        y = 6
        weights = p.to_dense()[y] ** 2
        cols = p.sample_cols_in_rows(np.full(50_000, y, dtype=np.uint64), rng)
        assert chi_square_pvalue(cols, weights) > 0.001

    def test_diagonal_proposal_always_accepted(self):
        p = make_problem(n_bits=4, sigma=(2.0, 1.0), bitstrings=(3, 9),
                         beta=(1.0, 1.0))
        a_diag = p.a_values(np.zeros(1, dtype=np.uint64))[0]
        assert a_diag == pytest.approx(p.sigma.sum())
        assert a_diag ** 2 == pytest.approx(p._max_a_sq)


class TestHadamardSketchFormulas:
    def test_implicit_c_matches_generic(self, rng):
        p = make_problem(n_bits=4, sigma=(3.0, 2.0, 1.0),
                         bitstrings=(1, 6, 11), beta=(1.0, 0.5, 0.2))
        sketch = fkv.build_sketch(p, 12, 10, 3, rng)
        implicit = p.c_matrix(sketch.row_indices, sketch.col_indices)
        assert np.allclose(implicit, sketch.C, atol=1e-10)

    def test_single_entry_form(self, rng):
        p = make_problem(n_bits=4)
        sketch = fkv.build_sketch(p, 6, 5, 2, rng)
        for s, t in [(0, 0), (3, 4), (5, 2)]:
            assert p.c_entry(sketch.row_indices, sketch.col_indices, s, t) \
                == pytest.approx(sketch.C[s, t], abs=1e-12)

    def test_rank_one_constant_c(self, rng):
        p = make_problem(n_bits=5, sigma=(4.0,), bitstrings=(7,), beta=(1.0,))
        sketch = fkv.build_sketch(p, 8, 8, 1, rng)
        expected = 4.0 / np.sqrt(8 * 8)
        assert np.allclose(np.abs(sketch.C), expected, atol=1e-10)


class TestHadamardEstimator:
    def test_rank_one_constant_chi(self, rng):
        p = make_problem(n_bits=5, sigma=(1.0,), bitstrings=(9,), beta=(1.0,))
        sketch = fkv.build_sketch(p, 10, 10, 1, rng)
        est = p.estimate_lambda(0, float(sketch.sigma[0]), 200, rng,
                                n_repetitions=1)
        assert est.value == pytest.approx(1.0, abs=1e-6)
        assert est.empirical_variance == pytest.approx(0.0, abs=1e-12)

    def test_estimator_mean_matches_brute_force(self, rng):
        p = make_problem(n_bits=6, sigma=(3.0, 2.0, 1.0),
                         bitstrings=(4, 22, 41), beta=(2.0, 1.0, 0.5))
        dense = p.to_dense()
        b = p.b_entries(np.arange(64, dtype=np.uint64))
        ell = 1
        v = p.exact_v_entries(ell, np.arange(64, dtype=np.uint64))
        exact = float(v @ (dense.T @ b))
        est = p.estimate_lambda(ell, 1.0, 100_000, rng, n_repetitions=1)
        # with sigma_tilde = 1 the estimate targets <v, A^T b> directly
        sd = np.sqrt(est.empirical_variance / 100_000)
        assert abs(est.value - exact) < 5 * sd

    def test_exact_lambdas_are_beta_over_sigma(self):
        p = make_problem(n_bits=6, sigma=(3.0, 2.0), bitstrings=(4, 22),
                         beta=(2.0, 1.0))
        dense = p.to_dense()
        b = p.b_entries(np.arange(64, dtype=np.uint64))
        x = np.linalg.pinv(dense, rcond=1e-8) @ b
        # project onto exact singular vectors: coefficients beta_l / sigma_l
        for ell in range(2):
            v = p.exact_v_entries(ell, np.arange(64, dtype=np.uint64))
            assert float(x @ v) == pytest.approx(p.exact_lambdas()[ell],
                                                 abs=1e-10)


class TestHadamardExactSolution:
    def test_rank_one_flat_solution(self):
        p = make_problem(n_bits=4, sigma=(1.0,), bitstrings=(0,), beta=(1.0,))
        vals = p.exact_solution_entries(np.arange(16, dtype=np.uint64))
        assert np.allclose(vals, 1 / 4.0)

    def test_matches_dense_pseudoinverse(self):
        p = make_problem(n_bits=6, sigma=(3.0, 2.0, 1.0),
                         bitstrings=(4, 22, 41), beta=(2.0, 1.0, 0.5))
        dense = p.to_dense()
        b = p.b_entries(np.arange(64, dtype=np.uint64))
        x_exact = np.linalg.pinv(dense, rcond=1e-8) @ b
        x_formula = p.exact_solution_entries(np.arange(64, dtype=np.uint64))
        assert np.allclose(x_formula, x_exact, atol=1e-10)

    def test_parseval_norm(self):
        p = make_problem(n_bits=8, sigma=(3.0, 2.0), bitstrings=(100, 200),
                         beta=(0.7, 0.3))
        x = p.exact_solution_entries(np.arange(256, dtype=np.uint64))
        assert np.sum(x ** 2) == pytest.approx(
            np.sum((p.beta / p.sigma) ** 2), rel=1e-12)

    def test_json_round_trip(self):
        p = random_hadamard_problem(30, 4, seed=3)
        q = HadamardProblem.from_json(p.to_json())
        assert q.n_bits == p.n_bits
        assert np.array_equal(q.bitstrings, p.bitstrings)
        assert np.array_equal(q.sigma, p.sigma)
        assert np.array_equal(q.beta, p.beta)


class TestLinearSpectrum:
    def test_condition_number_equals_k(self):
        s = linear_spectrum(5)
        assert s[0] / s[-1] == 5.0
        assert np.all(np.diff(s) < 0)


class TestGaussianProblems:
    def test_two_singular_values_exact(self):
        p = gaussian_problem(50, 30, 2, 5.0, seed=0)
        assert p.sigma[0] / p.sigma[1] == pytest.approx(5.0, rel=1e-12)

    def test_interior_values_inside_interval(self):
        for seed in range(50):
            p = gaussian_problem(20, 15, 5, 5.0, seed=seed)
            assert np.all(p.sigma[1:-1] > p.sigma[-1])
            assert np.all(p.sigma[1:-1] < p.sigma[0])

    def test_factors_orthonormal(self):
        p = gaussian_problem(100, 60, 4, 10.0, seed=5)
        assert np.allclose(p.U.T @ p.U, np.eye(4), atol=1e-10)
        assert np.allclose(p.V @ p.V.T, np.eye(4), atol=1e-10)

    def test_materialized_rank_and_condition(self):
        p = gaussian_problem(80, 50, 4, 7.0, seed=9)
        s = np.linalg.svd(p.materialize(), compute_uv=False)
        assert s[0] / s[3] == pytest.approx(7.0, rel=1e-9)
        assert np.all(s[4:] < 1e-8 * s[0])

    def test_rank_one_needs_unit_condition(self):
        with pytest.raises(InvalidInput):
            gaussian_problem(10, 10, 1, 2.0, seed=0)
        p = gaussian_problem(10, 10, 1, 1.0, seed=0)
        assert len(p.sigma) == 1

    def test_reproducible_from_seed(self):
        p1 = gaussian_problem(30, 20, 3, 4.0, seed=123)
        p2 = gaussian_problem(30, 20, 3, 4.0, seed=123)
        assert np.array_equal(p1.materialize(), p2.materialize())
        assert np.array_equal(p1.b, p2.b)

    def test_sigma_max_in_sampling_interval(self):
        for seed in range(20):
            p = gaussian_problem(10, 8, 2, 2.0, seed=[1, seed])
            assert 1.0 <= p.sigma[0] <= 500.0

    def test_b_lies_in_column_span(self):
        p = gaussian_problem(40, 30, 3, 3.0, seed=2)
        proj = p.U @ (p.U.T @ p.b)
        assert np.allclose(proj, p.b, atol=1e-10)

    def test_exact_solution_solves_system(self):
        p = gaussian_problem(40, 30, 3, 3.0, seed=2)
        x = p.exact_solution()
        assert np.allclose(p.materialize() @ x, p.b, atol=1e-8)
