"""Experiment runners behind the CLI: error and runtime studies.

Every study fixes a problem instance, repeats the sampled algorithm with
per-repetition derived seeds, and scores each repetition against exact
references truncated at the working rank. Rows come back as plain dicts
ready for CSV emission; summary statistics (mean and standard deviation)
are taken across repetitions.

Sign handling: an approximate right singular vector and its estimated
coefficient form a pair that is only defined up to a joint sign flip, and
the assembled solution is invariant under that flip. Before componentwise
comparison with exact references the pair is aligned to the exact vector's
sign.
"""

import hashlib
import platform
import time
from dataclasses import asdict

import numpy as np

from . import __version__
from . import coefficients as coeffs
from . import fkv, solution
from .matrices import DenseSampleableMatrix
from .metrics import (ErrorReport, frobenius_relative_error,
                      relative_error_vector, vector_error_up_to_sign)
from .pipeline import SolverParams, run_direct, run_sampled_linear, \
    run_sampled_recommendation, spawn_rng
from .sampling import sampling_benchmark
from .synthetic import gaussian_problem, random_hadamard_problem


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_metadata(config: dict, seed, datasets: dict = None) -> dict:
    """Replay record written next to every result file."""
    return {
        "config": config,
        "seed": seed,
        "code_version": __version__,
        "platform": platform.platform(),
        "python": platform.python_version(),
        "started_unix": time.time(),
        "datasets": datasets or {},
    }


def _align_signs(lambdas, v_tilde, v_exact):
    """Flip each (coefficient, vector) pair to match the exact vector's sign."""
    signs = np.sign(np.einsum("nk,nk->k", v_tilde, v_exact))
    signs[signs == 0] = 1.0
    return lambdas * signs, v_tilde * signs


def _eta(exact, approx, mode="mean"):
    kk = min(len(exact), len(approx))
    return relative_error_vector(exact[:kk], approx[:kk], mode=mode)


# --------------------------------------------------------------------------
# Sampling backend benchmark
# --------------------------------------------------------------------------

def run_sample_bench(dims, n_samples=1000, seed=0, repeats=3, trace=None):
    rows = sampling_benchmark(dims, n_samples=n_samples, seed=seed,
                              repeats=repeats, trace=trace)
    return [asdict(r) for r in rows]


# --------------------------------------------------------------------------
# High-dimensional implicit problems
# --------------------------------------------------------------------------

def run_highdim(n_bits: int, k: int, r: int, c: int,
                n_coeff_samples: int = 10_000, first_l: int = 100,
                n_repetitions: int = 10, seed: int = 0, sigma=None, beta=None,
                inner_repetitions: int = 10, aggregation: str = "median",
                use_exact_v: bool = False):
    """Sketch + estimate + score on an implicit 2^n_bits matrix.

    Scores the first ``first_l`` vector entries against the closed-form
    references, which is what makes dimensions like 2^50 tractable. With
    ``use_exact_v`` the coefficient sampler uses the exact parity factor in
    place of the sketch entry (cheaper, but needs the construction).
    """
    problem = random_hadamard_problem(n_bits, k, [seed, 7919], sigma, beta)
    exact_sigma = problem.sigma
    exact_lambda = problem.exact_lambdas()
    cols = np.arange(first_l, dtype=np.uint64)
    exact_v = np.stack([problem.exact_v_entries(ell, cols)
                        for ell in range(k)], axis=1)
    exact_x = problem.exact_solution_entries(cols)

    rows = []
    report = ErrorReport(n_repetitions=n_repetitions, first_l=first_l)
    per = {name: [] for name in
           ("eta_sigma", "eta_v", "eta_lambda", "eta_x", "t_svd_c",
            "t_lambda", "seconds")}
    for rep in range(n_repetitions):
        rng = spawn_rng(seed, rep)
        t_start = time.perf_counter()
        t0 = time.perf_counter()
        sketch = fkv.build_sketch(problem, r, c, k, rng)
        t_svd_c = time.perf_counter() - t0
        kret = sketch.n_retained

        t0 = time.perf_counter()
        if use_exact_v:
            lambdas = np.array([
                problem.estimate_lambda(ell, sketch.sigma[ell],
                                        n_coeff_samples, rng,
                                        inner_repetitions, aggregation).value
                for ell in range(kret)])
        else:
            lambdas = np.array([
                coeffs.estimate_lambda_linear(
                    problem, problem.b_entries, sketch, ell, n_coeff_samples,
                    rng, inner_repetitions, aggregation).value
                for ell in range(kret)])
        t_lambda = time.perf_counter() - t0

        v_tilde = np.stack([fkv.right_singular_entries(sketch, problem, ell, cols)
                            for ell in range(kret)], axis=1)
        if use_exact_v:
            # estimates target the exact vectors, so they already carry the
            # exact sign frame; flip only the sketch vectors to match it
            signs = np.sign(np.einsum("nk,nk->k", v_tilde, exact_v[:, :kret]))
            signs[signs == 0] = 1.0
            v_tilde = v_tilde * signs
            lam_cmp, v_cmp = lambdas, v_tilde
        else:
            lam_cmp, v_cmp = _align_signs(lambdas, v_tilde,
                                          exact_v[:, :kret])
        x_tilde = v_tilde @ lambdas

        row = {
            "rep": rep, "n_bits": n_bits, "k": k, "r": r, "c": c,
            "N": n_coeff_samples, "L": first_l, "k_retained": kret,
            "eta_sigma": _eta(exact_sigma, sketch.sigma),
            "eta_v": vector_error_up_to_sign(exact_v[:, :kret], v_cmp),
            "eta_lambda": _eta(exact_lambda, lam_cmp),
            "eta_x": relative_error_vector(exact_x, x_tilde, mode="mean"),
            "t_svd_c": t_svd_c, "t_lambda": t_lambda,
            "seconds": time.perf_counter() - t_start,
        }
        rows.append(row)
        for name in per:
            per[name].append(row[name])
    for name, vals in per.items():
        report.add(name, vals)
    return rows, report, problem


# --------------------------------------------------------------------------
# Gaussian random matrices
# --------------------------------------------------------------------------

def run_random_point(m: int, n: int, k: int, kappa: float, r: int, c: int,
                     n_coeff_samples: int = 10_000, n_repetitions: int = 10,
                     seed: int = 0, point_key: int = 0,
                     n_solution_samples: int = 0,
                     inner_repetitions: int = 10, aggregation: str = "median",
                     compute=("sigma", "A", "Aplus", "lambda", "x"),
                     new_problem_each_rep: bool = False, problem_seed=None):
    """One (rank, condition number, sketch size) point of the random study."""
    def make_problem(key):
        if problem_seed is not None and not new_problem_each_rep:
            return gaussian_problem(m, n, k, kappa, seed=problem_seed)
        return gaussian_problem(m, n, k, kappa, seed=[seed, 104729, point_key, key])

    problem = make_problem(0)
    dense = problem.materialize()
    baseline = run_direct(dense, b=problem.b, k=k)
    exact_pinv = (problem.V.T / problem.sigma[None, :]) @ problem.U.T \
        if ("Aplus" in compute) else None

    params = SolverParams(r=r, c=c, k=k, n_coeff_samples=n_coeff_samples,
                          n_coeff_repetitions=inner_repetitions,
                          aggregation=aggregation,
                          n_solution_samples=n_solution_samples)
    rows = []
    for rep in range(n_repetitions):
        if new_problem_each_rep and rep > 0:
            problem = make_problem(rep)
            dense = problem.materialize()
        rng = spawn_rng(seed, point_key, rep)
        need_lambdas = not {"lambda", "x"}.isdisjoint(compute)
        if need_lambdas:
            run = run_sampled_linear(lambda: DenseSampleableMatrix(dense),
                                     problem.b, params, rng,
                                     sample_solution=n_solution_samples > 0)
            sketch = run.sketch
            t_ls, t_svd_c = run.timings.ls, run.timings.svd_c
            t_lambda, t_x = run.timings.coeff, run.timings.solution
        else:
            t0 = time.perf_counter()
            A = DenseSampleableMatrix(dense)
            t_ls = time.perf_counter() - t0
            t0 = time.perf_counter()
            sketch = fkv.build_sketch(A, r, c, k, rng)
            t_svd_c = time.perf_counter() - t0
            run = None
            t_lambda = t_x = 0.0
        kret = sketch.n_retained

        row = {"rep": rep, "m": m, "n": n, "k": k, "kappa": kappa,
               "r": r, "c": c, "N": n_coeff_samples, "k_retained": kret,
               "t_ls": t_ls, "t_svd_c": t_svd_c, "t_lambda": t_lambda,
               "t_x": t_x,
               "t_total": t_ls + t_svd_c + t_lambda + t_x,
               "t_svd_a_direct": baseline.timings.svd_a,
               "t_lambda_direct": baseline.timings.coeff,
               "t_x_direct": baseline.timings.solution,
               "t_total_direct": baseline.timings.total}
        if "sigma" in compute:
            row["eta_sigma"] = _eta(problem.sigma, sketch.sigma)
        src = run.matrix if run is not None else A
        if "A" in compute:
            row["eta_A"] = frobenius_relative_error(
                dense, fkv.reconstruct(sketch, src, "matrix"))
        if "Aplus" in compute:
            row["eta_A_plus"] = frobenius_relative_error(
                exact_pinv, fkv.reconstruct(sketch, src, "pseudoinverse"))
        if need_lambdas:
            v_tilde = fkv.right_singular_vectors(sketch, run.matrix)
            lam_cmp, _ = _align_signs(run.lambdas, v_tilde,
                                      problem.V.T[:, :kret])
            if "lambda" in compute:
                row["eta_lambda"] = _eta(problem.exact_lambdas(), lam_cmp)
            if "x" in compute:
                x_tilde = v_tilde @ run.lambdas
                row["eta_x_median"] = relative_error_vector(
                    problem.exact_solution(), x_tilde, mode="median")
            if n_solution_samples > 0:
                row["mean_trials"] = float(run.sampled_trials.mean())
        rows.append(row)
    return rows, problem


def summarize_rows(rows, keys=None) -> dict:
    """Mean and std over repetitions for every numeric metric column."""
    if not rows:
        return {}
    out = {}
    names = keys or [k for k, v in rows[0].items()
                     if isinstance(v, (int, float)) and k != "rep"]
    for name in names:
        vals = np.array([row[name] for row in rows if name in row], dtype=float)
        if vals.size:
            out[f"{name}_mean"] = float(vals.mean())
            out[f"{name}_std"] = float(vals.std())
    return out


# --------------------------------------------------------------------------
# Applications: shared scorer
# --------------------------------------------------------------------------

def score_app_run(run, dense, k, exact=None, n_first_sigma: int = 10):
    """Metrics for one sampled run against rank-k exact references.

    ``exact`` caches the dense SVD across repetitions:
    pass the dict returned by `exact_references`.
    """
    if exact is None:
        exact = exact_references(dense, k)
    sketch = run.sketch
    kret = sketch.n_retained
    v_tilde = fkv.right_singular_vectors(sketch, run.matrix)
    lam_cmp, _ = _align_signs(run.lambdas, v_tilde, exact["V"][:, :kret])
    x_tilde = v_tilde @ run.lambdas
    row = {
        "k_retained": kret,
        "eta_sigma": _eta(exact["sigma"], sketch.sigma),
        "eta_lambda": _eta(exact["lambda"], lam_cmp),
        "eta_x_median": relative_error_vector(exact["x"], x_tilde,
                                              mode="median"),
        "eta_A": frobenius_relative_error(
            exact["A_k"], fkv.reconstruct(sketch, run.matrix, "matrix")),
        "eta_A_plus": frobenius_relative_error(
            exact["A_plus_k"],
            fkv.reconstruct(sketch, run.matrix, "pseudoinverse")),
    }
    if run.sampled_trials.size:
        row["mean_trials"] = float(run.sampled_trials.mean())
    spectrum = {
        "sigma_exact": exact["sigma"][:n_first_sigma],
        "sigma_approx": sketch.sigma[:n_first_sigma],
        "lambda_exact": exact["lambda"][:n_first_sigma],
        "lambda_approx": lam_cmp[:n_first_sigma],
    }
    return row, spectrum


def exact_references(dense, k, b=None, user_row=None) -> dict:
    """Rank-k exact SVD references for a dense matrix."""
    U, s, Vt = np.linalg.svd(dense, full_matrices=False)
    kk = min(k, int(np.count_nonzero(s > s[0] * 1e-12)))
    U, s, Vt = U[:, :kk], s[:kk], Vt[:kk]
    if b is not None:
        lam = (Vt @ (dense.T @ b)) / s ** 2
    elif user_row is not None:
        lam = Vt @ dense[user_row]
    else:
        lam = np.zeros(kk)
    return {
        "sigma": s,
        "V": Vt.T,
        "lambda": lam,
        "x": Vt.T @ lam,
        "A_k": (U * s[None, :]) @ Vt,
        "A_plus_k": (Vt.T / s[None, :]) @ U.T,
        "full_sigma_max": float(s[0]),
    }
