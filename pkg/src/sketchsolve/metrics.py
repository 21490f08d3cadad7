"""Relative-error metrics for singular values, coefficients, vectors, matrices.

Entries whose exact value is zero carry no relative error; they are skipped
and counted. Singular vectors are compared up to a global sign per vector,
chosen to minimize the error, since an SVD fixes each factor's sign
arbitrarily. Approximate and exact spectra are paired by descending order.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, UndefinedMetric


def relative_errors(exact, approx, first_l: int = None):
    """Entrywise |exact - approx| / |exact| with zeros skipped.

    Returns ``(errors, n_skipped)``.
    """
    exact = np.asarray(exact, dtype=np.float64)
    approx = np.asarray(approx, dtype=np.float64)
    if exact.shape != approx.shape:
        raise InvalidInput("exact and approx must have the same shape")
    if first_l is not None:
        exact, approx = exact[:first_l], approx[:first_l]
    mask = exact != 0.0
    n_skipped = int(exact.size - mask.sum())
    if not np.any(mask):
        raise UndefinedMetric("no nonzero exact entries to compare")
    errs = np.abs(exact[mask] - approx[mask]) / np.abs(exact[mask])
    return errs, n_skipped


def relative_error_vector(exact, approx, mode: str = "mean",
                          first_l: int = None) -> float:
    """Mean or median of entrywise relative errors."""
    if mode not in ("mean", "median"):
        raise InvalidInput(f"unknown mode {mode!r}")
    errs, _ = relative_errors(exact, approx, first_l)
    return float(np.mean(errs) if mode == "mean" else np.median(errs))


def frobenius_relative_error(exact, approx) -> float:
    """||approx - exact||_F / ||exact||_F."""
    exact = np.asarray(exact, dtype=np.float64)
    approx = np.asarray(approx, dtype=np.float64)
    if exact.shape != approx.shape:
        raise InvalidInput("matrices must have the same shape")
    denom = np.linalg.norm(exact)
    if denom == 0.0:
        raise UndefinedMetric("exact matrix is zero")
    return float(np.linalg.norm(approx - exact) / denom)


def vector_error_up_to_sign(exact_vecs, approx_vecs,
                            first_l: int = None) -> float:
    """Mean relative entry error over a family of vectors, signs aligned.

    Both arguments are (n, k) arrays whose columns are paired vectors. Each
    approximate column may be flipped as a whole; the flip minimizing that
    column's error is used. Zero exact entries are skipped.
    """
    exact_vecs = np.atleast_2d(np.asarray(exact_vecs, dtype=np.float64))
    approx_vecs = np.atleast_2d(np.asarray(approx_vecs, dtype=np.float64))
    if exact_vecs.shape != approx_vecs.shape:
        raise InvalidInput("vector families must share a shape")
    total = 0.0
    count = 0
    for ell in range(exact_vecs.shape[1]):
        best = None
        for sign in (1.0, -1.0):
            try:
                errs, _ = relative_errors(exact_vecs[:, ell],
                                          sign * approx_vecs[:, ell], first_l)
            except UndefinedMetric:
                errs = None
            if errs is not None:
                cand = (errs.sum(), errs.size)
                if best is None or cand[0] / cand[1] < best[0] / best[1]:
                    best = cand
        if best is not None:
            total += best[0]
            count += best[1]
    if count == 0:
        raise UndefinedMetric("no comparable entries in any vector")
    return total / count


def total_variation_distance(p, q) -> float:
    """TVD between two distributions on the same support (diagnostic only)."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    return float(0.5 * np.abs(p / p.sum() - q / q.sum()).sum())


@dataclass
class ErrorReport:
    """Per-repetition metric values with mean/std summaries over repetitions."""

    n_repetitions: int
    first_l: int = None
    per_repetition: dict = field(default_factory=dict)

    def add(self, name: str, values) -> None:
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (self.n_repetitions,):
            raise InvalidInput("need one value per repetition")
        self.per_repetition[name] = values

    def mean(self, name: str) -> float:
        return float(np.mean(self.per_repetition[name]))

    def std(self, name: str) -> float:
        return float(np.std(self.per_repetition[name]))

    def summary(self) -> dict:
        out = {}
        for name in self.per_repetition:
            out[f"{name}_mean"] = self.mean(name)
            out[f"{name}_std"] = self.std(name)
        return out
