"""Synthetic problem generators.

Two families. `HadamardProblem` builds an implicit 2^n x 2^n matrix from k
parity characters: entry (y, z) is a(y XOR z) / 2^n where
a(w) = sum_l sigma_l (-1)^(x_l . w) over k distinct n-bit strings x_l. The
parity vectors v_l(y) = (-1)^(x_l . y) / sqrt(2^n) are exact, mutually
orthonormal left and right singular vectors, all rows share one norm (so
row sampling is uniform), and every pipeline quantity is computable in
O(k n) bit operations, which makes dimensions like 2^50 usable as ground
truth. `GaussianLowRankProblem` assembles A = U diag(sigma) V from
QR-orthonormalized Gaussian factors with a controlled condition number.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, RefusedAtScale, SamplerStalled
from .matrices import MAX_DENSE_ENTRIES, SampleableMatrix

_REJECTION_ROUND_CAP = 100_000


def _parity_signs(bitstrings: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """(-1)^(x_l . w) for every index in ``idx`` and every bitstring.

    Returns shape ``idx.shape + (k,)`` with values +-1.
    """
    masked = idx[..., None].astype(np.uint64) & bitstrings
    parity = np.bitwise_count(masked).astype(np.int64) & 1
    return 1.0 - 2.0 * parity


@dataclass
class HadamardProblem(SampleableMatrix):
    """Implicit symmetric 2^n x 2^n matrix with designed spectrum.

    ``sigma`` are the (positive, descending) singular values, ``bitstrings``
    the k distinct parity strings, and ``beta`` the expansion coefficients
    of the right-hand side b = sum_l beta_l v_l. The exact solution of
    A x = b is x = sum_l (beta_l / sigma_l) v_l.
    """

    n_bits: int
    sigma: np.ndarray
    bitstrings: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=np.float64)
        self.beta = np.asarray(self.beta, dtype=np.float64)
        self.bitstrings = np.asarray(self.bitstrings, dtype=np.uint64)
        k = self.k
        if not (len(self.beta) == len(self.bitstrings) == k):
            raise InvalidInput("sigma, beta, bitstrings must share length k")
        if self.n_bits < 1 or self.n_bits > 62:
            raise InvalidInput("n_bits must be in [1, 62]")
        if k > 20:
            raise InvalidInput("k > 20 would need a 2^k entry-value table")
        if np.any(self.sigma <= 0) or np.any(np.diff(self.sigma) > 0):
            raise InvalidInput("sigma must be positive and descending")
        if len(np.unique(self.bitstrings)) != k:
            raise InvalidInput("bitstrings must be distinct")
        if int(self.bitstrings.max()) >= self.dim:
            raise InvalidInput("bitstrings must fit in n_bits")
        # all 2^k possible entry values: pattern bit l flips sigma_l's sign
        patterns = np.arange(1 << k, dtype=np.uint64)[:, None] >> np.arange(k, dtype=np.uint64)
        signs = 1.0 - 2.0 * (patterns & np.uint64(1)).astype(np.float64)
        self.a_table = signs @ self.sigma
        self.a_norm = float(np.linalg.norm(self.a_table))
        self._max_a_sq = float(self.sigma.sum() ** 2)

    # ---- structure -------------------------------------------------------

    @property
    def k(self) -> int:
        return len(self.sigma)

    @property
    def dim(self) -> int:
        return 1 << self.n_bits

    @property
    def n_rows(self) -> int:
        return self.dim

    @property
    def n_cols(self) -> int:
        return self.dim

    @property
    def frobenius_norm(self) -> float:
        # equals ||a|| / 2^(k/2) by the parity cross-term cancellation
        return float(np.sqrt(np.sum(self.sigma ** 2)))

    def a_values(self, w) -> np.ndarray:
        """a(w) = sum_l sigma_l (-1)^(x_l . w) for an array of xor indices."""
        w = np.asarray(w, dtype=np.uint64)
        return _parity_signs(self.bitstrings, w) @ self.sigma

    def entry(self, i, j) -> float:
        w = np.array([np.uint64(i) ^ np.uint64(j)], dtype=np.uint64)
        return float(self.a_values(w)[0]) / self.dim

    def entries(self, rows, cols) -> np.ndarray:
        w = np.asarray(rows, dtype=np.uint64) ^ np.asarray(cols, dtype=np.uint64)
        return self.a_values(w) / self.dim

    def submatrix(self, rows, cols) -> np.ndarray:
        rows = np.asarray(rows, dtype=np.uint64)
        cols = np.asarray(cols, dtype=np.uint64)
        return self.a_values(rows[:, None] ^ cols[None, :]) / self.dim

    def row_norm(self, i) -> float:
        # identical for every row
        return self.a_norm / np.sqrt(float(2 ** (self.n_bits + self.k)))

    def to_dense(self, size_limit: int = MAX_DENSE_ENTRIES) -> np.ndarray:
        if self.dim ** 2 > size_limit:
            raise RefusedAtScale(f"2^{self.n_bits} is too large to materialize")
        idx = np.arange(self.dim, dtype=np.uint64)
        return self.submatrix(idx, idx)

    # ---- sampling --------------------------------------------------------

    def sample_row(self, rng) -> int:
        # equal row norms make length-square row sampling uniform
        return int(rng.integers(0, self.dim, dtype=np.uint64))

    def sample_rows(self, rng, size: int) -> np.ndarray:
        return rng.integers(0, self.dim, size=size, dtype=np.uint64)

    def sample_col_in_row(self, i, rng) -> int:
        return int(self.sample_cols_in_rows(np.array([i], dtype=np.uint64), rng)[0])

    def sample_cols_in_rows(self, rows, rng) -> np.ndarray:
        """Column draws by rejection: propose uniformly, accept with a^2 / max a^2.

        The maximum entry magnitude in any row is a(0) = sum(sigma),
        attained at z = y, so the acceptance ratio is exact.
        """
        rows = np.asarray(rows, dtype=np.uint64)
        out = np.zeros(rows.shape, dtype=np.uint64)
        pending = np.ones(rows.shape, dtype=bool)
        for _ in range(_REJECTION_ROUND_CAP):
            n_pending = int(pending.sum())
            if n_pending == 0:
                return out
            z = rng.integers(0, self.dim, size=n_pending, dtype=np.uint64)
            a = self.a_values(rows[pending] ^ z)
            accept = rng.random(n_pending) * self._max_a_sq <= a * a
            hit = np.flatnonzero(pending)[accept]
            out[hit] = z[accept]
            pending[hit] = False
        raise SamplerStalled("column rejection sampler exceeded its round cap")

    # ---- exact quantities ------------------------------------------------

    def b_entries(self, idx) -> np.ndarray:
        signs = _parity_signs(self.bitstrings, np.asarray(idx, dtype=np.uint64))
        return (signs @ self.beta) / np.sqrt(float(self.dim))

    def b_entry(self, i) -> float:
        return float(self.b_entries(np.array([i], dtype=np.uint64))[0])

    def exact_v_entries(self, ell: int, idx) -> np.ndarray:
        signs = _parity_signs(self.bitstrings[ell:ell + 1],
                              np.asarray(idx, dtype=np.uint64))[..., 0]
        return signs / np.sqrt(float(self.dim))

    def exact_lambdas(self) -> np.ndarray:
        return self.beta / self.sigma

    def exact_solution_entries(self, idx) -> np.ndarray:
        signs = _parity_signs(self.bitstrings, np.asarray(idx, dtype=np.uint64))
        return (signs @ (self.beta / self.sigma)) / np.sqrt(float(self.dim))

    def c_entry(self, row_indices, col_indices, s: int, t: int) -> float:
        """Closed-form sketch-matrix entry from the a-value table."""
        rows = np.asarray(row_indices, dtype=np.uint64)
        j = np.uint64(col_indices[t])
        a_col = self.a_values(rows ^ j)
        denom = np.sqrt(float(2 ** self.k) * len(col_indices)) * np.linalg.norm(a_col)
        return float(self.a_norm * a_col[s] / denom)

    def c_matrix(self, row_indices, col_indices) -> np.ndarray:
        rows = np.asarray(row_indices, dtype=np.uint64)
        cols = np.asarray(col_indices, dtype=np.uint64)
        a = self.a_values(rows[:, None] ^ cols[None, :])
        col_norms = np.linalg.norm(a, axis=0)
        if np.any(col_norms == 0.0):
            warnings.warn("zero sampled column left unnormalized", RuntimeWarning)
        safe = np.where(col_norms == 0.0, 1.0, col_norms)
        scale = self.a_norm / np.sqrt(float(2 ** self.k) * len(cols))
        return scale * a / safe[None, :]

    def estimate_lambda(self, ell: int, sigma_tilde: float, n_samples: int,
                        rng, n_repetitions: int = 10,
                        aggregation: str = "median"):
        """Monte Carlo coefficient estimate using the closed-form chi variable.

        chi(y, z) = ||A||_F^2 * bnum(y) * vnum(z) / a(y xor z) with the
        unnormalized parity factors; its mean estimates <v_l, A^T b>, and
        dividing by the approximate sigma_l^2 gives lambda_l.
        """
        from .coefficients import _aggregate  # local import; keeps modules one-way
        fro2 = self.frobenius_norm ** 2
        rep_means = []
        chis = []
        for _ in range(n_repetitions):
            y = self.sample_rows(rng, n_samples)
            z = self.sample_cols_in_rows(y, rng)
            a = self.a_values(y ^ z)
            v_num = _parity_signs(self.bitstrings[ell:ell + 1], z)[..., 0]
            b_num = _parity_signs(self.bitstrings, y) @ self.beta
            chi = fro2 * b_num * v_num / (a * sigma_tilde ** 2)
            rep_means.append(chi.mean())
            chis.append(chi)
        return _aggregate(rep_means, np.concatenate(chis), n_samples,
                          n_repetitions, aggregation)

    # ---- serialization ---------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "n_bits": self.n_bits,
            "sigma": self.sigma.tolist(),
            "bitstrings": [format(int(x), "x") for x in self.bitstrings],
            "beta": self.beta.tolist(),
        })

    @classmethod
    def from_json(cls, text: str) -> "HadamardProblem":
        d = json.loads(text)
        return cls(n_bits=d["n_bits"], sigma=np.array(d["sigma"]),
                   bitstrings=np.array([int(x, 16) for x in d["bitstrings"]],
                                       dtype=np.uint64),
                   beta=np.array(d["beta"]))


def linear_spectrum(k: int) -> np.ndarray:
    """sigma_l = k, k-1, ..., 1: gives condition number k for rank k."""
    return np.arange(k, 0, -1, dtype=np.float64)


def random_hadamard_problem(n_bits: int, k: int, seed,
                            sigma=None, beta=None) -> HadamardProblem:
    """Distinct uniformly random bitstrings; default spectrum k, ..., 1."""
    rng = np.random.default_rng(seed)
    dim = 1 << n_bits
    if k > dim:
        raise InvalidInput("need k <= 2^n_bits distinct bitstrings")
    if dim <= (1 << 22):
        bits = rng.choice(dim, size=k, replace=False).astype(np.uint64)
    else:
        chosen = set()
        while len(chosen) < k:
            chosen.add(int(rng.integers(0, dim, dtype=np.uint64)))
        bits = np.array(sorted(chosen), dtype=np.uint64)
    sigma = linear_spectrum(k) if sigma is None else np.asarray(sigma, float)
    beta = linear_spectrum(k) if beta is None else np.asarray(beta, float)
    return HadamardProblem(n_bits=n_bits, sigma=sigma, bitstrings=bits,
                           beta=beta)


# --------------------------------------------------------------------------
# Gaussian low-rank problems
# --------------------------------------------------------------------------

def _quarter_circle(lo: float, hi: float, size: int, rng) -> np.ndarray:
    """Samples from f(s) proportional to sqrt(hi^2 - s^2) on (lo, hi)."""
    envelope = np.sqrt(hi ** 2 - lo ** 2)
    out = np.empty(size)
    filled = 0
    for _ in range(_REJECTION_ROUND_CAP):
        if filled == size:
            return out
        n = 2 * (size - filled)
        cand = rng.uniform(lo, hi, size=n)
        acc = rng.random(n) * envelope <= np.sqrt(hi ** 2 - cand ** 2)
        take = cand[acc][:size - filled]
        out[filled:filled + take.size] = take
        filled += take.size
    raise SamplerStalled("quarter-circle sampler exceeded its round cap")


@dataclass
class GaussianLowRankProblem:
    """A = U diag(sigma) V with U, V orthonormal Gaussian factors."""

    m: int
    n: int
    k: int
    kappa: float
    U: np.ndarray        # (m, k), orthonormal columns
    V: np.ndarray        # (k, n), orthonormal rows
    sigma: np.ndarray    # (k,), descending
    beta: np.ndarray     # (k,)
    seed: object = None

    @property
    def b(self) -> np.ndarray:
        return self.U @ self.beta

    def materialize(self) -> np.ndarray:
        return (self.U * self.sigma[None, :]) @ self.V

    def exact_lambdas(self) -> np.ndarray:
        return self.beta / self.sigma

    def exact_solution(self) -> np.ndarray:
        return (self.beta / self.sigma) @ self.V

    def spec(self) -> dict:
        return {"m": self.m, "n": self.n, "k": self.k, "kappa": self.kappa,
                "seed": self.seed}


def gaussian_problem(m: int, n: int, k: int, kappa: float,
                     seed) -> GaussianLowRankProblem:
    """Random rank-k matrix with exact condition number kappa.

    U and V come from QR decompositions of standard-normal matrices. The
    largest singular value is uniform on [1, 500], the smallest is
    sigma_max / kappa, and the k - 2 interior values follow the
    quarter-circle density restricted to that interval. The right-hand side
    is b = U beta with standard-normal beta.
    """
    if k < 1 or k > min(m, n):
        raise InvalidInput("need 1 <= k <= min(m, n)")
    if kappa < 1:
        raise InvalidInput("condition number must be >= 1")
    if k < 2 and kappa > 1:
        raise InvalidInput("rank 1 cannot realize kappa > 1")
    rng = np.random.default_rng(seed)
    U, _ = np.linalg.qr(rng.standard_normal((m, k)))
    Q, _ = np.linalg.qr(rng.standard_normal((n, k)))
    V = Q.T
    sigma_max = rng.uniform(1.0, 500.0)
    if k == 1:
        sigma = np.array([sigma_max])
    else:
        sigma_min = sigma_max / kappa
        interior = _quarter_circle(sigma_min, sigma_max, k - 2, rng) \
            if k > 2 else np.empty(0)
        sigma = np.concatenate(([sigma_max], np.sort(interior)[::-1],
                                [sigma_min]))
    beta = rng.standard_normal(k)
    return GaussianLowRankProblem(m=m, n=n, k=k, kappa=float(kappa), U=U, V=V,
                                  sigma=sigma, beta=beta, seed=seed)
