"""Discrete sampling proportional to squared magnitudes.

Two interchangeable backends are provided. ``LengthSquareTree`` is a
prefix-sum binary tree supporting O(log n) sampling and O(log n) weight
updates, the structure needed when distributions must stay sampleable under
streaming updates. ``DirectSampler`` is a flat cumulative array: O(n) to
build, O(log n) per sample, and in practice much faster than the tree for
moderate dimensions because the work is a single vectorized binary search.

Both follow the same cumulative convention: leaf ``i`` owns the half-open
interval ``[sum(w[:i]), sum(w[:i+1]))`` of the total mass, and a draw that
lands exactly on a boundary resolves to the higher index. Sampling is a
deterministic function of the uniform variate, so runs are replayable from
a fixed random stream.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDistribution, InvalidInput


def _validate_weights(weights) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise InvalidInput("weights must be a non-empty 1-D array")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInput("weights must be finite and non-negative")
    if not np.any(w > 0):
        raise DegenerateDistribution("all weights are zero")
    return w


class LengthSquareTree:
    """Complete binary tree of partial sums over non-negative leaf weights.

    Leaves are padded to the next power of two with zeros and stored in a
    flat array: node ``v`` has children ``2v`` and ``2v+1``, the root is
    node 1, and leaf ``i`` sits at index ``pad + i``. Every internal node
    holds the exact float64 sum of its two children, which `update`
    preserves by recomputing the O(log n) ancestors of the touched leaf.
    """

    def __init__(self, weights):
        w = _validate_weights(weights)
        self.n = w.size
        pad = 1 << (self.n - 1).bit_length()
        self._pad = pad
        self._levels = pad.bit_length() - 1
        self._tree = np.zeros(2 * pad, dtype=np.float64)
        self._tree[pad:pad + self.n] = w
        self.rebuild()

    def rebuild(self) -> None:
        """Recompute all internal sums from the current leaves."""
        t = self._tree
        s = self._pad // 2
        while s >= 1:
            t[s:2 * s] = t[2 * s:4 * s:2] + t[2 * s + 1:4 * s:2]
            s //= 2

    @property
    def total(self) -> float:
        return float(self._tree[1])

    @property
    def weights(self) -> np.ndarray:
        return self._tree[self._pad:self._pad + self.n].copy()

    def weight(self, i: int) -> float:
        if not 0 <= i < self.n:
            raise InvalidInput(f"index {i} out of range for {self.n} leaves")
        return float(self._tree[self._pad + i])

    def update(self, i: int, new_weight: float) -> None:
        """Set leaf ``i`` to ``new_weight`` and repair its ancestors."""
        if not 0 <= i < self.n:
            raise InvalidInput(f"index {i} out of range for {self.n} leaves")
        if new_weight < 0 or not np.isfinite(new_weight):
            raise InvalidInput("weight must be finite and non-negative")
        t = self._tree
        v = self._pad + i
        t[v] = new_weight
        v >>= 1
        while v >= 1:
            t[v] = t[2 * v] + t[2 * v + 1]
            v >>= 1

    def sample_at(self, u: float) -> int:
        """Leaf index for the uniform variate ``u`` in [0, 1). Deterministic."""
        total = self._tree[1]
        if total <= 0:
            raise DegenerateDistribution("all weights are zero")
        # Clamp so rounding in u * total can never walk past the last leaf.
        target = min(u * total, np.nextafter(total, 0.0))
        t = self._tree
        v = 1
        for _ in range(self._levels):
            left = t[2 * v]
            if target < left:
                v = 2 * v
            else:
                target -= left
                v = 2 * v + 1
        return v - self._pad

    def sample(self, rng: np.random.Generator) -> int:
        return self.sample_at(rng.random())

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Vectorized batch of independent samples (level-synchronous descent)."""
        total = self._tree[1]
        if total <= 0:
            raise DegenerateDistribution("all weights are zero")
        target = np.minimum(rng.random(size) * total, np.nextafter(total, 0.0))
        t = self._tree
        v = np.ones(size, dtype=np.int64)
        for _ in range(self._levels):
            left = t[2 * v]
            go_left = target < left
            target = np.where(go_left, target, target - left)
            v = 2 * v + np.where(go_left, 0, 1)
        return v - self._pad


class DirectSampler:
    """Cumulative-array sampler over non-negative weights.

    Shares the boundary convention of `LengthSquareTree`, so both backends
    return the same index for the same uniform variate.
    """

    def __init__(self, weights):
        w = _validate_weights(weights)
        self.n = w.size
        self._cumulative = np.cumsum(w)
        self.total = float(self._cumulative[-1])

    @property
    def cumulative(self) -> np.ndarray:
        return self._cumulative.copy()

    def sample_at(self, u: float) -> int:
        target = min(u * self.total, np.nextafter(self.total, 0.0))
        return int(np.searchsorted(self._cumulative, target, side="right"))

    def sample(self, rng: np.random.Generator) -> int:
        return self.sample_at(rng.random())

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        target = np.minimum(rng.random(size) * self.total,
                            np.nextafter(self.total, 0.0))
        return np.searchsorted(self._cumulative, target, side="right")


@dataclass
class BenchmarkRow:
    dim: int
    method: str
    n_samples: int
    seconds: float


def sampling_benchmark(dims, n_samples: int = 1000, seed: int = 0,
                       repeats: int = 3, trace=None) -> list[BenchmarkRow]:
    """Time generating ``n_samples`` draws per dimension for both backends.

    The tree is built once per dimension and timed per-sample, which is the
    regime it is designed for. The direct method is timed as one built-in
    batched call (`Generator.choice`), which pays an O(n) distribution setup
    per batch; that asymmetry is what produces the large-dimension crossover
    between the two methods.

    Reports the median of ``repeats`` timings. If ``trace`` is a list, the
    sampled indices of the final repeat are appended to it as
    ``(dim, method, indices)`` tuples, for determinism checks.
    """
    rows = []
    for dim in dims:
        if dim < 1:
            raise InvalidInput("dimensions must be positive")
        rng = np.random.default_rng([seed, dim])
        weights = rng.random(dim) + 0.05
        probs = weights / weights.sum()

        tree = LengthSquareTree(weights)
        tree_times = []
        for _ in range(repeats):
            us = rng.random(n_samples)
            t0 = time.perf_counter()
            idx_tree = [tree.sample_at(u) for u in us]
            tree_times.append(time.perf_counter() - t0)
        rows.append(BenchmarkRow(dim, "tree", n_samples,
                                 float(np.median(tree_times))))

        direct_times = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            idx_direct = rng.choice(dim, size=n_samples, p=probs)
            direct_times.append(time.perf_counter() - t0)
        rows.append(BenchmarkRow(dim, "direct", n_samples,
                                 float(np.median(direct_times))))

        if trace is not None:
            trace.append((dim, "tree", np.asarray(idx_tree)))
            trace.append((dim, "direct", np.asarray(idx_direct)))
    return rows
