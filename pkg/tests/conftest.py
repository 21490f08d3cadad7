import numpy as np
import pytest
from scipy import stats


def chi_square_pvalue(indices, weights, n_min_expected=5.0):
    """Goodness-of-fit p-value of sampled indices against weights/sum(weights).

    Bins with expected count below ``n_min_expected`` are merged into their
    left neighbor so the chi-square approximation stays valid.
    """
    weights = np.asarray(weights, dtype=np.float64)
    probs = weights / weights.sum()
    counts = np.bincount(np.asarray(indices), minlength=len(weights)).astype(float)
    expected = probs * len(indices)

    merged_counts, merged_expected = [], []
    acc_c = acc_e = 0.0
    for ci, ei in zip(counts, expected):
        acc_c += ci
        acc_e += ei
        if acc_e >= n_min_expected:
            merged_counts.append(acc_c)
            merged_expected.append(acc_e)
            acc_c = acc_e = 0.0
    if acc_e > 0:
        if merged_counts:
            merged_counts[-1] += acc_c
            merged_expected[-1] += acc_e
        else:
            merged_counts.append(acc_c)
            merged_expected.append(acc_e)
    if len(merged_counts) < 2:
        return 1.0
    stat, p = stats.chisquare(merged_counts, merged_expected)
    return p


@pytest.fixture
def rng():
    return np.random.default_rng(20240801)
