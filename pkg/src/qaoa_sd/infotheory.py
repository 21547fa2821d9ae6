"""Binary entropy and information gain, all in bits."""

import numpy as np


def binary_entropy(p):
    """Shannon entropy of a Bernoulli(p) variable in bits; vectorised, H(0) = H(1) = 0."""
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(p * np.log2(p) + (1.0 - p) * np.log2(1.0 - p))
    return np.where((p <= 0.0) | (p >= 1.0), 0.0, h)


def split_information_gain(n_pos_1, n_1, n_pos, n):
    """IG of a binary split given the side-1 counts and the totals.

    All arguments may be arrays (broadcast), which is how threshold scans
    evaluate many candidate splits at once.
    """
    n_pos_1 = np.asarray(n_pos_1, dtype=float)
    n_1 = np.asarray(n_1, dtype=float)
    n_0 = n - n_1
    n_pos_0 = n_pos - n_pos_1
    with np.errstate(divide="ignore", invalid="ignore"):
        p1 = np.where(n_1 > 0, n_pos_1 / np.maximum(n_1, 1), 0.0)
        p0 = np.where(n_0 > 0, n_pos_0 / np.maximum(n_0, 1), 0.0)
    h_cond = (n_1 / n) * binary_entropy(p1) + (n_0 / n) * binary_entropy(p0)
    ig = binary_entropy(n_pos / n) - h_cond
    # float noise can push a zero gain slightly negative
    return np.maximum(ig, 0.0)


def information_gain(feature, y):
    """IG(f) = H(Y) - H(Y|f) for a binary feature column and binary labels."""
    feature = np.asarray(feature).astype(bool)
    y = np.asarray(y).astype(bool)
    n = y.size
    if n == 0:
        return 0.0
    return float(split_information_gain(np.count_nonzero(feature & y), np.count_nonzero(feature),
                                        np.count_nonzero(y), n))


def information_gain_matrix(B, y):
    """Column-wise IG for a 0/1 matrix ``B`` (N x n)."""
    B = np.asarray(B).astype(bool)
    y = np.asarray(y).astype(bool)
    n = y.size
    n_1 = B.sum(axis=0)
    n_pos_1 = B[y].sum(axis=0)
    return split_information_gain(n_pos_1, n_1, np.count_nonzero(y), n)
