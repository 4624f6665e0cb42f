"""Numpy implementations of the pairwise kernels.

Fallback twin of the compiled module ``tdselector._kernels_c``; both expose
the same three functions with identical semantics. Inputs are C-contiguous
float64 matrices ``a`` (la x n) and ``b`` (lb x n); outputs are (la x lb).

The euclidean/manhattan loops accumulate feature by feature so peak memory
stays at one (la x lb) temporary instead of the (la x lb x n) broadcast cube.
"""

import numpy as np

BACKEND_NAME = "python"


def pairwise_sqeuclidean(a, b):
    """Squared L2 distance for every (row of a, row of b) pair."""
    la, n = a.shape
    lb = b.shape[0]
    out = np.zeros((la, lb))
    for j in range(n):
        d = a[:, j, None] - b[None, :, j]
        out += d * d
    return out


def pairwise_manhattan(a, b):
    """L1 distance for every (row of a, row of b) pair."""
    la, n = a.shape
    lb = b.shape[0]
    out = np.zeros((la, lb))
    for j in range(n):
        out += np.abs(a[:, j, None] - b[None, :, j])
    return out


def pairwise_dot(a, b):
    """Plain inner products; cosine is assembled from these plus row norms."""
    return a @ b.T
