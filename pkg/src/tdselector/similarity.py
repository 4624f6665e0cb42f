"""Similarity and distance kernels between metric vectors.

Three indexes are supported: cosine similarity, Euclidean distance and
Manhattan distance. The two distances enter the scoring scheme through a
bounded map sim = 1/(1+d) by default (monotone, 1 iff identical, range
(0, 1]), which keeps both score terms on comparable scales; 'negate' is
available when raw -d is preferred (same ranking, different alpha
trade-off). Cosine values are passed through unclipped, so they can be
negative on standardized data.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from tdselector import kernels
from tdselector.errors import DimensionMismatchError, ZeroVectorError

DISTANCE_TRANSFORMS = ("inverse", "negate")


class SimilarityIndex(str, enum.Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"


def _pair(u, v):
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise DimensionMismatchError(
            f"vector shapes differ: {u.shape} vs {v.shape}"
        )
    return u, v


def cosine(u, v) -> float:
    """Cosine of the angle between u and v, in [-1, 1]."""
    u, v = _pair(u, v)
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine similarity is undefined for a zero vector")
    return float(u @ v) / (nu * nv)


def euclidean(u, v) -> float:
    """L2 distance between u and v."""
    u, v = _pair(u, v)
    d = u - v
    return math.sqrt(float(d @ d))


def manhattan(u, v) -> float:
    """L1 distance between u and v."""
    u, v = _pair(u, v)
    return float(np.abs(u - v).sum())


def distance_to_similarity(d, transform: str = "inverse"):
    if transform == "inverse":
        return 1.0 / (1.0 + d)
    if transform == "negate":
        return -d
    raise ValueError(f"unknown distance transform '{transform}'")


def similarity_of(index: SimilarityIndex, u, v,
                  transform: str = "inverse") -> float:
    """Unified similarity value for the scoring scheme.

    Cosine passes through; distances are mapped so that larger means more
    similar and identical vectors score 1 (under the default transform).
    """
    index = SimilarityIndex(index)
    if index is SimilarityIndex.COSINE:
        return cosine(u, v)
    d = euclidean(u, v) if index is SimilarityIndex.EUCLIDEAN else manhattan(u, v)
    return float(distance_to_similarity(d, transform))


def similarity_matrix(index: SimilarityIndex, tests, candidates,
                      transform: str = "inverse") -> np.ndarray:
    """similarity_of for every (test row, candidate row) pair, vectorized.

    Shape (l, m) for l test rows and m candidate rows. This is the hot path;
    the pairwise distances come from the compiled kernels when available.
    """
    index = SimilarityIndex(index)
    T = np.ascontiguousarray(tests, dtype=np.float64)
    X = np.ascontiguousarray(candidates, dtype=np.float64)
    if T.ndim != 2 or X.ndim != 2 or T.shape[1] != X.shape[1]:
        raise DimensionMismatchError(
            f"matrix shapes incompatible: {T.shape} vs {X.shape}"
        )
    if index is SimilarityIndex.COSINE:
        tn = np.sqrt(np.einsum("ij,ij->i", T, T))
        xn = np.sqrt(np.einsum("ij,ij->i", X, X))
        if np.any(tn == 0.0) or np.any(xn == 0.0):
            raise ZeroVectorError(
                "cosine similarity is undefined for a zero vector"
            )
        return kernels.dot_matrix(T, X) / np.outer(tn, xn)
    if index is SimilarityIndex.EUCLIDEAN:
        dist = np.sqrt(kernels.sqeuclidean_matrix(T, X))
    else:
        dist = kernels.manhattan_matrix(T, X)
    return distance_to_similarity(dist, transform)
