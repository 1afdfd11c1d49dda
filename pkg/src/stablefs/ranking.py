"""Feature ranking back-ends: ARR, Laplacian score, and tree-based.

All three rankers consume a (preferably [0,1]-scaled) design matrix and
return a best-first :class:`RankedFeatureList`. ARR and LS are
unsupervised; TB ranks by random-forest impurity importance and needs
targets. Ties in every final ordering break by ascending original feature
index so results are reproducible. Every ranker is a pure function of
(matrix, seed) and safe to call concurrently.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from . import forest as forest_mod
from .errors import DegenerateGraph, EmptyMatrix, MissingTargets, OutOfRange
from .trace import DesignMatrix, FeatureId, prefix

ARR = "arr"
LS = "ls"
TB = "tb"
METHODS = (ARR, LS, TB)

TB_DEFAULT_TREES = 100


@dataclass(frozen=True)
class RankedFeatureList:
    """A permutation of the matrix's features, best first, with scores.

    ARR and TB scores are non-increasing along the order; LS scores are
    non-decreasing (a low Laplacian score means high locality preservation,
    so LS ranks ascending).
    """

    order: tuple[FeatureId, ...]
    scores: tuple[float, ...]
    method: str

    def top(self, k: int) -> "FeatureSet":
        if not 1 <= k <= len(self.order):
            raise OutOfRange(f"k={k} outside [1, {len(self.order)}]")
        return FeatureSet(frozenset(self.order[:k]))


@dataclass(frozen=True)
class FeatureSet:
    """An unordered subset of features; k is its cardinality."""

    members: frozenset[FeatureId]

    def __post_init__(self):
        object.__setattr__(self, "members", frozenset(self.members))

    @property
    def k(self) -> int:
        return len(self.members)

    @property
    def indices(self) -> frozenset[int]:
        return frozenset(f.index for f in self.members)

    def sorted_members(self) -> tuple[FeatureId, ...]:
        return tuple(sorted(self.members, key=lambda f: f.index))


def _ordered(matrix: DesignMatrix, scores: np.ndarray, method: str,
             descending: bool) -> RankedFeatureList:
    sign = -1.0 if descending else 1.0
    keyed = sorted(
        range(matrix.n),
        key=lambda j: (sign * scores[j], matrix.feature_ids[j].index),
    )
    return RankedFeatureList(
        order=tuple(matrix.feature_ids[j] for j in keyed),
        scores=tuple(float(scores[j]) for j in keyed),
        method=method,
    )


def arr_rank(matrix: DesignMatrix, seed: int = 0) -> RankedFeatureList:
    """Rank by relevance over redundancy.

    A feature's relevance is the summed absolute deviation of its column
    from the column mean. Its redundancy is the summed absolute cosine
    similarity between its column and every column of the matrix,
    including itself (self-similarity contributes 1). The score is
    relevance divided by redundancy, ranked descending. A zero-norm column
    has undefined cosines; it is given similarity 0 against everything and
    a score of 0, which puts it last.
    """
    if matrix.n == 0 or matrix.m == 0:
        raise EmptyMatrix("empty matrix")
    X = matrix.values
    relevance = np.abs(X - X.mean(axis=0)).sum(axis=0)

    norms = np.sqrt((X * X).sum(axis=0))
    gram = X.T @ X
    denom = np.outer(norms, norms)
    with np.errstate(divide="ignore", invalid="ignore"):
        cos = np.abs(gram / denom)
    zero = norms == 0.0
    cos[zero, :] = 0.0
    cos[:, zero] = 0.0
    sim_sum = cos.sum(axis=1)

    scores = np.zeros(matrix.n)
    nonzero = ~zero
    scores[nonzero] = relevance[nonzero] / sim_sum[nonzero]
    return _ordered(matrix, scores, ARR, descending=True)


def neighbor_count(m: int) -> int:
    """K schedule for the sample graph: 2 up to 16 samples, 5 up to 128, 10 beyond."""
    if m <= 16:
        return 2
    if m <= 128:
        return 5
    return 10


def sample_graph(values: np.ndarray, K: int) -> np.ndarray:
    """Heat-kernel weight matrix of the K-nearest-neighbor sample graph.

    Rows of ``values`` are the nodes. Two nodes are connected when either
    is among the other's K nearest by Euclidean distance (self excluded,
    distance ties broken by lower sample index); connected pairs carry
    weight exp(-d^2), the diagonal is zero.
    """
    m = values.shape[0]
    d2 = cdist(values, values, metric="sqeuclidean")
    np.fill_diagonal(d2, np.inf)

    # stable argsort keeps lower sample index first among equal distances
    nearest = np.argsort(d2, axis=1, kind="stable")[:, :K]
    adj = np.zeros((m, m), dtype=bool)
    rows = np.repeat(np.arange(m), K)
    adj[rows, nearest.ravel()] = True
    adj |= adj.T

    weights = np.where(adj, np.exp(-np.where(np.isinf(d2), 0.0, d2)), 0.0)
    np.fill_diagonal(weights, 0.0)
    return weights


def ls_rank(matrix: DesignMatrix, seed: int = 0) -> RankedFeatureList:
    """Rank by Laplacian score on the K-nearest-neighbor sample graph.

    Nodes are the m sample rows, connected by :func:`sample_graph`, from
    which the degree matrix D and Laplacian L = D - S follow. Each feature
    column is centered by its D-weighted mean and scored by the
    Rayleigh-style ratio of Laplacian to degree quadratic forms; low
    scores (locality-preserving features) rank first. A feature with zero
    degree-weighted variance preserves no locality and gets score +inf,
    ranking last.
    """
    if matrix.n == 0 or matrix.m < 2:
        raise EmptyMatrix(f"need m >= 2, got m={matrix.m}")
    X = matrix.values
    m = matrix.m
    K = min(neighbor_count(m), m - 1)

    weights = sample_graph(X, K)
    degrees = weights.sum(axis=1)
    total = degrees.sum()
    if total == 0.0:
        raise DegenerateGraph("all graph weights are zero")

    centered = X - (degrees @ X) / total
    lap_form = np.einsum("ij,ij->j", centered, degrees[:, None] * centered - weights @ centered)
    deg_form = np.einsum("ij,ij->j", centered, degrees[:, None] * centered)

    with np.errstate(divide="ignore", invalid="ignore"):
        scores = lap_form / deg_form
    scores[deg_form == 0.0] = np.inf
    return _ordered(matrix, scores, LS, descending=False)


def tb_rank(matrix: DesignMatrix, seed: int = 0,
            n_trees: int = TB_DEFAULT_TREES) -> RankedFeatureList:
    """Rank by impurity importance of a random-forest regressor."""
    if matrix.targets is None:
        raise MissingTargets("tree-based ranking needs a target column")
    fitted = forest_mod.fit(matrix, n_trees=n_trees, seed=seed)
    return _ordered(matrix, fitted.importances, TB, descending=True)


_RANKERS = {ARR: arr_rank, LS: ls_rank, TB: tb_rank}


def rank(matrix: DesignMatrix, method: str, seed: int = 0) -> RankedFeatureList:
    if method not in _RANKERS:
        raise OutOfRange(f"unknown ranking method {method!r}")
    return _RANKERS[method](matrix, seed=seed)


def subset(k: int, t: int, method: str, matrix: DesignMatrix,
           seed: int = 0) -> FeatureSet:
    """Top k features computed with ``method`` from the first t samples."""
    if not 1 <= t <= matrix.m:
        raise OutOfRange(f"t={t} outside [1, {matrix.m}]")
    if not 1 <= k <= matrix.n:
        raise OutOfRange(f"k={k} outside [1, {matrix.n}]")
    return rank(prefix(matrix, t), method, seed=seed).top(k)


def write_ranking_csv(ranked: RankedFeatureList, path, top: int | None = None) -> None:
    """Serialize a ranked list as CSV: rank, feature_index, feature_name, score, method."""
    rows = list(zip(ranked.order, ranked.scores))
    if top is not None:
        rows = rows[:top]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "feature_index", "feature_name", "score", "method"])
        for pos, (fid, score) in enumerate(rows, start=1):
            writer.writerow([pos, fid.index, fid.name, repr(float(score)), ranked.method])
