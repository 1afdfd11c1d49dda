"""Random-forest regressor built from scratch.

Supplies the impurity-based feature importances behind tree-based ranking
and the predictor used by the evaluation protocols. Trees are grown CART
style on bootstrap resamples: every split minimizes weighted target
variance over all features, with candidate thresholds at the midpoints of
consecutive distinct sorted values. Growth stops when a node is pure,
holds fewer than two samples, or no split reduces impurity.

Bootstrap draws are represented as per-row integer weights, so a row drawn
r times behaves exactly like r duplicated rows. The growth loop runs as a
compiled kernel over index rows presorted once per feature and partitioned
in place, which keeps fitting fast on wide matrices without changing the
classic algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DimensionMismatch, MissingTargets, TooFewSamples
from .trace import DesignMatrix, Sample

DEFAULT_TREES = 100


@dataclass(frozen=True)
class Tree:
    """One fitted regression tree as parallel node arrays (preorder).

    ``feature`` is -1 at leaves; ``value`` is the (weighted) mean target of
    the samples routed to the node; ``n_node_samples`` counts bootstrap
    multiplicity; ``impurity`` is the target variance at the node.
    """

    feature: np.ndarray
    threshold: np.ndarray
    children_left: np.ndarray
    children_right: np.ndarray
    value: np.ndarray
    n_node_samples: np.ndarray
    impurity: np.ndarray
    bootstrap_indices: np.ndarray
    raw_importance: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]


@dataclass(frozen=True)
class RegressionForest:
    trees: tuple[Tree, ...]
    n_trees: int
    seed: int
    n_features: int
    importances: np.ndarray

    def __post_init__(self):
        imp = np.asarray(self.importances, dtype=np.float64)
        imp.flags.writeable = False
        object.__setattr__(self, "importances", imp)


@njit(cache=True)
def _grow_core(xf, y, w, ord_mat, feature, threshold, left, right,
               value, count, impurity, raw_imp, flag, scratch, stack,
               perm, rng_state):
    """Depth-first CART growth over per-feature-sorted index rows.

    ``ord_mat`` has one row per feature holding the node's sample indices
    in ascending feature order; a node occupies the same column range in
    every row and children are produced by stable in-place partitioning of
    that range. Features are visited in a fresh seeded random order at
    every node, so equal-gain splits (exactly redundant columns) spread
    across the candidates instead of always favoring the lowest index.
    Returns the number of nodes written.
    """
    n = ord_mat.shape[0]
    sz0 = ord_mat.shape[1]

    w_total = 0.0
    for p in range(sz0):
        w_total += w[ord_mat[0, p]]

    n_nodes = 0
    epoch = 0
    top = 0
    stack[top, 0] = 0
    stack[top, 1] = sz0
    stack[top, 2] = -1
    stack[top, 3] = 0
    top = 1

    while top > 0:
        top -= 1
        lo = stack[top, 0]
        hi = stack[top, 1]
        parent = stack[top, 2]
        is_left = stack[top, 3]

        node_id = n_nodes
        n_nodes += 1
        if parent >= 0:
            if is_left == 1:
                left[parent] = node_id
            else:
                right[parent] = node_id

        w_node = 0.0
        s1 = 0.0
        s2 = 0.0
        y_min = np.inf
        y_max = -np.inf
        for p in range(lo, hi):
            i = ord_mat[0, p]
            wi = w[i]
            yi = y[i]
            w_node += wi
            wy = wi * yi
            s1 += wy
            s2 += wy * yi
            if yi < y_min:
                y_min = yi
            if yi > y_max:
                y_max = yi
        mean = s1 / w_node
        sse = 0.0
        for p in range(lo, hi):
            i = ord_mat[0, p]
            d = y[i] - mean
            sse += w[i] * d * d

        feature[node_id] = -1
        threshold[node_id] = np.nan
        left[node_id] = -1
        right[node_id] = -1
        value[node_id] = mean
        count[node_id] = int(round(w_node))
        imp = sse / w_node
        if imp < 0.0:
            imp = 0.0
        impurity[node_id] = imp

        if w_node < 2.0 or y_max == y_min:
            continue

        # Fisher-Yates with an inline LCG: the node's feature visit order
        for i in range(n):
            perm[i] = i
        for i in range(n - 1, 0, -1):
            rng_state = rng_state * np.uint64(6364136223846793005) + np.uint64(1442695040888963407)
            j = int((rng_state >> np.uint64(33)) % np.uint64(i + 1))
            tmp = perm[i]
            perm[i] = perm[j]
            perm[j] = tmp

        best_gain = 0.0
        best_f = -1
        best_p = -1
        best_thr = 0.0
        for fi in range(n):
            f = perm[fi]
            lw = 0.0
            lsum = 0.0
            lsq = 0.0
            cur = xf[ord_mat[f, lo], f]
            for p in range(lo, hi - 1):
                i = ord_mat[f, p]
                wi = w[i]
                yi = y[i]
                lw += wi
                wy = wi * yi
                lsum += wy
                lsq += wy * yi
                nxt = xf[ord_mat[f, p + 1], f]
                if nxt > cur:
                    rw = w_node - lw
                    rsum = s1 - lsum
                    rsq = s2 - lsq
                    sse_l = lsq - lsum * lsum / lw
                    if sse_l < 0.0:
                        sse_l = 0.0
                    sse_r = rsq - rsum * rsum / rw
                    if sse_r < 0.0:
                        sse_r = 0.0
                    gain = sse - sse_l - sse_r
                    # strict > keeps the first candidate among equal gains:
                    # earliest in the visit order, then lowest threshold
                    if gain > best_gain:
                        best_gain = gain
                        best_f = f
                        best_p = p
                        best_thr = 0.5 * (cur + nxt)
                cur = nxt

        if best_f < 0:
            continue

        feature[node_id] = best_f
        threshold[node_id] = best_thr
        raw_imp[best_f] += best_gain / w_total

        epoch += 1
        for p in range(lo, best_p + 1):
            flag[ord_mat[best_f, p]] = epoch
        n_left = best_p + 1 - lo

        for f in range(n):
            width = hi - lo
            for q in range(width):
                scratch[q] = ord_mat[f, lo + q]
            a = lo
            b = lo + n_left
            for q in range(width):
                i = scratch[q]
                if flag[i] == epoch:
                    ord_mat[f, a] = i
                    a += 1
                else:
                    ord_mat[f, b] = i
                    b += 1

        stack[top, 0] = lo + n_left
        stack[top, 1] = hi
        stack[top, 2] = node_id
        stack[top, 3] = 0
        top += 1
        stack[top, 0] = lo
        stack[top, 1] = lo + n_left
        stack[top, 2] = node_id
        stack[top, 3] = 1
        top += 1

    return n_nodes


def _grow_tree(xf: np.ndarray, y: np.ndarray, weights: np.ndarray,
               ord_global: np.ndarray, bootstrap: np.ndarray,
               scan_seed: np.uint64) -> Tree:
    m, n = xf.shape
    active = weights > 0
    sz0 = int(active.sum())

    if n == 0:
        w = weights.astype(np.float64)
        mean = float((w * y).sum() / w.sum())
        sse = float((w * (y - mean) ** 2).sum())
        return Tree(
            feature=np.array([-1], dtype=np.int32),
            threshold=np.array([np.nan]),
            children_left=np.array([-1], dtype=np.int32),
            children_right=np.array([-1], dtype=np.int32),
            value=np.array([mean]),
            n_node_samples=np.array([int(w.sum())], dtype=np.int64),
            impurity=np.array([max(sse / w.sum(), 0.0)]),
            bootstrap_indices=bootstrap,
            raw_importance=np.zeros(0),
        )

    ord_mat = ord_global[active[ord_global]].reshape(n, sz0)

    cap = 2 * sz0 + 1
    feature = np.empty(cap, dtype=np.int32)
    threshold = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int32)
    right = np.empty(cap, dtype=np.int32)
    value = np.empty(cap, dtype=np.float64)
    count = np.empty(cap, dtype=np.int64)
    impurity = np.empty(cap, dtype=np.float64)
    raw_imp = np.zeros(n, dtype=np.float64)
    flag = np.zeros(m, dtype=np.int64)
    scratch = np.empty(sz0, dtype=ord_mat.dtype)
    stack = np.empty((sz0 + 4, 4), dtype=np.int64)
    perm = np.empty(n, dtype=np.int32)

    n_nodes = _grow_core(xf, y, weights.astype(np.float64), ord_mat,
                         feature, threshold, left, right, value, count,
                         impurity, raw_imp, flag, scratch, stack,
                         perm, scan_seed)

    return Tree(
        feature=feature[:n_nodes].copy(),
        threshold=threshold[:n_nodes].copy(),
        children_left=left[:n_nodes].copy(),
        children_right=right[:n_nodes].copy(),
        value=value[:n_nodes].copy(),
        n_node_samples=count[:n_nodes].copy(),
        impurity=impurity[:n_nodes].copy(),
        bootstrap_indices=bootstrap,
        raw_importance=raw_imp,
    )


def fit(matrix: DesignMatrix, n_trees: int = DEFAULT_TREES, seed: int = 0) -> RegressionForest:
    """Train a forest of ``n_trees`` regression trees on (features -> target).

    Each tree sees m bootstrap draws with replacement from its own RNG
    stream, derived by mixing (seed, tree index) so changing the tree count
    never reshuffles earlier trees. Importances are the normalized,
    tree-averaged impurity decreases; they sum to 1 whenever any tree
    split, and are all zero otherwise.
    """
    if matrix.targets is None:
        raise MissingTargets("forest training needs a target column")
    if matrix.m < 2:
        raise TooFewSamples(f"need at least 2 samples, got {matrix.m}")
    if n_trees < 1:
        raise TooFewSamples(f"need at least 1 tree, got {n_trees}")

    X = matrix.values
    y = np.ascontiguousarray(matrix.targets, dtype=np.float64)
    m, n = X.shape
    xf = np.asfortranarray(X)
    ord_global = np.ascontiguousarray(
        np.argsort(X, axis=0, kind="stable").T.astype(np.int32))

    trees = []
    raw = np.zeros(n)
    for i in range(n_trees):
        rng = np.random.default_rng([seed, i])
        draws = rng.integers(0, m, size=m)
        weights = np.bincount(draws, minlength=m)
        scan_seed = np.uint64(rng.integers(1, 2 ** 63))
        tree = _grow_tree(xf, y, weights, ord_global, draws, scan_seed)
        trees.append(tree)
        if n:
            raw += tree.raw_importance

    raw /= n_trees
    total = raw.sum()
    importances = raw / total if total > 0.0 else raw
    return RegressionForest(trees=tuple(trees), n_trees=n_trees, seed=seed,
                            n_features=n, importances=importances)


def _route(tree: Tree, X: np.ndarray) -> np.ndarray:
    """Leaf node index reached by every row of X (value <= threshold goes left)."""
    pos = np.zeros(X.shape[0], dtype=np.int32)
    while True:
        feat = tree.feature[pos]
        internal = feat >= 0
        if not internal.any():
            return pos
        safe_feat = np.where(internal, feat, 0)
        x = X[np.arange(X.shape[0]), safe_feat]
        goes_left = x <= tree.threshold[pos]
        nxt = np.where(goes_left, tree.children_left[pos], tree.children_right[pos])
        pos = np.where(internal, nxt, pos).astype(np.int32)


def predict_matrix(forest: RegressionForest, X: np.ndarray) -> np.ndarray:
    """Mean per-tree leaf prediction for every row of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != forest.n_features:
        raise DimensionMismatch(
            f"expected shape (q, {forest.n_features}), got {X.shape}")
    out = np.zeros(X.shape[0])
    for tree in forest.trees:
        out += tree.value[_route(tree, X)]
    return out / forest.n_trees


def predict(forest: RegressionForest, sample: Sample) -> float:
    """Forest prediction for a single sample."""
    values = np.asarray(sample.values, dtype=np.float64)
    if values.shape != (forest.n_features,):
        raise DimensionMismatch(
            f"sample has {values.shape} values, forest expects {forest.n_features}")
    return float(predict_matrix(forest, values[None, :])[0])


def forest_to_json(forest: RegressionForest) -> dict:
    """Serialize a fitted forest as plain node arrays."""
    return {
        "n_trees": forest.n_trees,
        "seed": forest.seed,
        "n_features": forest.n_features,
        "importances": [float(v) for v in forest.importances],
        "trees": [
            {
                "feature": t.feature.tolist(),
                "threshold": [None if np.isnan(v) else float(v) for v in t.threshold],
                "children_left": t.children_left.tolist(),
                "children_right": t.children_right.tolist(),
                "value": t.value.tolist(),
                "n_node_samples": t.n_node_samples.tolist(),
                "impurity": t.impurity.tolist(),
            }
            for t in forest.trees
        ],
    }
