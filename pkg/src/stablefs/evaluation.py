"""Prediction-error protocols and the multi-start experiment runner.

Two protocols quantify how useful a selected feature set is for predicting
the target with a random-forest regressor:

* ``nmae1_protocol`` is the online setting: the model trains on the l
  samples that follow the feature-selection window (monitoring is reduced
  to the selected features once selection finishes, so the training window
  starts t_k rows after the stream start) and is scored on every later row
  of the trace.
* ``nmae2_protocol`` is the offline setting: a seeded uniform 70/30
  train/test split over the whole trace. With all retained features this
  is the no-selection baseline.

``run_study`` ties everything together over several stream start times and
aggregates per-start results; ``similarity_evolution`` tabulates how the
overlap of consecutive top-k sets grows with the sample count.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from . import forest as forest_mod
from .errors import (
    InsufficientSamples,
    LengthMismatch,
    MissingTargets,
    OutOfRange,
    ZeroMeanTarget,
)
from .osfs import DEFAULT_CHECKPOINTS, DEFAULT_K_GRID, OsfsConfig, run_offline, sim
from .ranking import FeatureSet, rank
from .trace import DesignMatrix, prefix, restrict, tail
from .util import derive_seed

DEFAULT_TRAIN_WINDOW = 1024
DEFAULT_STARTS = 10
MAX_RANDOM_START = 10_000
TRAIN_FRACTION = 0.7

# sub-seed roles mixed with the master seed
_ROLE_OSFS = 0
_ROLE_NMAE1 = 1
_ROLE_NMAE2 = 2
_ROLE_BASELINE = 3
_ROLE_STARTS = 4
_ROLE_SPLIT = 5
_ROLE_EVOLUTION = 6


@dataclass(frozen=True)
class NmaeReport:
    """Normalized mean absolute error over q test samples."""

    nmae: float
    q: int
    mean_target: float


def nmae(y_true, y_pred) -> NmaeReport:
    """Mean absolute error normalized by the mean test target.

    Meaningful for positive-valued targets (service metrics); a test set
    whose targets average to exactly zero has no defined error.
    """
    yt = np.asarray(y_true, dtype=np.float64)
    yp = np.asarray(y_pred, dtype=np.float64)
    if yt.shape != yp.shape or yt.ndim != 1 or yt.size < 1:
        raise LengthMismatch(f"need equal-length non-empty vectors, got {yt.shape} vs {yp.shape}")
    mean = float(yt.mean())
    if mean == 0.0:
        raise ZeroMeanTarget("test targets average to zero")
    value = float(np.abs(yt - yp).mean() / mean)
    return NmaeReport(nmae=value, q=int(yt.size), mean_target=mean)


def nmae1_protocol(matrix: DesignMatrix, start: int, features: FeatureSet,
                   t_k: int = 0, l: int = DEFAULT_TRAIN_WINDOW, seed: int = 0,
                   n_trees: int = forest_mod.DEFAULT_TREES) -> NmaeReport:
    """Online protocol: train on rows [start+t_k, start+t_k+l), test on the rest.

    ``start`` and the window bounds are 1-based sample indices. ``t_k`` is
    the length of the feature-selection window, which the training window
    must not overlap.
    """
    if matrix.targets is None:
        raise MissingTargets("the online protocol needs a target column")
    if start < 1 or t_k < 0 or l < 1:
        raise OutOfRange(f"bad window: start={start}, t_k={t_k}, l={l}")
    if not start + t_k + l < matrix.m:
        raise InsufficientSamples(
            f"start {start} + t_k {t_k} + l {l} leaves no test rows in m={matrix.m}")
    sub = restrict(matrix, features.members)
    train0 = start + t_k - 1
    train = slice(train0, train0 + l)
    test = slice(train0 + l, matrix.m)

    train_matrix = DesignMatrix(values=sub.values[train], feature_ids=sub.feature_ids,
                                targets=sub.targets[train])
    fitted = forest_mod.fit(train_matrix, n_trees=n_trees, seed=seed)
    predictions = forest_mod.predict_matrix(fitted, sub.values[test])
    return nmae(sub.targets[test], predictions)


def nmae2_protocol(matrix: DesignMatrix, features: FeatureSet, seed: int = 0,
                   n_trees: int = forest_mod.DEFAULT_TREES) -> NmaeReport:
    """Offline protocol: seeded uniform 70/30 split over the whole trace."""
    if matrix.targets is None:
        raise MissingTargets("the offline protocol needs a target column")
    if matrix.m < 10:
        raise InsufficientSamples(f"need at least 10 samples, got {matrix.m}")
    sub = restrict(matrix, features.members)
    perm = np.random.default_rng([seed, _ROLE_SPLIT]).permutation(matrix.m)
    n_train = int(TRAIN_FRACTION * matrix.m)
    train_idx, test_idx = perm[:n_train], perm[n_train:]

    train_matrix = DesignMatrix(values=sub.values[train_idx], feature_ids=sub.feature_ids,
                                targets=sub.targets[train_idx])
    fitted = forest_mod.fit(train_matrix, n_trees=n_trees, seed=seed)
    predictions = forest_mod.predict_matrix(fitted, sub.values[test_idx])
    return nmae(sub.targets[test_idx], predictions)


@dataclass(frozen=True)
class StartRecord:
    start: int
    k: int
    t_k: int
    nmae1: float
    nmae2: float
    features: tuple[int, ...]


@dataclass(frozen=True)
class ExperimentReport:
    method: str
    seed: int
    per_start: tuple[StartRecord, ...]
    aggregate: dict[str, dict[str, float]]
    baseline_nmae2: float

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "n_starts": len(self.per_start),
            "per_start": [
                {
                    "start": r.start, "k": r.k, "t_k": r.t_k,
                    "nmae1": r.nmae1, "nmae2": r.nmae2,
                    "features": list(r.features),
                }
                for r in self.per_start
            ],
            "aggregate": self.aggregate,
            "baseline_nmae2": self.baseline_nmae2,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def write_csv(self, path) -> None:
        """One-line aggregate table: method, mean/std per column, baseline."""
        agg = self.aggregate
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([
                "Method", "k_mean", "k_std", "tk_mean", "tk_std",
                "NMAE1_mean", "NMAE1_std", "NMAE2_mean", "NMAE2_std", "baseline",
            ])
            writer.writerow([
                self.method,
                repr(agg["k"]["mean"]), repr(agg["k"]["std"]),
                repr(agg["t_k"]["mean"]), repr(agg["t_k"]["std"]),
                repr(agg["nmae1"]["mean"]), repr(agg["nmae1"]["std"]),
                repr(agg["nmae2"]["mean"]), repr(agg["nmae2"]["std"]),
                repr(self.baseline_nmae2),
            ])


def _aggregate(records: list[StartRecord]) -> dict[str, dict[str, float]]:
    out = {}
    for name in ("k", "t_k", "nmae1", "nmae2"):
        column = np.asarray([getattr(r, name) for r in records], dtype=np.float64)
        out[name] = {"mean": float(column.mean()), "std": float(column.std())}
    return out


def pick_starts(m: int, n_starts: int, seed: int,
                reserve: int, role: int) -> list[int]:
    """Start time 1 plus n_starts-1 seeded uniform draws from [2, upper].

    ``reserve`` rows must remain after any start so the downstream windows
    always fit; the upper bound is also capped at MAX_RANDOM_START.
    """
    if n_starts < 1:
        raise OutOfRange(f"need at least one start, got {n_starts}")
    starts = [1]
    if n_starts > 1:
        upper = min(MAX_RANDOM_START, m - reserve)
        if upper < 2:
            raise InsufficientSamples(
                f"trace too short for random starts: m={m}, reserve={reserve}")
        rng = np.random.default_rng([seed, role])
        starts += [int(s) for s in rng.integers(2, upper + 1, size=n_starts - 1)]
    return starts


def run_study(matrix: DesignMatrix, method: str, n_starts: int = DEFAULT_STARTS,
              seed: int = 0, eta: float = 0.5, l: int = DEFAULT_TRAIN_WINDOW,
              n_trees: int = forest_mod.DEFAULT_TREES) -> ExperimentReport:
    """Run selection plus both error protocols from several start times.

    One start time is t=1; the rest are drawn uniformly between 2 and an
    upper bound that leaves room for the worst-case selection window (the
    full checkpoint horizon), the training window, and at least one test
    row. Aggregates are means and population standard deviations over
    starts; the baseline is the offline protocol with all retained features.
    """
    if matrix.targets is None:
        raise MissingTargets("the study needs a target column")
    horizon = DEFAULT_CHECKPOINTS[-1]
    if matrix.m <= horizon + 32:
        raise InsufficientSamples(f"need more than {horizon + 32} rows, got {matrix.m}")
    starts = pick_starts(matrix.m, n_starts, seed,
                         reserve=horizon + l + 1, role=_ROLE_STARTS)

    records = []
    for i, start in enumerate(starts):
        config = OsfsConfig(eta=eta, method=method, seed=derive_seed(seed, i, _ROLE_OSFS))
        result = run_offline(matrix, config, start)
        report1 = nmae1_protocol(matrix, start, result.features, t_k=result.t_k,
                                 l=l, seed=derive_seed(seed, i, _ROLE_NMAE1),
                                 n_trees=n_trees)
        report2 = nmae2_protocol(matrix, result.features,
                                 seed=derive_seed(seed, i, _ROLE_NMAE2),
                                 n_trees=n_trees)
        records.append(StartRecord(
            start=start, k=result.k, t_k=result.t_k,
            nmae1=report1.nmae, nmae2=report2.nmae,
            features=tuple(sorted(result.features.indices))))

    all_features = FeatureSet(frozenset(matrix.feature_ids))
    baseline = nmae2_protocol(matrix, all_features,
                              seed=derive_seed(seed, 0, _ROLE_BASELINE), n_trees=n_trees)
    return ExperimentReport(method=method, seed=seed, per_start=tuple(records),
                            aggregate=_aggregate(records), baseline_nmae2=baseline.nmae)


@dataclass(frozen=True)
class SimilarityTable:
    """Mean overlap of consecutive top-k sets, per (k, t) cell."""

    method: str
    k_list: tuple[int, ...]
    t_list: tuple[int, ...]
    values: np.ndarray  # shape (len(k_list), len(t_list))
    n_starts: int
    seed: int

    def cell(self, k: int, t: int) -> float:
        return float(self.values[self.k_list.index(k), self.t_list.index(t)])

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "t", "mean_sim"])
            for i, k in enumerate(self.k_list):
                for j, t in enumerate(self.t_list):
                    writer.writerow([k, t, repr(float(self.values[i, j]))])


def similarity_evolution(matrix: DesignMatrix, method: str,
                         k_list: tuple[int, ...] = DEFAULT_K_GRID,
                         t_list: tuple[int, ...] = DEFAULT_CHECKPOINTS,
                         n_starts: int = DEFAULT_STARTS,
                         seed: int = 0) -> SimilarityTable:
    """Mean of sim(top-k at t/2, top-k at t) over start times, per (k, t)."""
    k_list = tuple(int(k) for k in k_list)
    t_list = tuple(int(t) for t in t_list)
    if not k_list or not t_list:
        raise OutOfRange("k_list and t_list must be non-empty")
    if any(k < 1 or k > matrix.n for k in k_list):
        raise OutOfRange(f"every k must lie in [1, {matrix.n}]")
    if any(t < 2 or t % 2 for t in t_list):
        raise OutOfRange("every t must be an even integer >= 2")
    max_t = max(t_list)
    if max_t > matrix.m:
        raise OutOfRange(f"largest t {max_t} exceeds m={matrix.m}")

    starts = pick_starts(matrix.m, n_starts, seed,
                         reserve=max_t - 1, role=_ROLE_EVOLUTION)
    prefixes = sorted({t for t in t_list} | {t // 2 for t in t_list})

    sums = np.zeros((len(k_list), len(t_list)))
    for i, start in enumerate(starts):
        stream = tail(matrix, start)
        ranking_seed = derive_seed(seed, i, _ROLE_EVOLUTION)
        rankings = {t: rank(prefix(stream, t), method, seed=ranking_seed)
                    for t in prefixes}
        for a, k in enumerate(k_list):
            for b, t in enumerate(t_list):
                sums[a, b] += sim(rankings[t // 2].top(k), rankings[t].top(k))

    return SimilarityTable(method=method, k_list=k_list, t_list=t_list,
                           values=sums / len(starts), n_starts=len(starts), seed=seed)
