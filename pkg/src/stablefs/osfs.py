"""Online stable-feature-set selection.

The engine reads a stream of samples and searches an exponentially spaced
grid of (k, t) pairs, where k is a candidate feature-set size and t a
checkpoint in the stream. At each checkpoint it compares the current top-k
set against the previous one with the overlap metric :func:`sim`. It stops
as soon as consecutive sets were similar above the threshold eta and the
similarity then declined (the set had stabilized), or when the horizon is
reached while similarity is still above eta. Smaller k values are tried
first, so the engine favors fewer monitored features at the possible cost
of more samples.

The public surface is event-driven: callers push one sample at a time into
:class:`OsfsState` via :meth:`OsfsState.feed` and receive ``NeedMore`` or a
final :class:`OsfsResult`. :func:`run_offline` wraps the same machine over
the rows of a design matrix. When a candidate k exhausts its checkpoints,
the machine advances to the next k and immediately replays every
checkpoint from stored samples, so a single feed call can cascade through
the remaining grid; this makes the event-driven form produce exactly the
result of the blocking grid-search loop it replaces.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptySet,
    FedAfterDone,
    InsufficientSamples,
    MissingTargets,
    OutOfRange,
    SizeMismatch,
)
from .ranking import ARR, METHODS, TB, FeatureSet, subset
from .trace import DesignMatrix, FeatureId, Sample, from_rows

NEED_MORE = "NeedMore"

A_DECLINE = "A_decline"
B_HORIZON = "B_horizon"
FALLBACK = "fallback"

DEFAULT_K_GRID = (4, 16, 64, 256)
DEFAULT_CHECKPOINTS = (32, 64, 128, 256, 512, 1024)
DEFAULT_WARMUP = (8, 16)


def sim(a: FeatureSet, b: FeatureSet) -> float:
    """Overlap fraction |a & b| / k between two equal-size feature sets."""
    if a.k == 0 or b.k == 0:
        raise EmptySet("similarity needs non-empty sets")
    if a.k != b.k:
        raise SizeMismatch(f"set sizes differ: {a.k} vs {b.k}")
    return len(a.indices & b.indices) / a.k


@dataclass(frozen=True)
class OsfsConfig:
    """Grid and threshold configuration of the online search."""

    eta: float = 0.5
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    checkpoint_grid: tuple[int, ...] = DEFAULT_CHECKPOINTS
    warmup: tuple[int, int] = DEFAULT_WARMUP
    method: str = ARR
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.eta < 1.0:
            raise OutOfRange(f"eta must lie in (0,1), got {self.eta}")
        if self.method not in METHODS:
            raise OutOfRange(f"unknown ranking method {self.method!r}")
        if (not self.k_grid or self.k_grid[0] < 1
                or any(b <= a for a, b in zip(self.k_grid, self.k_grid[1:]))):
            raise OutOfRange("k_grid must be non-empty, positive, strictly increasing")
        cps = self.checkpoint_grid
        if any(b <= a for a, b in zip(cps, cps[1:])) or not cps:
            raise OutOfRange("checkpoint_grid must be non-empty and strictly increasing")
        if cps[0] < 17:
            raise OutOfRange("checkpoints start after the warm-up window (>= 17)")
        w1, w2 = self.warmup
        if not 1 <= w1 < w2 < cps[0]:
            raise OutOfRange(f"warmup {self.warmup} must precede the first checkpoint")

    @property
    def horizon(self) -> int:
        return self.checkpoint_grid[-1]


@dataclass(frozen=True)
class OsfsResult:
    """Outcome of one online selection run.

    ``t_k`` is the number of samples that produced the returned set, which
    is smaller than the number of samples the engine had to read before it
    could decide (at least 32, at most the horizon).
    """

    features: FeatureSet
    k: int
    t_k: int
    terminated_by: str
    checkpoint_log: tuple[tuple[int, int, float], ...]
    method: str

    @property
    def samples_read(self) -> int:
        return max(t for _, t, _ in self.checkpoint_log)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "k": self.k,
            "t_k": self.t_k,
            "terminated_by": self.terminated_by,
            "features": [
                {"index": f.index, "name": f.name}
                for f in self.features.sorted_members()
            ],
            "checkpoints": [
                {"k": k, "t": t, "sim": s} for k, t, s in self.checkpoint_log
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


class OsfsState:
    """Single-owner state of the online search; feed() is not reentrant."""

    def __init__(self, config: OsfsConfig, feature_ids: tuple[FeatureId, ...]):
        self.config = config
        self.feature_ids = tuple(feature_ids)
        n = len(self.feature_ids)
        self._usable_ks = tuple(k for k in config.k_grid if k <= n)
        if not self._usable_ks:
            raise OutOfRange(
                f"no usable k: smallest grid value {config.k_grid[0]} exceeds n={n}")
        self._rows: list[np.ndarray] = []
        self._targets: list[float] = []
        self._k_index = 0
        self._warmed = False
        self._cp_index = 0
        self._f1: FeatureSet | None = None
        self._f2: FeatureSet | None = None
        self._t1 = 0
        self._t2 = 0
        self._sim12 = 0.0
        self.checkpoint_log: list[tuple[int, int, float]] = []
        self.result: OsfsResult | None = None

    @property
    def done(self) -> bool:
        return self.result is not None

    @property
    def samples_stored(self) -> int:
        return len(self._rows)

    def _matrix(self, t: int) -> DesignMatrix:
        targets = self._targets[:t] if self.config.method == TB else None
        return from_rows(self._rows[:t], self.feature_ids, targets)

    def _subset(self, k: int, t: int) -> FeatureSet:
        return subset(k, t, self.config.method, self._matrix(t), seed=self.config.seed)

    def _finish(self, features: FeatureSet, k: int, t_k: int, mode: str) -> OsfsResult:
        self.result = OsfsResult(
            features=features, k=k, t_k=t_k, terminated_by=mode,
            checkpoint_log=tuple(self.checkpoint_log), method=self.config.method)
        return self.result

    def feed(self, sample: Sample) -> str | OsfsResult:
        """Push the next sample; returns NEED_MORE or the final result."""
        if self.done:
            raise FedAfterDone("stream continued after the search terminated")
        values = np.asarray(sample.values, dtype=np.float64)
        if values.shape != (len(self.feature_ids),):
            raise DimensionMismatch(
                f"sample has {values.shape[0] if values.ndim == 1 else values.shape} "
                f"values, expected {len(self.feature_ids)}")
        if self.config.method == TB and sample.target is None:
            raise MissingTargets("tree-based ranking needs a target on every sample")
        if len(self._rows) < self.config.horizon:
            self._rows.append(values)
            self._targets.append(np.nan if sample.target is None else float(sample.target))
        return self._advance()

    def _advance(self) -> str | OsfsResult:
        cfg = self.config
        t_now = len(self._rows)
        w1, w2 = cfg.warmup
        cps = cfg.checkpoint_grid

        while True:
            k = self._usable_ks[self._k_index]

            if not self._warmed:
                if t_now < w2:
                    return NEED_MORE
                self._f1 = self._subset(k, w1)
                self._f2 = self._subset(k, w2)
                self._t1, self._t2 = w1, w2
                self._sim12 = sim(self._f1, self._f2)
                self.checkpoint_log.append((k, w2, self._sim12))
                self._warmed = True
                self._cp_index = 0

            while self._cp_index < len(cps) and cps[self._cp_index] <= t_now:
                t = cps[self._cp_index]
                f_kt = self._subset(k, t)
                sim_kt = sim(self._f2, f_kt)
                self.checkpoint_log.append((k, t, sim_kt))
                if sim_kt < self._sim12 and self._sim12 > cfg.eta:
                    return self._finish(self._f1, k, self._t1, A_DECLINE)
                if sim_kt > cfg.eta and t == cfg.horizon:
                    return self._finish(self._f2, k, self._t2, B_HORIZON)
                self._f1, self._t1 = self._f2, self._t2
                self._f2, self._t2 = f_kt, t
                self._sim12 = sim_kt
                self._cp_index += 1

            if self._cp_index == len(cps):
                if self._k_index + 1 < len(self._usable_ks):
                    # next k replays every checkpoint from stored samples
                    self._k_index += 1
                    self._warmed = False
                    continue
                return self._finish(self._f2, k, self._t2, FALLBACK)
            return NEED_MORE


def run_offline(matrix: DesignMatrix, config: OsfsConfig, start: int = 1) -> OsfsResult:
    """Feed rows start, start+1, ... (1-based) into a fresh state until done.

    Raises InsufficientSamples when the trace ends before the search can
    terminate; a truncated search is never reported as a result.
    """
    if start < 1 or matrix.m < start + 32:
        raise InsufficientSamples(
            f"start {start} leaves fewer than 33 of {matrix.m} rows")
    state = OsfsState(config, matrix.feature_ids)
    supervised = config.method == TB
    for i in range(start - 1, matrix.m):
        target = float(matrix.targets[i]) if supervised and matrix.targets is not None else None
        outcome = state.feed(Sample(values=matrix.values[i, :], target=target,
                                    time_index=i - start + 2))
        if isinstance(outcome, OsfsResult):
            return outcome
    raise InsufficientSamples(
        f"stream ended after {matrix.m - start + 1} samples without a stable set")
