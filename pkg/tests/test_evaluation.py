"""NMAE metric, the online/offline protocols, and the study runner."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import stablefs as sf
from stablefs.errors import (
    InsufficientSamples,
    LengthMismatch,
    MissingTargets,
    OutOfRange,
    ZeroMeanTarget,
)

from conftest import make_matrix


def all_features(matrix):
    return sf.FeatureSet(frozenset(matrix.feature_ids))


def linear_trace(m=2200, n=6, seed=0):
    """Noiseless y = x1 plus nuisance columns; forests should nail it."""
    rng = np.random.default_rng(seed)
    values = rng.random((m, n))
    return make_matrix(values, targets=values[:, 0] + 1.0)


class TestNmae:
    def test_perfect(self):
        report = sf.nmae([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert report.nmae == 0.0 and report.q == 3 and report.mean_target == 2.0

    def test_hand_value(self):
        assert sf.nmae([2.0, 2.0], [1.0, 3.0]).nmae == 0.5

    def test_zero_mean(self):
        with pytest.raises(ZeroMeanTarget):
            sf.nmae([0.0, 0.0], [1.0, 1.0])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            sf.nmae([1.0, 2.0], [1.0])
        with pytest.raises(LengthMismatch):
            sf.nmae([], [])

    @given(scale=st.floats(0.01, 100.0), seed=st.integers(0, 2 ** 16))
    @settings(max_examples=50, deadline=None)
    def test_error_scale_covariance(self, scale, seed):
        rng = np.random.default_rng(seed)
        y = rng.random(20) + 1.0
        e = rng.standard_normal(20)
        base = sf.nmae(y, y + e).nmae
        scaled = sf.nmae(y, y + scale * e).nmae
        assert scaled == pytest.approx(scale * base, rel=1e-9)


class TestNmae1:
    def test_beats_constant_predictor_on_planted_signal(self):
        matrix = linear_trace()
        picked = sf.FeatureSet(frozenset([matrix.feature_ids[0]]))
        report = sf.nmae1_protocol(matrix, start=1, features=picked, t_k=32,
                                   l=512, seed=0, n_trees=20)
        test_rows = slice(1 + 32 - 1 + 512, matrix.m)
        y_test = matrix.targets[test_rows]
        const = np.abs(y_test - matrix.targets[slice(32, 32 + 512)].mean()).mean()
        assert report.nmae < const / y_test.mean()
        assert report.q == matrix.m - (1 + 32 - 1 + 512)

    def test_all_features_runs(self):
        matrix = linear_trace(m=1600)
        report = sf.nmae1_protocol(matrix, start=1, features=all_features(matrix),
                                   l=1024, seed=0, n_trees=10)
        assert np.isfinite(report.nmae)

    def test_insufficient_samples(self):
        matrix = linear_trace(m=1600)
        with pytest.raises(InsufficientSamples):
            sf.nmae1_protocol(matrix, start=600, features=all_features(matrix),
                              t_k=8, l=1024, seed=0)

    def test_needs_targets(self):
        matrix = make_matrix(np.random.default_rng(0).random((2000, 3)))
        with pytest.raises(MissingTargets):
            sf.nmae1_protocol(matrix, 1, sf.FeatureSet(frozenset(matrix.feature_ids)))


class TestNmae2:
    def test_near_zero_on_noiseless_linear(self):
        matrix = linear_trace(m=600)
        picked = sf.FeatureSet(frozenset([matrix.feature_ids[0]]))
        report = sf.nmae2_protocol(matrix, picked, seed=0, n_trees=20)
        assert report.nmae < 0.05

    def test_deterministic(self):
        matrix = linear_trace(m=300)
        a = sf.nmae2_protocol(matrix, all_features(matrix), seed=3, n_trees=5)
        b = sf.nmae2_protocol(matrix, all_features(matrix), seed=3, n_trees=5)
        assert a == b

    def test_split_sizes(self):
        matrix = linear_trace(m=100)
        report = sf.nmae2_protocol(matrix, all_features(matrix), seed=0, n_trees=5)
        assert report.q == 30

    def test_too_short(self):
        matrix = linear_trace(m=9)
        with pytest.raises(InsufficientSamples):
            sf.nmae2_protocol(matrix, all_features(matrix), seed=0)


def study_trace(m=2200, n=8, seed=2):
    """Small stationary-ish trace long enough for the full study pipeline."""
    rng = np.random.default_rng(seed)
    t = np.arange(1, m + 1)
    z = np.mod(0.5 + t * 0.6180339887498949, 1.0)
    cols = np.column_stack([
        z, 1.0 - z ** 1.05, z ** 0.9, 1.0 - z ** 0.8,
    ] + [rng.random(m) for _ in range(n - 4)])
    y = 4.0 + 2.0 * z + 0.1 * np.sin(t / 9.0)
    matrix, _ = sf.preprocess(make_matrix(cols, targets=y))
    return matrix


@pytest.fixture(scope="module")
def report():
    return sf.run_study(study_trace(), "arr", n_starts=3, seed=1, n_trees=10)


class TestRunStudy:

    def test_single_start_degenerate_std(self):
        report = sf.run_study(study_trace(), "arr", n_starts=1, seed=0, n_trees=5)
        assert len(report.per_start) == 1
        assert report.per_start[0].start == 1
        for column in report.aggregate.values():
            assert column["std"] == 0.0

    def test_aggregate_recomputable(self, report):
        for name in ("k", "t_k", "nmae1", "nmae2"):
            column = np.array([getattr(r, name) for r in report.per_start], dtype=float)
            assert report.aggregate[name]["mean"] == pytest.approx(column.mean(), abs=1e-12)
            assert report.aggregate[name]["std"] == pytest.approx(column.std(), abs=1e-12)

    def test_reproducible(self, report):
        again = sf.run_study(study_trace(), "arr", n_starts=3, seed=1, n_trees=10)
        assert again.to_json() == report.to_json()

    def test_contains_baseline_and_features(self, report):
        assert np.isfinite(report.baseline_nmae2)
        for r in report.per_start:
            assert len(r.features) == r.k

    def test_too_short(self):
        with pytest.raises(InsufficientSamples):
            sf.run_study(study_trace(m=900), "arr", n_starts=2, seed=0)

    def test_csv_shape(self, report, tmp_path):
        path = tmp_path / "report.csv"
        report.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0].split(",") == [
            "Method", "k_mean", "k_std", "tk_mean", "tk_std",
            "NMAE1_mean", "NMAE1_std", "NMAE2_mean", "NMAE2_std", "baseline"]
        assert len(lines) == 2 and lines[1].startswith("arr,")


class TestSimilarityEvolution:
    def test_stationary_all_ones(self, stationary):
        table = sf.similarity_evolution(stationary, "arr", k_list=(4,),
                                        t_list=(32, 64, 128), n_starts=3, seed=0)
        assert np.all(table.values == 1.0)

    def test_validation(self, stationary):
        with pytest.raises(OutOfRange):
            sf.similarity_evolution(stationary, "arr", k_list=(99,), t_list=(32,))
        with pytest.raises(OutOfRange):
            sf.similarity_evolution(stationary, "arr", k_list=(4,), t_list=(31,))
        with pytest.raises(OutOfRange):
            sf.similarity_evolution(stationary, "arr", k_list=(4,), t_list=(4096,))

    def test_csv(self, stationary, tmp_path):
        table = sf.similarity_evolution(stationary, "arr", k_list=(2, 4),
                                        t_list=(32, 64), n_starts=2, seed=0)
        path = tmp_path / "sim.csv"
        table.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "k,t,mean_sim"
        assert len(lines) == 5
        assert table.cell(4, 64) == 1.0


class RecordingArray(np.ndarray):
    """Target vector that records which row indices were materialized."""

    def __new__(cls, values, log):
        obj = np.asarray(values, dtype=np.float64).view(cls)
        obj._log = log
        return obj

    def __array_finalize__(self, obj):
        self._log = getattr(obj, "_log", None)

    def __getitem__(self, key):
        if self._log is not None and not isinstance(key, tuple):
            base = np.arange(self.shape[0])
            picked = np.atleast_1d(base[key])
            self._log.update(int(i) for i in picked)
        return np.asarray(super().__getitem__(key))


class TestTargetReadIsolation:
    def test_unsupervised_selection_never_reads_targets(self):
        matrix = study_trace()
        log = set()
        instrumented = sf.DesignMatrix(
            values=matrix.values, feature_ids=matrix.feature_ids,
            targets=RecordingArray(np.asarray(matrix.targets), log))
        start = 5
        result = sf.run_offline(instrumented, sf.OsfsConfig(method="arr"), start=start)
        assert log == set()

        sf.nmae1_protocol(instrumented, start, result.features, t_k=result.t_k,
                          l=1024, seed=0, n_trees=5)
        selection_window = set(range(start - 1, start - 1 + result.t_k))
        assert log
        assert not (log & selection_window)
