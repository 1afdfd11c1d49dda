"""Trace ingestion, preprocessing, and prefix access."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import stablefs as sf
from stablefs.errors import (
    EmptyMatrix,
    MalformedRow,
    MissingFile,
    NonNumericCell,
    OutOfRange,
    UnknownTargetColumn,
)

from conftest import make_matrix


def write_lines(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


class TestLoadTrace:
    def test_target_split(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1,f2,y", "1,2,3", "4,5,6", "7,8,9"])
        m = sf.load_trace(p, target_column="y")
        assert m.n == 2 and m.m == 3
        assert m.targets.tolist() == [3.0, 6.0, 9.0]
        assert [f.name for f in m.feature_ids] == ["f1", "f2"]

    def test_no_target(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1,f2,y", "1,2,3", "4,5,6", "7,8,9"])
        m = sf.load_trace(p)
        assert m.n == 3 and m.targets is None
        assert [f.name for f in m.feature_ids] == ["f1", "f2", "y"]

    def test_short_row(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1,f2", "5"])
        with pytest.raises(MalformedRow) as err:
            sf.load_trace(p)
        assert err.value.line == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(MissingFile):
            sf.load_trace(tmp_path / "absent.csv")

    def test_unknown_target(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1,f2", "1,2"])
        with pytest.raises(UnknownTargetColumn):
            sf.load_trace(p, target_column="nope")

    def test_non_numeric_cell(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1,f2", "1,2", "1,bogus"])
        with pytest.raises(NonNumericCell) as err:
            sf.load_trace(p)
        assert err.value.line == 3 and err.value.column == "f2"

    def test_missing_markers_become_nan(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1,f2", "1,", "NaN,2", "nan,3"])
        m = sf.load_trace(p)
        assert np.isnan(m.values[0, 1])
        assert np.isnan(m.values[1, 0]) and np.isnan(m.values[2, 0])

    def test_duplicate_header(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1,f1", "1,2"])
        with pytest.raises(MalformedRow) as err:
            sf.load_trace(p)
        assert err.value.line == 1

    def test_scientific_notation(self, tmp_path):
        p = write_lines(tmp_path / "t.csv", ["f1", "1.5e-3", "2E+2"])
        m = sf.load_trace(p)
        assert m.values[:, 0].tolist() == [1.5e-3, 200.0]


class TestPreprocess:
    def test_scaling_endpoints(self):
        m = make_matrix(np.array([[0.0, 1.0], [5.0, 1.5], [10.0, 2.0]]))
        out, _ = sf.preprocess(m)
        assert out.values[:, 0].tolist() == [0.0, 0.5, 1.0]

    def test_constant_column_dropped(self):
        m = make_matrix(np.array([[7.0, 0.0], [7.0, 1.0], [7.0, 2.0]]))
        out, report = sf.preprocess(m)
        assert out.n == 1
        assert [f.index for f in report.dropped_low_variance] == [0]

    def test_alternating_column_retained(self):
        # frozen oracle: population variance of the scaled 0/1 alternating
        # column is exactly 0.25
        col = np.array([0.0, 0.009] * 50)
        scaled = (col - col.min()) / (col.max() - col.min())
        oracle_var = sum((v - scaled.mean()) ** 2 for v in scaled) / len(scaled)
        assert oracle_var == 0.25

        m = make_matrix(np.column_stack([col, np.linspace(0, 1, 100)]))
        out, report = sf.preprocess(m)
        assert out.n == 2 and not report.dropped_low_variance

    def test_nan_column_dropped_as_non_numeric(self):
        vals = np.array([[1.0, 0.0], [np.nan, 1.0], [3.0, 2.0]])
        m = make_matrix(vals)
        out, report = sf.preprocess(m)
        assert out.n == 1
        assert [f.index for f in report.dropped_non_numeric] == [0]

    def test_report_counts(self):
        vals = np.column_stack([
            np.array([1.0, np.nan, 3.0]),
            np.array([7.0, 7.0, 7.0]),
            np.array([0.0, 1.0, 2.0]),
        ])
        _, report = sf.preprocess(make_matrix(vals))
        assert (report.retained_count + len(report.dropped_low_variance)
                + len(report.dropped_non_numeric)) == 3

    def test_empty_matrix(self):
        with pytest.raises(EmptyMatrix):
            sf.preprocess(make_matrix(np.zeros((1, 3))))

    def test_targets_untouched(self):
        m = make_matrix(np.array([[0.0], [5.0], [10.0]]), targets=np.array([3.0, 1.0, 2.0]))
        out, _ = sf.preprocess(m)
        assert out.targets.tolist() == [3.0, 1.0, 2.0]

    @given(st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_idempotent(self, seed):
        rng = np.random.default_rng(seed)
        m = make_matrix(rng.random((8, 5)) * rng.uniform(0.5, 100))
        once, _ = sf.preprocess(m)
        twice, report = sf.preprocess(once)
        assert twice.n == once.n
        assert not report.dropped_low_variance and not report.dropped_non_numeric
        assert np.max(np.abs(twice.values - once.values)) <= 1e-12

    def test_scaled_values_in_unit_interval(self):
        rng = np.random.default_rng(0)
        out, _ = sf.preprocess(make_matrix(rng.normal(5, 20, (50, 6))))
        assert out.values.min() >= 0.0 and out.values.max() <= 1.0


class TestPrefix:
    def test_full_prefix_is_identity(self):
        m = make_matrix(np.random.default_rng(0).random((6, 3)))
        assert np.array_equal(sf.prefix(m, 6).values, m.values)

    def test_single_row(self):
        m = make_matrix(np.random.default_rng(0).random((6, 3)))
        assert sf.prefix(m, 1).m == 1

    def test_out_of_range(self):
        m = make_matrix(np.random.default_rng(0).random((6, 3)))
        with pytest.raises(OutOfRange):
            sf.prefix(m, 0)
        with pytest.raises(OutOfRange):
            sf.prefix(m, 7)

    @given(st.integers(1, 10), st.integers(1, 10))
    @settings(max_examples=30, deadline=None)
    def test_nesting(self, a, b):
        t1, t2 = min(a, b), max(a, b)
        m = make_matrix(np.random.default_rng(3).random((10, 4)))
        assert np.array_equal(sf.prefix(m, t1).values, sf.prefix(m, t2).values[:t1])

    def test_tail_then_prefix_matches_rows(self):
        m = make_matrix(np.random.default_rng(1).random((10, 2)))
        part = sf.prefix(sf.tail(m, 4), 3)
        assert np.array_equal(part.values, m.values[3:6])


class TestRoundTrip:
    @given(seed=st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_bit_exact(self, seed, tmp_path_factory):
        rng = np.random.default_rng(seed)
        vals = rng.normal(0, 1, (5, 3)) * 10.0 ** rng.integers(-12, 12, (5, 3))
        m = make_matrix(vals, targets=rng.random(5))
        path = tmp_path_factory.mktemp("rt") / "m.csv"
        sf.write_trace(m, path)
        back = sf.load_trace(path, target_column="y")
        assert np.array_equal(back.values, m.values)
        assert np.array_equal(back.targets, m.targets)

    def test_nan_round_trip(self, tmp_path):
        vals = np.array([[1.0, np.nan], [2.0, 3.0]])
        m = make_matrix(vals)
        sf.write_trace(m, tmp_path / "m.csv")
        back = sf.load_trace(tmp_path / "m.csv")
        assert np.isnan(back.values[0, 1])
        assert back.values[1, 1] == 3.0


class TestDesignMatrix:
    def test_immutable(self):
        m = make_matrix(np.ones((3, 2)))
        with pytest.raises(ValueError):
            m.values[0, 0] = 5.0

    def test_restrict_orders_by_index(self):
        m = make_matrix(np.arange(12.0).reshape(3, 4))
        picked = sf.restrict(m, [m.feature_ids[2], m.feature_ids[0]])
        assert [f.index for f in picked.feature_ids] == [0, 2]
        assert np.array_equal(picked.values, m.values[:, [0, 2]])

    def test_sample_accessor(self):
        m = make_matrix(np.arange(6.0).reshape(3, 2), targets=np.array([9.0, 8.0, 7.0]))
        s = m.sample(1)
        assert s.time_index == 2 and s.target == 8.0
        assert s.values.tolist() == [2.0, 3.0]
