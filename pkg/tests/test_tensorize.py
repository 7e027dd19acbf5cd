# tests/test_tensorize.py
import itertools

import numpy as np
import pandas as pd
import pytest

from exceptions import DataError
from tensor_core.tensor import SparseTensor, sparse_to_dense
from tensorize.hankel import dehankelize, desegment, hankelize, hankelize_channels, segment
from tensorize.statistics import (
    central_moments,
    cross_cumulant4,
    cumulant_tensor,
    higher_order_covariance,
    lagged_covariance,
)
from tensorize.table import ColumnSpec, quantize, seasonal_fold, storage_report, tensorize_table


def plan(*coordinates, value="value", aggregation="mean", mapping="sequential"):
    specs = [ColumnSpec(name=name, role="coordinate", mapping=mapping) for name in coordinates]
    return specs + [ColumnSpec(name=value, role="value", aggregation=aggregation)]


class TestTensorizeTable:
    def test_single_row(self):
        table = tensorize_table([{"city": "Oslo", "value": "3.5"}], plan("city"))
        assert table.tensor.shape == (1,)
        assert table.tensor.nnz == 1
        assert table.axis_maps[0].keys == ("Oslo",)

    def test_duplicates_are_averaged(self):
        rows = [
            {"city": "b", "year": "2001", "value": "1"},
            {"city": "b", "year": "2001", "value": "3"},
            {"city": "a", "year": "2000", "value": "5"},
        ]
        table = tensorize_table(rows, plan("city", "year"))
        assert table.tensor.shape == (2, 2)
        assert table.tensor.nnz == 2
        assert table.collision_count == 1
        assert table.pivot_rows == 2
        assert dict(table.tensor.entries) == {(0, 0): 5.0, (1, 1): 2.0}

    def test_numeric_keys_sort_numerically(self):
        rows = [{"age": age, "value": "1"} for age in ("10", "9", "100")]
        table = tensorize_table(rows, plan("age"))
        assert table.axis_maps[0].keys == ("9", "10", "100")
        assert table.axis_maps[0].forward == {"9": 0, "10": 1, "100": 2}

    def test_sum_and_count_aggregations(self):
        rows = [{"k": "x", "value": "2"}, {"k": "x", "value": "5"}, {"k": "y", "value": "1"}]
        summed = tensorize_table(rows, plan("k", aggregation="sum"))
        counted = tensorize_table(rows, plan("k", aggregation="count"))
        assert dict(summed.tensor.entries) == {(0,): 7.0, (1,): 1.0}
        assert dict(counted.tensor.entries) == {(0,): 2.0, (1,): 1.0}

    def test_identity_and_bin_mappings(self):
        frame = pd.DataFrame({"slot": ["0", "2"], "depth": ["3", "17"], "value": ["1", "2"]})
        specs = [
            ColumnSpec(name="slot", role="coordinate", mapping="identity"),
            ColumnSpec(name="depth", role="coordinate", mapping="bin", bin_width=10),
            ColumnSpec(name="value", role="value"),
        ]
        table = tensorize_table(frame, specs)
        assert table.tensor.shape == (3, 2)
        assert table.axis_maps[1].keys == (0.0, 10.0)
        assert dict(table.tensor.entries) == {(0, 0): 1.0, (2, 1): 2.0}

    def test_empty_values_are_skipped(self):
        rows = [{"k": "a", "value": ""}, {"k": "b", "value": "4"}]
        table = tensorize_table(rows, plan("k"))
        assert table.skipped_rows == 1
        assert table.tensor.shape == (1,)

    def test_unparseable_value_names_row(self):
        rows = [{"k": "a", "value": "1"}, {"k": "b", "value": "oops"}]
        with pytest.raises(DataError, match="Row 3"):
            tensorize_table(rows, plan("k"))

    def test_plan_needs_one_value_column(self):
        with pytest.raises(DataError):
            tensorize_table([{"k": "a"}], [ColumnSpec(name="k", role="coordinate")])

    def test_zero_rows(self):
        with pytest.raises(DataError):
            tensorize_table([], plan("k"))

    def test_bin_mapping_needs_width(self):
        with pytest.raises(ValueError):
            ColumnSpec(name="depth", role="coordinate", mapping="bin")

    def test_storage_report(self):
        rows = [{"a": a, "b": b, "value": "1"} for a, b in [("x", "1"), ("y", "2"), ("y", "1")]]
        table = tensorize_table(rows, plan("a", "b"))
        report = storage_report(table, n_rows=3, n_columns=3)
        assert report.shape == [2, 2]
        assert report.indexed_cells == 9
        assert report.pivot_rows == 3
        assert report.tensor_size == 4
        assert report.nnz == 3
        assert report.density == pytest.approx(0.75)
        assert report.sparsity == pytest.approx(0.25)
        assert report.dense_bytes == 32
        assert report.fits_memory_budget
        assert report.note is None

    def test_storage_report_notes_a_disagreeing_reference(self):
        rows = [{"a": a, "b": b, "value": "1"} for a, b in [("x", "1"), ("y", "2"), ("y", "1")]]
        table = tensorize_table(rows, plan("a", "b"))
        report = storage_report(table, n_rows=3, n_columns=3, reference_sparsity=0.994)
        assert report.reference_sparsity == 0.994
        assert "25.00%" in report.note and "99.40%" in report.note
        assert storage_report(table, n_rows=3, n_columns=3, reference_sparsity=0.25).note is None


class TestQuantize:
    def test_bin_size_one_is_identity(self):
        t = SparseTensor.from_entries((2, 5), [((0, 1), 1.0), ((1, 4), 2.0)])
        assert quantize(t, 2, 1) is t

    def test_constant_months_average_to_one_value(self):
        t = SparseTensor.from_entries((12,), [((m,), 4.5) for m in range(12)])
        yearly = quantize(t, 1, 12)
        assert yearly.shape == (1,)
        assert dict(yearly.entries) == {(0,): 4.5}

    def test_months_to_calendar_years(self, rng):
        months = 3239
        values = rng.uniform(-10, 30, size=(2, months))
        t = SparseTensor.from_entries((2, months), [((c, m), values[c, m]) for c in range(2) for m in range(months)])
        assert quantize(t, 2, 12).shape == (2, 270)
        yearly = quantize(t, 2, 12, offset=10)
        assert yearly.shape == (2, 271)
        dense = sparse_to_dense(yearly)
        assert dense[1, 0] == pytest.approx(values[1, :2].mean())
        assert dense[0, 5] == pytest.approx(values[0, 50:62].mean())
        assert dense[0, 270] == pytest.approx(values[0, 3230:].mean())

    def test_sum_preserves_total(self, rng):
        entries = [((i, j), float(rng.integers(1, 5))) for i in range(3) for j in range(10)]
        t = SparseTensor.from_entries((3, 10), entries)
        binned = quantize(t, 2, 4, aggregation="sum")
        assert sum(binned.entries.values()) == sum(t.entries.values())

    def test_mode_out_of_range(self):
        with pytest.raises(DataError):
            quantize(SparseTensor((3,), {}), 2, 2)

    def test_seasonal_fold(self):
        t = SparseTensor.from_entries((24,), [((m,), float(m)) for m in range(24)])
        folded = seasonal_fold(t, 1, 12)
        assert folded.shape == (12,)
        assert folded.entries[(3,)] == pytest.approx((3 + 15) / 2)


class TestHankel:
    def test_segment_layout_and_roundtrip(self):
        v = np.arange(6.0)
        t = segment(v, (2, 3))
        assert t[1, 2] == 5.0 and t[1, 0] == 3.0
        np.testing.assert_array_equal(desegment(t), v)
        np.testing.assert_array_equal(segment(v, (6,)), v)
        with pytest.raises(DataError):
            segment(v, (4, 2))

    def test_hankelize_by_definition(self):
        np.testing.assert_array_equal(hankelize([1, 2, 3, 4], 2), [[1, 2, 3], [2, 3, 4]])
        np.testing.assert_array_equal(hankelize([1, 2, 3], 1), [[1, 2, 3]])
        with pytest.raises(DataError):
            hankelize([1, 2, 3], 4)

    def test_anti_diagonals_are_constant(self, rng):
        v = rng.standard_normal(15)
        h = hankelize(v, 6)
        for i, j in itertools.product(range(h.shape[0]), range(h.shape[1])):
            assert h[i, j] == v[i + j]

    def test_sinusoid_has_rank_two(self):
        h = hankelize(np.cos(0.3 * np.arange(100)), 20)
        s = np.linalg.svd(h, compute_uv=False)
        assert s[2] / s[0] < 1e-10

    def test_channels_match_per_row(self, rng):
        x = rng.standard_normal((3, 50))
        t = hankelize_channels(x, 10)
        assert t.shape == (10, 41, 3)
        for c in range(3):
            np.testing.assert_array_equal(t[:, :, c], hankelize(x[c], 10))

    def test_identical_channels_give_equal_slices(self, rng):
        row = rng.standard_normal(20)
        t = hankelize_channels(np.vstack([row, row]), 5)
        np.testing.assert_array_equal(t[:, :, 0], t[:, :, 1])

    def test_roundtrip_is_bit_exact(self, rng):
        v = rng.standard_normal(37)
        for window in (1, 5, 19, 37):
            np.testing.assert_array_equal(dehankelize(hankelize(v, window)), v)

    def test_dehankelize_averages_anti_diagonals(self):
        np.testing.assert_allclose(dehankelize([[1.0, 3.0], [5.0, 7.0]]), [1.0, 4.0, 7.0])

    def test_geometric_outer_product(self):
        r = 0.9
        a, b = r ** np.arange(4), 2.0 * r ** np.arange(6)
        v = dehankelize(np.outer(a, b))
        np.testing.assert_allclose(v[1:] / v[:-1], r, rtol=1e-12)


class TestStatistics:
    def test_central_moments(self):
        assert central_moments([4.0, 4.0, 4.0], 2) == 0.0
        assert central_moments([1.0, 2.0, 3.0], 2) == pytest.approx(2 / 3)
        assert central_moments([-1.0, 0.0, 1.0], 3) == 0.0
        assert central_moments([1.0, 5.0], 1) == 0.0
        with pytest.raises(DataError):
            central_moments([], 2)

    def test_rademacher_fourth_cumulant(self):
        kappa = cumulant_tensor(np.array([1.0, -1.0, 1.0, -1.0]), 4)
        assert kappa.shape == (1, 1, 1, 1)
        assert kappa[0, 0, 0, 0] == -2.0

    def test_gaussian_fourth_cumulant_vanishes(self, rng):
        kappa = cumulant_tensor(rng.standard_normal(100_000), 4)
        assert abs(kappa[0, 0, 0, 0]) < 0.1

    def test_cumulants_are_exactly_symmetric(self, rng):
        x = rng.standard_normal((200, 3)) ** 3
        for order in (3, 4):
            kappa = cumulant_tensor(x, order)
            for permutation in itertools.permutations(range(order)):
                np.testing.assert_array_equal(kappa, kappa.transpose(permutation))

    def test_order_two_is_covariance(self, rng):
        x = rng.standard_normal((50, 3))
        np.testing.assert_allclose(cumulant_tensor(x, 2), np.cov(x.T, bias=True), atol=1e-12)

    def test_independent_cross_entries_vanish(self, rng):
        x = rng.uniform(-1, 1, size=(200_000, 2))
        kappa = cumulant_tensor(x, 4)
        assert abs(kappa[0, 0, 0, 1]) < 0.01
        assert abs(kappa[0, 1, 1, 1]) < 0.01

    def test_cross_cumulant_matches_tensor_entry(self, rng):
        x = rng.standard_normal((500, 4)) ** 2
        kappa = cumulant_tensor(x, 4)
        assert cross_cumulant4(*x.T) == pytest.approx(kappa[0, 1, 2, 3], abs=1e-12)

    def test_order_out_of_range(self):
        with pytest.raises(DataError):
            cumulant_tensor(np.ones((5, 2)), 5)
        with pytest.raises(DataError):
            cumulant_tensor(np.ones((1, 2)), 3)

    def test_lag_zero_is_covariance(self, rng):
        x = rng.standard_normal((3, 40))
        slices = lagged_covariance(x, [0])
        assert slices.shape == (3, 3, 1)
        np.testing.assert_allclose(slices[:, :, 0], np.cov(x, bias=True), atol=1e-12)

    def test_white_noise_lag_one(self, rng):
        t = 5000
        x = rng.standard_normal((2, t))
        assert np.all(np.abs(lagged_covariance(x, [1])) < 5.0 / np.sqrt(t))

    def test_ar1_lag_one(self, rng):
        phi, t = 0.8, 50_000
        noise = rng.standard_normal(t)
        x = np.empty(t)
        x[0] = noise[0]
        for k in range(1, t):
            x[k] = phi * x[k - 1] + noise[k]
        lag1 = lagged_covariance(x, [1])[0, 0, 0]
        assert lag1 == pytest.approx(phi * x.var(), rel=0.1)

    def test_lag_too_large(self):
        with pytest.raises(DataError):
            lagged_covariance(np.ones((1, 5)), [5])

    def test_higher_order_covariance(self, rng):
        observations = [rng.standard_normal((2, 2)) for _ in range(30)]
        cov = higher_order_covariance(observations)
        assert cov.shape == (2, 2, 2, 2)
        flat = np.array([o.ravel() for o in observations])
        expected = np.cov(flat.T, bias=True)
        assert cov[0, 1, 1, 0] == pytest.approx(expected[1, 2])

    def test_vector_observations_reduce_to_covariance(self, rng):
        observations = list(rng.standard_normal((20, 3)))
        np.testing.assert_allclose(higher_order_covariance(observations), np.cov(np.array(observations).T, bias=True))

    def test_identical_observations_give_zero(self):
        assert not higher_order_covariance([np.ones((2, 2))] * 3).any()

    def test_observation_shape_mismatch(self):
        with pytest.raises(DataError):
            higher_order_covariance([np.ones(2), np.ones(3)])
