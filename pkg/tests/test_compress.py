# tests/test_compress.py
import numpy as np
import pytest

from compress.tt_layer import (
    compression_report,
    layer_to_matrix,
    matrix_to_tt_layer,
    read_layer,
    tt_layer_forward,
    tt_layer_param_counts,
    write_layer,
)
from exceptions import DataError


@pytest.fixture
def dense_layer(rng):
    weights = rng.standard_normal((16, 16))
    bias = rng.standard_normal(16)
    return weights, bias


class TestConversion:
    def test_single_core_is_the_matrix(self, rng):
        w, b = rng.standard_normal((3, 5)), rng.standard_normal(3)
        layer = matrix_to_tt_layer(w, b, m_dims=[5], n_dims=[3])
        assert layer.ranks == (1, 1)
        x = rng.standard_normal(5)
        np.testing.assert_allclose(tt_layer_forward(layer, x), w @ x + b, atol=1e-12)

    def test_kronecker_weights_have_unit_ranks(self, rng):
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((4, 5))
        layer = matrix_to_tt_layer(np.kron(a, b), None, m_dims=[3, 5], n_dims=[2, 4])
        assert layer.ranks == (1, 1, 1)
        np.testing.assert_allclose(layer_to_matrix(layer), np.kron(a, b), atol=1e-12)

    def test_full_rank_forward_matches_dense(self, dense_layer, rng):
        w, b = dense_layer
        layer = matrix_to_tt_layer(w, b, m_dims=[4, 4], n_dims=[4, 4])
        inputs = rng.standard_normal((100, 16))
        np.testing.assert_allclose(tt_layer_forward(layer, inputs), inputs @ w.T + b, atol=1e-8)
        for x in inputs[:5]:
            np.testing.assert_allclose(tt_layer_forward(layer, x), w @ x + b, atol=1e-8)

    def test_three_mode_rectangular(self, rng):
        w, b = rng.standard_normal((12, 30)), rng.standard_normal(12)
        layer = matrix_to_tt_layer(w, b, m_dims=[2, 3, 5], n_dims=[3, 2, 2])
        assert layer.input_size == 30 and layer.output_size == 12
        np.testing.assert_allclose(layer_to_matrix(layer), w, atol=1e-10)

    def test_zero_input_returns_bias(self, dense_layer):
        w, b = dense_layer
        layer = matrix_to_tt_layer(w, b, m_dims=[4, 4], n_dims=[4, 4], max_ranks=2)
        np.testing.assert_array_equal(tt_layer_forward(layer, np.zeros(16)), b)

    def test_forward_is_affine(self, dense_layer, rng):
        w, b = dense_layer
        layer = matrix_to_tt_layer(w, b, m_dims=[4, 4], n_dims=[4, 4], max_ranks=3)
        x, y = rng.standard_normal(16), rng.standard_normal(16)
        lhs = tt_layer_forward(layer, 2.0 * x + y) - b
        rhs = 2.0 * (tt_layer_forward(layer, x) - b) + (tt_layer_forward(layer, y) - b)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    def test_truncation_tolerance(self, dense_layer):
        w, b = dense_layer
        layer = matrix_to_tt_layer(w, b, m_dims=[4, 4], n_dims=[4, 4], tol=0.5)
        error = np.linalg.norm(layer_to_matrix(layer) - w) / np.linalg.norm(w)
        assert error <= 0.5 + 1e-12

    def test_truncated_output_error_within_operator_bound(self, dense_layer, rng):
        w, b = dense_layer
        layer = matrix_to_tt_layer(w, b, m_dims=[4, 4], n_dims=[4, 4], max_ranks=2)
        gap = np.linalg.norm(w - layer_to_matrix(layer))
        assert gap > 0
        for x in rng.standard_normal((20, 16)):
            error = np.linalg.norm(tt_layer_forward(layer, x) - (w @ x + b))
            assert error <= gap * np.linalg.norm(x) + 1e-10

    def test_bad_factorization(self, rng):
        with pytest.raises(DataError):
            matrix_to_tt_layer(rng.standard_normal((16, 16)), None, m_dims=[4, 5], n_dims=[4, 4])
        with pytest.raises(DataError):
            matrix_to_tt_layer(rng.standard_normal((16, 16)), None, m_dims=[16], n_dims=[4, 4])

    def test_input_length_mismatch(self, dense_layer):
        layer = matrix_to_tt_layer(*dense_layer, m_dims=[4, 4], n_dims=[4, 4])
        with pytest.raises(DataError):
            tt_layer_forward(layer, np.ones(15))


class TestCompressionReport:
    def test_large_layer_counts(self):
        report = tt_layer_param_counts([32, 32], [32, 32], [1, 8, 1])
        assert report.tt_weight_params == 16_384
        assert report.dense_weight_params == 1_048_576
        assert report.weight_ratio == 64.0
        assert report.dense_params == 1_048_576 + 1024
        assert report.tt_params == 16_384 + 1024

    def test_ratio_shrinks_as_ranks_grow(self):
        ratios = [tt_layer_param_counts([8, 8, 8], [8, 8, 8], [1, r, r, 1]).ratio for r in (1, 2, 4, 8)]
        assert all(later < earlier for earlier, later in zip(ratios, ratios[1:]))

    def test_report_of_converted_layer(self, dense_layer):
        layer = matrix_to_tt_layer(*dense_layer, m_dims=[4, 4], n_dims=[4, 4], max_ranks=2)
        report = compression_report(layer)
        assert report.ranks == [1, 2, 1]
        assert report.tt_weight_params == 2 * 16 + 2 * 16

    def test_invalid_ranks(self):
        with pytest.raises(DataError):
            tt_layer_param_counts([4, 4], [4, 4], [2, 2, 1])
        with pytest.raises(DataError):
            tt_layer_param_counts([4, 4], [4, 4], [1, 1])


class TestLayerFile:
    def test_file_roundtrip(self, tmp_path, dense_layer, rng):
        layer = matrix_to_tt_layer(*dense_layer, m_dims=[4, 4], n_dims=[4, 4], max_ranks=3)
        path = tmp_path / "tt_layer.txt"
        write_layer(path, layer)
        loaded = read_layer(path)
        assert loaded.ranks == layer.ranks
        x = rng.standard_normal(16)
        np.testing.assert_array_equal(tt_layer_forward(loaded, x), tt_layer_forward(layer, x))

    def test_wrong_kind(self, tmp_path):
        path = tmp_path / "model.txt"
        path.write_text("kind: cp\n")
        with pytest.raises(DataError, match="tt-layer"):
            read_layer(path)
