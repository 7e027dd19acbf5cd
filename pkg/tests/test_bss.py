# tests/test_bss.py
import math

import numpy as np
import pytest
from pydantic import ValidationError

from bss.harness import compare_methods, signals_frame, write_comparison_csv, write_signals_csv
from bss.methods import align_sources, bss_fastica, bss_multiway, bss_pca, dominant_frequency
from bss.scenario import ScenarioSpec, generate_scenario
from exceptions import DataError


@pytest.fixture(scope="module")
def default_scenario():
    return generate_scenario(ScenarioSpec())


@pytest.fixture(scope="module")
def default_comparison(default_scenario):
    return compare_methods(default_scenario)


class TestScenario:
    def test_same_seed_same_scenario(self):
        first, second = generate_scenario(ScenarioSpec(noise=0.1)), generate_scenario(ScenarioSpec(noise=0.1))
        np.testing.assert_array_equal(first.mixtures, second.mixtures)
        np.testing.assert_array_equal(first.mixing, second.mixing)

    def test_default_sources_are_nearly_uncorrelated(self, default_scenario):
        s = default_scenario.sources
        assert abs(np.corrcoef(s)[0, 1]) < 0.05
        np.testing.assert_allclose(np.mean(s ** 2, axis=1), 1.0)
        assert default_scenario.mixtures.shape == (3, 400)

    def test_identity_mixing_of_one_source(self):
        scenario = generate_scenario(ScenarioSpec(n_sources=1, n_channels=1, frequencies=[0.5], mixing=[[1.0]]))
        np.testing.assert_array_equal(scenario.mixtures, scenario.sources)

    def test_damped_exponential(self):
        scenario = generate_scenario(ScenarioSpec(kinds=["sinusoid", "damped-exponential"], damping=0.01))
        decaying = scenario.sources[1]
        assert np.abs(decaying[:50]).max() > np.abs(decaying[-50:]).max()

    def test_fewer_channels_than_sources(self):
        with pytest.raises(DataError):
            generate_scenario(ScenarioSpec(n_sources=2, n_channels=1))

    def test_invalid_frequencies(self):
        with pytest.raises(ValidationError):
            ScenarioSpec(frequencies=[0.3, 0.3])
        with pytest.raises(ValidationError):
            ScenarioSpec(frequencies=[0.3])

    def test_rank_deficient_mixing(self):
        with pytest.raises(DataError):
            generate_scenario(ScenarioSpec(mixing=[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]))


class TestMethods:
    def test_pca_with_full_basis_has_no_residual(self, default_scenario):
        result = bss_pca(default_scenario.mixtures[:2], 2)
        assert result.residual < 1e-10

    def test_single_channel_pca(self):
        scenario = generate_scenario(ScenarioSpec(n_sources=1, n_channels=1, frequencies=[0.4]))
        result = bss_pca(scenario.mixtures, 1, reference=scenario.sources)
        assert result.correlations[0] == pytest.approx(1.0, abs=1e-10)

    def test_fastica_separates_heavy_tailed_sources(self, rng):
        sources = rng.laplace(size=(2, 3000))
        angle = 0.6
        rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        result = bss_fastica(rotation @ sources, 2, seed=0, reference=sources)
        assert min(result.correlations) > 0.95
        assert result.converged

    def test_fastica_is_seeded(self, default_scenario):
        x = default_scenario.mixtures
        first, second = bss_fastica(x, 2, seed=4), bss_fastica(x, 2, seed=4)
        np.testing.assert_array_equal(first.sources, second.sources)

    def test_multiway_single_sinusoid(self):
        scenario = generate_scenario(ScenarioSpec(n_sources=1, n_channels=1, frequencies=[0.3], n_samples=200))
        result = bss_multiway(scenario.mixtures, 1, reference=scenario.sources, seed=0)
        assert result.correlations[0] > 0.99

    def test_multiway_default_scenario(self, default_comparison):
        multiway = default_comparison.results["multiway"]
        assert min(multiway.correlations) > 0.95
        assert multiway.mean_correlation >= default_comparison.results["pca"].mean_correlation

    def test_multiway_window_too_small(self, default_scenario):
        with pytest.raises(DataError):
            bss_multiway(default_scenario.mixtures, 2, window=1)

    def test_too_many_sources(self, default_scenario):
        with pytest.raises(DataError):
            bss_pca(default_scenario.mixtures, 4)

    def test_dominant_frequency(self):
        t = np.arange(400)
        assert dominant_frequency(np.cos(2 * np.pi * 20 * t / 400) + 3.0) == pytest.approx(2 * np.pi * 20 / 400)


class TestAlignment:
    def test_sign_and_order_do_not_matter(self, default_scenario):
        s = default_scenario.sources
        flipped = np.array([-s[1], 2.0 * s[0]])
        np.testing.assert_allclose(align_sources(s, flipped), [1.0, 1.0], atol=1e-12)

    def test_correlations_are_bounded(self, rng):
        truth, estimate = rng.standard_normal((3, 50)), rng.standard_normal((3, 50))
        assert all(0.0 <= c <= 1.0 for c in align_sources(truth, estimate))

    def test_shape_mismatch(self, rng):
        with pytest.raises(DataError):
            align_sources(rng.standard_normal((2, 10)), rng.standard_normal((3, 10)))


class TestHarness:
    def test_one_row_per_method(self, default_comparison):
        assert [row.method for row in default_comparison.rows] == ["pca", "fastica", "multiway"]
        for row in default_comparison.rows:
            assert row.error is None
            assert math.isfinite(row.residual) and row.residual >= 0
            assert len(row.correlations) == 2

    def test_deterministic(self, default_scenario, default_comparison):
        again = compare_methods(default_scenario)
        assert [row.model_dump() for row in again.rows] == [row.model_dump() for row in default_comparison.rows]

    def test_failing_method_gets_error_row(self, default_scenario):
        comparison = compare_methods(default_scenario, ["pca", "multiway"], window=1)
        assert comparison.rows[0].error is None
        assert "Window" in comparison.rows[1].error
        assert "multiway" not in comparison.results

    def test_linear_algebra_failure_gets_error_row(self, monkeypatch, default_scenario):
        def diverging(*args, **kwargs):
            raise np.linalg.LinAlgError("SVD did not converge")

        monkeypatch.setattr("bss.harness.bss_pca", diverging)
        comparison = compare_methods(default_scenario, ["pca", "fastica"])
        assert "SVD did not converge" in comparison.rows[0].error
        assert comparison.rows[1].error is None
        assert list(comparison.results) == ["fastica"]

    def test_empty_method_list_writes_header_only(self, tmp_path, default_scenario):
        path = tmp_path / "comparison.csv"
        write_comparison_csv(path, compare_methods(default_scenario, []).rows, 2)
        assert path.read_text() == "method,residual,mean_correlation,converged,error,correlation_1,correlation_2\n"

    def test_signals_columns(self, tmp_path, default_scenario, default_comparison):
        frame = signals_frame(default_scenario, default_comparison.results)
        assert list(frame.columns[:6]) == ["time", "original_1", "original_2", "mixed_1", "mixed_2", "mixed_3"]
        assert "multiway_estimate_2" in frame.columns
        assert len(frame) == 400
        path = tmp_path / "signals.csv"
        write_signals_csv(path, default_scenario, default_comparison.results)
        assert path.read_text().splitlines()[1].startswith("0,")
