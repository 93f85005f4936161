import numpy as np
import numpy.testing as npt
import pytest

from hec_adapt import data, detectors, nn, scoring
from hec_adapt.detectors import ModelSpec, flop_estimate, standard_specs


@pytest.fixture(scope="module")
def train_stats():
    series = data.synthesize(weeks=8, anomalous_weeks=0, noise_sigma=0.05, seed=11)
    return series, data.fit_stats(series.samples)


@pytest.fixture(scope="module")
def normal_windows(train_stats):
    series, stats = train_stats
    return data.series_windows(series, stats)


@pytest.fixture(scope="module")
def small_trained(normal_windows):
    spec = ModelSpec("AE-IoT", (672, 201, 672), epochs=200)
    hyper = detectors.default_hyper(spec, seed=3)
    return detectors.train_detector(spec, normal_windows, hyper)


class TestStandardSpecs:
    def test_param_counts(self):
        iot, edge, cloud = standard_specs()
        assert iot.param_count == 271_017
        assert cloud.param_count == 1_085_077
        # the published table prints 949,468 for the edge model, which is the
        # count of a 672-470-336-470-672 network, not of the printed dims;
        # we follow the printed dims
        assert edge.param_count == 588_201

    def test_epoch_budgets(self):
        assert [s.epochs for s in standard_specs()] == [4000, 6000, 8000]

    def test_flop_values_within_one_percent_of_published(self):
        published = [1.35e6, 2.93e6, 5.41e6]
        for spec, pub in zip(standard_specs(), published):
            assert abs(flop_estimate(spec) - pub) / pub < 0.01

    def test_flop_ordering(self):
        iot, edge, cloud = standard_specs()
        assert iot.flop < edge.flop < cloud.flop

    def test_layer_specs_activations(self):
        edge = standard_specs()[1]
        layers = edge.layer_specs()
        assert [l.activation for l in layers] == ["tanh", "tanh", "tanh", "identity"]
        assert layers[0].input_dim == 672 and layers[-1].output_dim == 672

    def test_flop_is_pure_function_of_dims(self):
        spec = ModelSpec("AE-IoT", (672, 10, 672), epochs=1)
        assert flop_estimate(spec) == round(5 * spec.param_count)

    def test_non_week_dims_rejected(self):
        with pytest.raises(ValueError, match="672"):
            ModelSpec("AE-IoT", (100, 50, 100), epochs=1)


class TestTrainDetector:
    def test_rejects_abnormal_weeks(self):
        series = data.synthesize(weeks=10, anomalous_weeks=3, seed=1)
        stats = data.fit_stats(series.samples)
        windows = data.series_windows(series, stats)
        spec = ModelSpec("AE-IoT", (672, 201, 672), epochs=1)
        with pytest.raises(ValueError, match="anomalous day"):
            detectors.train_detector(spec, windows, detectors.default_hyper(spec))

    def test_seeded_runs_identical(self, normal_windows):
        spec = ModelSpec("AE-IoT", (672, 201, 672), epochs=2)
        hyper = detectors.default_hyper(spec, seed=8)
        a = detectors.train_detector(spec, normal_windows[:3], hyper)
        b = detectors.train_detector(spec, normal_windows[:3], hyper)
        for wa, wb in zip(a.params.weights, b.params.weights):
            assert np.array_equal(wa, wb)
        assert a.error_model == b.error_model

    def test_constant_zero_input_is_a_perfect_fixed_point(self):
        # all-zero windows are reconstructed exactly from the start (zero-init
        # biases), so the reconstruction error is 0 and the degenerate
        # error-model fit is refused with the documented message
        windows = [
            data.WeekWindow(index=i, values=np.zeros(672), day_labels=(False,) * 7)
            for i in range(3)
        ]
        spec = ModelSpec("AE-IoT", (672, 201, 672), epochs=5)
        hyper = nn.TrainHyper(learning_rate=0.01, l2_lambda=0.0, dropout_rate=0.3,
                              epochs=5, seed=5)
        with pytest.raises(ValueError, match="noise floor"):
            detectors.train_detector(spec, windows, hyper)

    def test_near_constant_input_reconstructs_to_near_zero(self):
        rng = np.random.default_rng(5)
        windows = [
            data.WeekWindow(index=i, values=1e-3 * rng.standard_normal(672),
                            day_labels=(False,) * 7)
            for i in range(3)
        ]
        spec = ModelSpec("AE-IoT", (672, 201, 672), epochs=20)
        hyper = nn.TrainHyper(learning_rate=0.01, l2_lambda=0.0, dropout_rate=0.3,
                              epochs=20, seed=5)
        det = detectors.train_detector(spec, windows, hyper)
        errors = np.abs(detectors.reconstruct(det, windows[0].values) - windows[0].values)
        assert errors.mean() < 0.01

    def test_training_curve_block_means_non_increasing(self, small_trained):
        curve = small_trained.training_log.block_means(6)
        drop = curve[0] - curve[-1]
        assert drop > 0
        slack = 0.01 * drop  # plateau tolerance
        for a, b in zip(curve, curve[1:]):
            assert b <= a + slack

    def test_zero_false_positives_on_training_windows(self, small_trained, normal_windows):
        for window in normal_windows:
            verdict = scoring.classify_days(small_trained, window.values)
            assert not verdict.any_anomalous

    def test_reconstruct_shape_and_determinism(self, small_trained, normal_windows):
        out1 = detectors.reconstruct(small_trained, normal_windows[0].values)
        out2 = detectors.reconstruct(small_trained, normal_windows[0].values)
        assert out1.shape == (672,)
        npt.assert_array_equal(out1, out2)

    def test_reconstruct_length_checked(self, small_trained):
        with pytest.raises(ValueError, match="672"):
            detectors.reconstruct(small_trained, np.zeros(10))

    def test_fresh_normal_week_scores_mostly_above_threshold(self, small_trained, train_stats):
        # unseen normal weeks, standardized with the training stats, stay
        # inside the alarm envelope for at least 95% of their steps
        _, stats = train_stats
        series = data.synthesize(weeks=4, anomalous_weeks=0, noise_sigma=0.05, seed=77)
        model = small_trained.error_model
        for window in data.series_windows(series, stats):
            errors = np.abs(window.values - detectors.reconstruct(small_trained, window.values))
            scores = scoring.log_density(model, errors)
            assert (scores >= model.threshold).mean() >= 0.95

    def test_flipped_day_trips_the_threshold(self, small_trained, train_stats):
        _, stats = train_stats
        series = data.synthesize(weeks=4, anomalous_weeks=4, noise_sigma=0.05, seed=78)
        for window in data.series_windows(series, stats):
            verdict = scoring.classify_days(small_trained, window.values)
            flipped = int(np.argmax(window.day_labels))
            assert verdict.anomalous[flipped]

    def test_empty_train_set_rejected(self):
        spec = ModelSpec("AE-IoT", (672, 201, 672), epochs=1)
        with pytest.raises(ValueError, match="empty"):
            detectors.train_detector(spec, [], detectors.default_hyper(spec))


class TestPersistence:
    def test_bundle_roundtrip(self, small_trained, normal_windows, tmp_path):
        detectors.save_detector(small_trained, tmp_path / "iot")
        loaded = detectors.load_detector(tmp_path / "iot")
        assert loaded.spec == small_trained.spec
        assert loaded.error_model == small_trained.error_model
        npt.assert_array_equal(
            detectors.reconstruct(loaded, normal_windows[0].values),
            detectors.reconstruct(small_trained, normal_windows[0].values),
        )

    def test_bundle_files(self, small_trained, tmp_path):
        detectors.save_detector(small_trained, tmp_path / "iot")
        assert (tmp_path / "iot" / "spec.json").exists()
        assert (tmp_path / "iot" / "params.bin").exists()
        text = (tmp_path / "iot" / "error_model.txt").read_text()
        assert text.startswith("mu ") and "threshold" in text
