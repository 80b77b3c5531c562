import math

import numpy as np
import pytest

import slummap


def test_haralick_uniform_matrix():
    h = slummap.haralick(np.full((2, 2), 0.25))
    assert h["contrast"] == pytest.approx(0.5, abs=1e-12)
    assert h["entropy"] == pytest.approx(math.log(4), abs=1e-12)
    assert h["homogeneity"] == pytest.approx(0.75, abs=1e-12)


def test_cooccurrence_two_rows():
    window = np.array([[0, 0], [1, 1]], dtype=np.uint8)
    horizontal = slummap.cooccurrence(window, 2, 0)
    np.testing.assert_array_equal(horizontal, [[0.5, 0.0], [0.0, 0.5]])
    vertical = slummap.cooccurrence(window, 2, 90)
    np.testing.assert_array_equal(vertical, [[0.0, 0.5], [0.5, 0.0]])


def test_quantize_breakpoints():
    q = slummap.quantize(np.array([0, 2047, 2048, 65535], dtype=np.uint16), 32)
    assert q.tolist() == [0, 0, 1, 31]


def test_band_stack_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    samples = rng.integers(0, 65536, size=(3, 4, 5), dtype=np.uint16)
    stack = slummap.BandStack(samples, ["B2", "B3", "B4"])
    slummap.save_band_stack(stack, tmp_path / "s.hdr")
    loaded = slummap.load_band_stack(tmp_path / "s.hdr")
    np.testing.assert_array_equal(loaded.samples, samples)
    assert loaded.band_names == ["B2", "B3", "B4"]


def test_bad_mask_value():
    with pytest.raises(slummap.RasterError):
        slummap.LabelMask(np.array([[0, 255]], dtype=np.uint8))


def test_texture_feature_count():
    stack, _ = slummap.make_two_texture_scene(32, 32)
    features = slummap.extract_texture(stack, window=7)
    assert len(features["names"]) == 28
    assert features["values"].shape == (28, 32, 32)
    assert features["valid"].sum() == 26 * 26
    assert len(slummap.extract_spectral(stack)["names"]) == 10


def test_cca_separating_feature():
    x = np.array([[-1.0], [1.0], [-1.0], [1.0], [1.0], [-1.0]])
    labels = np.array([0, 1, 0, 1, 1, 0], dtype=np.uint8)
    projections, correlations = slummap.cca_fit(x, labels)
    assert projections.shape == (1, 1)
    assert correlations[0] == pytest.approx(1.0, abs=1e-6)


def test_forest_blobs_and_persistence(tmp_path):
    rng = np.random.default_rng(1)
    labels = np.arange(200) % 2
    x = rng.normal(size=(200, 2)) + np.where(labels[:, None] == 1, 4.0, -4.0) * [1, -1]
    model = slummap.train_forest(x, labels.astype(np.uint8))
    assert model.n_trees == 10
    predicted, proba = slummap.predict(model, x)
    assert (predicted == labels).all()
    assert np.allclose(proba.sum(axis=1), 1.0)

    model.save(tmp_path / "m.json")
    again = slummap.CcfModel.load(tmp_path / "m.json")
    assert again.to_json() == model.to_json()
    assert slummap.train_forest(x, labels.astype(np.uint8)).to_json() == model.to_json()


def test_single_class_training_fails():
    with pytest.raises(slummap.DegenerateData):
        slummap.train_forest(np.arange(6.0).reshape(3, 2), np.ones(3, dtype=np.uint8))


def test_evaluate_example():
    report = slummap.evaluate(np.array([1, 1, 0, 0], np.uint8), np.array([1, 0, 1, 0], np.uint8))
    assert slummap.format_percent(report["iou_slum"]) == "33.3"
    assert slummap.format_percent(report["acc_non"]) == "50.0"
    assert report["confusion"] == [[1, 1], [1, 1]]


def test_small_experiment_is_deterministic():
    stack, mask = slummap.make_two_texture_scene(64, 64)
    a = slummap.run_experiment(stack, mask, window=7, n_trees=3)
    b = slummap.run_experiment(stack, mask, window=7, n_trees=3)
    assert a["csv"] == b["csv"]
    np.testing.assert_array_equal(a["map"], b["map"])
    assert set(np.unique(a["map"])) <= {0, 128, 255}
