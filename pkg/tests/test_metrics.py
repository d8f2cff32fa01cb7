import json

import numpy as np
import pytest

from genreclf.metrics import (
    ConfusionMatrix,
    append_results_row,
    confusion,
    weighted_metrics,
)


class TestConfusion:
    def test_perfect_predictions_diagonal(self):
        y = np.array([0, 1, 2, 3, 3])
        cm = confusion(y, y, num_classes=4)
        assert np.all(cm.counts == np.diag([1, 1, 1, 2]))

    def test_hand_count_two_classes(self):
        cm = confusion([0, 0, 1, 1], [0, 1, 1, 1], num_classes=2)
        np.testing.assert_array_equal(cm.counts, [[1, 1], [0, 2]])

    def test_empty_inputs(self):
        cm = confusion([], [], num_classes=3)
        assert cm.counts.sum() == 0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion([0, 1], [0], num_classes=2)

    def test_out_of_range_label(self):
        with pytest.raises(ValueError):
            confusion([0, 5], [0, 1], num_classes=2)

    def test_csv_grid(self, tmp_path):
        cm = confusion([0, 1], [1, 1], num_classes=2)
        cm.save_csv(tmp_path / "cm.csv", ("a", "b"))
        lines = (tmp_path / "cm.csv").read_text().splitlines()
        assert lines == [",a,b", "a,0,1", "b,0,1"]


class TestWeightedMetrics:
    def test_hand_computed_fixture(self):
        # per-class: P = (2/3, 1), R = (1, 1/2), F1 = (0.8, 2/3); support (2, 2)
        report = weighted_metrics(ConfusionMatrix(np.array([[2, 0], [1, 1]])))
        assert report.accuracy == pytest.approx(0.75)
        assert report.weighted_precision == pytest.approx(0.5 * (2 / 3) + 0.5 * 1.0, abs=1e-6)
        assert report.weighted_recall == pytest.approx(0.75, abs=1e-6)
        assert report.weighted_f1 == pytest.approx(0.5 * 0.8 + 0.5 * (2 / 3), abs=1e-6)

    def test_diagonal_is_all_ones(self):
        report = weighted_metrics(ConfusionMatrix(np.diag([3, 1, 7])))
        assert report.accuracy == 1.0
        assert report.weighted_precision == 1.0
        assert report.weighted_recall == 1.0
        assert report.weighted_f1 == 1.0

    def test_never_predicted_class_zero_by_convention(self):
        cm = ConfusionMatrix(np.array([[0, 3], [0, 5]]))  # class 0 never predicted
        report = weighted_metrics(cm)
        assert report.per_class_precision[0] == 0.0
        assert report.per_class_f1[0] == 0.0
        assert 0 in report.zero_division_classes
        assert np.isfinite(report.weighted_f1)

    def test_accuracy_equals_weighted_recall_identity(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            counts = rng.integers(0, 20, (4, 4))
            if counts.sum() == 0:
                counts[0, 0] = 1
            report = weighted_metrics(ConfusionMatrix(counts))
            assert report.accuracy == pytest.approx(report.weighted_recall, abs=1e-12)

    def test_permutation_invariance_of_weighted_values(self):
        rng = np.random.default_rng(1)
        counts = rng.integers(0, 30, (5, 5))
        counts[np.diag_indices(5)] += 5
        perm = rng.permutation(5)
        base = weighted_metrics(ConfusionMatrix(counts))
        shuffled = weighted_metrics(ConfusionMatrix(counts[np.ix_(perm, perm)]))
        assert shuffled.accuracy == pytest.approx(base.accuracy)
        assert shuffled.weighted_precision == pytest.approx(base.weighted_precision)
        assert shuffled.weighted_f1 == pytest.approx(base.weighted_f1)
        np.testing.assert_allclose(shuffled.per_class_f1, base.per_class_f1[perm])

    def test_bounds_and_f1_below_max(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            counts = rng.integers(0, 10, (3, 3))
            if counts.sum() == 0:
                continue
            r = weighted_metrics(ConfusionMatrix(counts))
            for v in (r.accuracy, r.weighted_precision, r.weighted_recall, r.weighted_f1):
                assert 0.0 <= v <= 1.0
            for p, rec, f1 in zip(r.per_class_precision, r.per_class_recall, r.per_class_f1):
                assert f1 <= max(p, rec) + 1e-12

    def test_empty_matrix_rejected(self):
        with pytest.raises(ValueError):
            weighted_metrics(ConfusionMatrix(np.zeros((3, 3), dtype=np.int64)))

    def test_json_roundtrip(self, tmp_path):
        report = weighted_metrics(ConfusionMatrix(np.array([[2, 0], [1, 1]])))
        report.save_json(tmp_path / "r.json")
        back = json.loads((tmp_path / "r.json").read_text())
        assert back["accuracy"] == pytest.approx(0.75)
        assert len(back["per_class_f1"]) == 2


def test_results_csv_accumulates_rows(tmp_path):
    report = weighted_metrics(ConfusionMatrix(np.diag([5, 5])))
    path = tmp_path / "results.csv"
    append_results_row(path, "cnn", "mel", report)
    append_results_row(path, "hybrid", "stft", report)
    lines = path.read_text().splitlines()
    assert lines[0] == "model,representation,precision,recall,f1,accuracy"
    assert lines[1].startswith("cnn,mel,1.0000")
    assert lines[2].startswith("hybrid,stft,")
