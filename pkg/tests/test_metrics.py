import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from src.errors import SingleClass
from src.models.metrics import MEAN_FPR, mean_roc, roc_auc


def brute_force_auc(scores, labels):
    """Comptage direct des paires (positif, négatif), ex æquo = ½."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    pos = scores[labels == 1][:, None]
    neg = scores[labels == 0][None, :]
    return float(((pos > neg).sum() + 0.5 * (pos == neg).sum()) / (pos.size * neg.size))


@pytest.mark.parametrize("scores, labels, expected", [
    ([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1], 1.0),
    ([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1], 0.75),
    ([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1], 0.5),
    ([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1], 0.0),
])
def test_known_values(scores, labels, expected):
    assert roc_auc(scores, labels).auc == pytest.approx(expected)


def test_single_class_is_rejected():
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [1, 1])
    with pytest.raises(SingleClass):
        roc_auc([0.1, 0.2], [0, 0])


def test_matches_pair_counting_with_ties():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        labels = rng.integers(0, 2, size=n)
        labels[:2] = [0, 1]
        scores = rng.integers(0, 6, size=n) / 5.0
        assert roc_auc(scores, labels).auc == pytest.approx(brute_force_auc(scores, labels))


def test_matches_sklearn():
    rng = np.random.default_rng(7)
    labels = rng.integers(0, 2, size=300)
    scores = labels * 0.3 + rng.random(300)
    assert roc_auc(scores, labels).auc == pytest.approx(roc_auc_score(labels, scores))


def test_curve_end_points():
    result = roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert result.curve[0] == (0.0, 0.0)
    assert result.curve[-1] == (1.0, 1.0)
    assert list(result.fpr) == sorted(result.fpr)


def test_mean_roc():
    results = [roc_auc([0.1, 0.9], [0, 1]), roc_auc([0.9, 0.1], [0, 1])]
    fpr, tpr = mean_roc(results)
    assert len(fpr) == len(tpr) == len(MEAN_FPR) == 101
    assert tpr[0] == 0.0 and tpr[-1] == 1.0
    assert all(0.0 <= t <= 1.0 for t in tpr)

    fpr, tpr = mean_roc([])
    assert len(tpr) == 101
