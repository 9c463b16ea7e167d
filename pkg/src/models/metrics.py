"""
ROC-AUC : statistique de Mann-Whitney sur les rangs (ex æquo = ½)
"""

from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata
from sklearn.metrics import roc_curve

from src.errors import SingleClass

# grille fpr commune pour moyenner les courbes de plusieurs folds
MEAN_FPR = np.linspace(0.0, 1.0, 101)


@dataclass(frozen=True)
class RocResult:
    auc: float
    fpr: tuple
    tpr: tuple

    @property
    def curve(self):
        return list(zip(self.fpr, self.tpr))


def roc_auc(scores, labels):
    """
    Raises:
        SingleClass: une seule classe dans labels
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(int)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass(f"ROC-AUC needs both classes (positives={n_pos}, negatives={n_neg})")

    ranks = rankdata(scores)
    auc = (ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)

    fpr, tpr, _ = roc_curve(labels, scores, drop_intermediate=False)
    return RocResult(auc=float(auc), fpr=tuple(fpr.tolist()), tpr=tuple(tpr.tolist()))


def mean_roc(results):
    """Courbe moyenne (tpr interpolé sur MEAN_FPR)."""
    if not results:
        return MEAN_FPR.tolist(), [0.0] * len(MEAN_FPR)
    tprs = [np.interp(MEAN_FPR, r.fpr, r.tpr) for r in results]
    mean_tpr = np.mean(tprs, axis=0)
    mean_tpr[0] = 0.0
    mean_tpr[-1] = 1.0
    return MEAN_FPR.tolist(), mean_tpr.tolist()
