"""
Entraînement : prétraitement + GBDT sur une matrice de features

Le préprocesseur est toujours ajusté sur les lignes d'entraînement
passées ici ; le modèle garde une référence vers lui pour la prédiction.
"""

import logging

import numpy as np
import pandas as pd

from src.models.gbdt import Hyperparams, predict_proba, train
from src.models.metrics import roc_auc
from src.models.preprocessor import (
    DEFAULT_CORR_THRESHOLD,
    DEFAULT_NULL_THRESHOLD,
    fit_preprocessor,
    transform,
)

logger = logging.getLogger(__name__)


def fit_model(X, y, hp=None, null_threshold=DEFAULT_NULL_THRESHOLD,
              corr_threshold=DEFAULT_CORR_THRESHOLD, names=None):
    preprocessor = fit_preprocessor(X, null_threshold, corr_threshold, names=names)
    Xt = transform(preprocessor, X)
    return train(Xt, y, hp or Hyperparams(), feature_names=preprocessor.kept_names,
                 preprocessor=preprocessor)


def score_model(model, X):
    """Probabilités de casse pour des lignes brutes (avant prétraitement)."""
    return predict_proba(model, transform(model.preprocessor, X))


def importance_frame(model):
    frame = pd.DataFrame({
        "feature": list(model.feature_names),
        "importance": model.feature_importances(),
    })
    return frame.sort_values("importance", ascending=False, kind="stable").reset_index(drop=True)


def train_on_matrix(matrix, hp=None, null_threshold=DEFAULT_NULL_THRESHOLD,
                    corr_threshold=DEFAULT_CORR_THRESHOLD):
    """
    Returns:
        (GBDTModel, résumé dict : tailles, AUC d'entraînement, top features)
    """
    hp = hp or Hyperparams()
    model = fit_model(matrix.X, matrix.y, hp, null_threshold, corr_threshold,
                      names=matrix.names)
    train_auc = roc_auc(score_model(model, matrix.X), matrix.y).auc
    importances = importance_frame(model)
    summary = {
        "n_samples": int(matrix.n_samples),
        "n_positive": int(np.sum(matrix.y)),
        "n_features_in": len(matrix.names),
        "n_features_kept": int(model.n_features),
        "n_trees": len(model.trees),
        "train_auc": float(train_auc),
        "top_features": importances.head(10).to_dict(orient="records"),
    }
    logger.info("modèle entraîné : %d lignes, %d/%d features, AUC train %.3f",
                summary["n_samples"], summary["n_features_kept"], summary["n_features_in"],
                train_auc)
    return model, summary
