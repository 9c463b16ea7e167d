"""
Prédiction : probabilité de casse pour chaque ligne d'un CSV de features
"""

import logging

import pandas as pd

from src.errors import SchemaMismatch
from src.models.train import score_model

logger = logging.getLogger(__name__)


def check_columns(model, names):
    expected = list(model.preprocessor.input_names)
    if expected and expected != list(names):
        missing = [n for n in expected if n not in set(names)]
        extra = [n for n in names if n not in set(expected)]
        raise SchemaMismatch(
            f"feature columns differ from the model (missing={missing[:5]}, extra={extra[:5]})")


def predict_matrix(model, matrix):
    """
    Returns:
        DataFrame example_id, probability (+ label si connu)
    """
    check_columns(model, matrix.names)
    frame = pd.DataFrame({
        "example_id": matrix.example_ids,
        "probability": score_model(model, matrix.X),
    })
    if matrix.y is not None:
        frame["label"] = matrix.y
    logger.info("%d lignes scorées", len(frame))
    return frame
