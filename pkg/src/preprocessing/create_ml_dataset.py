"""
Création du dataset ML : triplets de graphes → matrice de features (CSV)

Entrée : répertoire de dataset
  - manifest.jsonl (une ligne par exemple : example_id, label, ...)
  - <example_id>.{pre,post,intervention}.graphml

Sortie :
  - CSV : example_id, label (1 = broken, 0 = working), puis une colonne par
    feature du schéma ; cellule vide = valeur manquante
  - schéma : JSONL, une FeatureSpec par ligne
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src.errors import MalformedRecord, SchemaError
from src.preprocessing.features import SCHEMA_VERSION, extract_dataset
from src.preprocessing.intervention_diff import read_triple

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"
ID_COLUMNS = ["example_id", "label"]
LABEL_CODES = {"broken": 1, "working": 0}


@dataclass
class FeatureMatrix:
    names: list
    example_ids: list
    X: np.ndarray
    y: Optional[np.ndarray] = None

    @property
    def n_samples(self):
        return self.X.shape[0]

    def select(self, rows):
        rows = np.asarray(rows)
        return FeatureMatrix(
            names=self.names,
            example_ids=[self.example_ids[i] for i in rows],
            X=self.X[rows],
            y=None if self.y is None else self.y[rows],
        )

    def drop_columns(self, names):
        names = set(names)
        keep = [i for i, name in enumerate(self.names) if name not in names]
        return FeatureMatrix(
            names=[self.names[i] for i in keep],
            example_ids=self.example_ids,
            X=self.X[:, keep],
            y=self.y,
        )


def read_manifest(directory):
    rows = []
    path = Path(directory) / MANIFEST_NAME
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                row["example_id"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise MalformedRecord(f"invalid manifest row ({e})", line_no) from e
            rows.append(row)
    return rows


def load_triples(directory, n_jobs=1, progress=False):
    """Charge tous les triplets listés dans le manifest du répertoire."""
    rows = read_manifest(directory)
    iterator = tqdm(rows, desc="Chargement GraphML", disable=not progress)
    if n_jobs == 1:
        return [read_triple(directory, row["example_id"], row.get("label")) for row in iterator]
    return Parallel(n_jobs=n_jobs)(
        delayed(read_triple)(directory, row["example_id"], row.get("label")) for row in iterator)


def vectors_to_frame(vectors, schema):
    frame = pd.DataFrame([v.values for v in vectors], columns=schema.names, dtype=float)
    frame.insert(0, "label", [LABEL_CODES.get(v.label) for v in vectors])
    frame.insert(0, "example_id", [v.example_id for v in vectors])
    return frame


def featurize_dataset(directory, n_jobs=1, progress=False):
    """
    Returns:
        (DataFrame des features, ExtractionResult)
    """
    triples = load_triples(directory, n_jobs=n_jobs, progress=progress)
    result = extract_dataset(triples, n_jobs=n_jobs, progress=progress)
    frame = vectors_to_frame(result.vectors, result.schema)
    logger.info("%d triplets → %d lignes × %d features", len(triples), len(frame),
                len(result.schema))
    return frame, result


def write_feature_csv(frame, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, na_rep="", float_format="%.10g")


def read_feature_csv(path, require_labels=True):
    """
    Raises:
        SchemaError: colonnes example_id/label absentes, valeurs non numériques
    """
    frame = pd.read_csv(path, dtype={"example_id": str})
    if list(frame.columns[:2]) != ID_COLUMNS:
        raise SchemaError(f"{path}: first columns must be example_id,label")
    names = list(frame.columns[2:])
    try:
        X = frame[names].to_numpy(dtype=float)
    except ValueError as e:
        raise SchemaError(f"{path}: non-numeric feature value ({e})") from e

    labels = frame["label"]
    y = None
    if len(labels) == 0:
        y = np.zeros(0, dtype=int)
    elif labels.notna().all():
        y = labels.to_numpy(dtype=int)
        if not set(np.unique(y)) <= {0, 1}:
            raise SchemaError(f"{path}: labels must be 0 or 1")
    elif require_labels:
        raise SchemaError(f"{path}: missing labels")
    return FeatureMatrix(names=names, example_ids=list(frame["example_id"]), X=X, y=y)


def write_schema_jsonl(schema, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for position, spec in enumerate(schema.specs):
            row = {"position": position, "schema_version": SCHEMA_VERSION, **spec.to_dict()}
            f.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_schema_jsonl(path):
    with open(path, "r", encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]
