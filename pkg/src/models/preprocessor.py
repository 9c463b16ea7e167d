"""
Prétraitement des features avant le GBDT

1. suppression des features trop souvent vides (fraction > null_threshold)
2. suppression des features corrélées : parcours dans l'ordre du schéma,
   une feature est retirée si |r de Pearson| > corr_threshold avec une
   feature déjà retenue (valeurs manquantes exclues paire par paire)
3. standardisation (moyenne 0, variance 1) ; colonne constante → 0

Toujours ajusté sur la partie entraînement uniquement.
"""

import logging
from dataclasses import dataclass

import numpy as np
from sklearn.preprocessing import StandardScaler

from src.errors import AllFeaturesDropped, SchemaMismatch, TooFewSamples

logger = logging.getLogger(__name__)

DEFAULT_NULL_THRESHOLD = 0.85
DEFAULT_CORR_THRESHOLD = 0.73

# variance relative en dessous de laquelle une colonne est traitée comme constante
_VARIANCE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PreprocessorModel:
    null_threshold: float
    corr_threshold: float
    n_input: int
    kept_indices: tuple
    means: tuple
    stds: tuple
    input_names: tuple = ()

    @property
    def kept_names(self):
        if not self.input_names:
            return [f"f{i}" for i in self.kept_indices]
        return [self.input_names[i] for i in self.kept_indices]

    def to_dict(self):
        return {
            "null_threshold": self.null_threshold,
            "corr_threshold": self.corr_threshold,
            "n_input": self.n_input,
            "input_names": list(self.input_names),
            "kept_indices": list(self.kept_indices),
            "means": list(self.means),
            "stds": list(self.stds),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            null_threshold=float(data["null_threshold"]),
            corr_threshold=float(data["corr_threshold"]),
            n_input=int(data["n_input"]),
            kept_indices=tuple(int(i) for i in data["kept_indices"]),
            means=tuple(float(v) for v in data["means"]),
            stds=tuple(float(v) for v in data["stds"]),
            input_names=tuple(data.get("input_names", ())),
        )


def pairwise_correlation(X):
    """
    Matrice |r| de Pearson, lignes manquantes exclues paire par paire.
    NaN quand moins de 2 lignes communes ou une variance nulle.
    """
    X = np.asarray(X, dtype=float)
    present = ~np.isnan(X)
    # centrer réduit les erreurs d'annulation sans changer r
    centered = X - np.nanmean(np.where(present.any(axis=0), X, 0.0), axis=0)
    X0 = np.where(present, centered, 0.0)
    M = present.astype(float)
    scale = np.max(np.where(present, np.abs(X), 0.0), axis=0)

    n = M.T @ M
    sx = X0.T @ M            # sx[i, j] = Σ x_i sur les lignes où i et j sont présents
    sxx = (X0 ** 2).T @ M
    sxy = X0.T @ X0

    with np.errstate(divide="ignore", invalid="ignore"):
        cov = sxy - sx * sx.T / n
        var_x = sxx - sx ** 2 / n
        var_y = var_x.T
        flat_x = var_x <= _VARIANCE_TOLERANCE * n * (scale[:, None] ** 2)
        flat_y = flat_x.T
        r = cov / np.sqrt(var_x * var_y)
    r[(n < 2) | flat_x | flat_y] = np.nan
    return np.abs(r)


def fit_preprocessor(X, null_threshold=DEFAULT_NULL_THRESHOLD,
                     corr_threshold=DEFAULT_CORR_THRESHOLD, names=None):
    """
    Raises:
        TooFewSamples: moins de 2 lignes
        AllFeaturesDropped: aucune feature ne survit aux deux filtres
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise TooFewSamples(f"preprocessing needs at least 2 rows (got {X.shape[0]})")

    null_fraction = np.isnan(X).mean(axis=0)
    candidates = np.flatnonzero(null_fraction <= null_threshold)

    kept = []
    if len(candidates):
        r = pairwise_correlation(X[:, candidates])
        kept_positions = []
        for position in range(len(candidates)):
            if kept_positions and np.any(r[position, kept_positions] > corr_threshold):
                continue
            kept_positions.append(position)
        kept = [int(candidates[p]) for p in kept_positions]

    if not kept:
        raise AllFeaturesDropped(
            f"all {X.shape[1]} features dropped (null>{null_threshold}, |r|>{corr_threshold})")

    logger.debug("prétraitement : %d → %d (vides) → %d (corrélées)",
                 X.shape[1], len(candidates), len(kept))

    scaler = StandardScaler().fit(X[:, kept])
    means = np.nan_to_num(scaler.mean_, nan=0.0)
    stds = np.nan_to_num(np.sqrt(scaler.var_), nan=0.0)

    return PreprocessorModel(
        null_threshold=float(null_threshold),
        corr_threshold=float(corr_threshold),
        n_input=X.shape[1],
        kept_indices=tuple(kept),
        means=tuple(float(v) for v in means),
        stds=tuple(float(v) for v in stds),
        input_names=tuple(names) if names is not None else (),
    )


def transform(p, X):
    """
    Raises:
        SchemaMismatch: nombre de colonnes différent de l'ajustement
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != p.n_input:
        raise SchemaMismatch(f"expected {p.n_input} columns, got "
                             f"{X.shape[1] if X.ndim == 2 else X.shape}")
    kept = X[:, list(p.kept_indices)]
    means = np.asarray(p.means)
    stds = np.asarray(p.stds)
    scale = np.where(stds > 0, stds, 1.0)
    out = (kept - means) / scale
    constant = np.broadcast_to(stds == 0, out.shape)
    return np.where(constant & ~np.isnan(out), 0.0, out)
