"""
Évaluation du classifieur de casse

- validation croisée imbriquée (10 folds externes, recherche aléatoire de
  10 configurations scorées sur 3 folds internes, seuils de prétraitement
  inclus dans la recherche)
- importance Leave-One-Covariate-Out (feature seule ou groupe de dimensions)
- courbe d'apprentissage (1 %, 25 %, 50 %, 75 %, 100 % du split d'entraînement)
- options : retrait des pages aberrantes, élimination récursive de features

Chaque préprocesseur et chaque modèle est ajusté sur son split
d'entraînement seulement. Chaque job reçoit une graine dérivée de la
graine globale : le résultat ne dépend pas de n_jobs.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy.stats import loguniform, randint, uniform
from sklearn.model_selection import ParameterSampler, StratifiedKFold
from tqdm import tqdm

from src.config import DEFAULT_SEED
from src.errors import (
    AllFeaturesDropped,
    ConfigError,
    SchemaMismatch,
    TooFewSamples,
    UnknownTarget,
)
from src.models.gbdt import Hyperparams
from src.models.metrics import mean_roc, roc_auc
from src.models.preprocessor import DEFAULT_CORR_THRESHOLD, DEFAULT_NULL_THRESHOLD
from src.models.train import fit_model, score_model
from src.preprocessing.features import dimension_groups

logger = logging.getLogger(__name__)

# Espace de recherche : hyperparamètres du GBDT + seuils du prétraitement
SEARCH_SPACE = {
    "n_trees": randint(50, 401),
    "max_depth": randint(2, 9),
    "learning_rate": loguniform(0.01, 0.3),
    "null_threshold": uniform(0.7, 0.25),
    "corr_threshold": uniform(0.6, 0.3),
}

LEARNING_CURVE_FRACTIONS = (0.01, 0.25, 0.50, 0.75, 1.00)
OUTLIER_PERCENTILE = 99.0
OUTLIER_COLUMNS = ("page.count.nodes_total", "page.count.edges_total")
ELIMINATION_STEP = 0.2

# score d'un fold quand aucune feature ne survit : prédicteur constant
CONSTANT_AUC = 0.5


def derive_seeds(seed, n):
    """n graines indépendantes (entiers 32 bits) dérivées de seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(child.generate_state(1)[0]) for child in children]


def _check_classes(y, needed, what):
    counts = np.bincount(np.asarray(y, dtype=int), minlength=2)
    if counts.min() < needed:
        raise TooFewSamples(
            f"{what} needs at least {needed} samples per class "
            f"(broken={counts[1]}, working={counts[0]})")


def _splits(y, n_splits, seed):
    skf = StratifiedKFold(n_splits=n_splits, shuffle=True, random_state=seed)
    return list(skf.split(np.zeros(len(y)), y))


def _run(jobs, n_jobs, desc, progress):
    """Exécute des appels delayed en série (avec barre) ou via joblib."""
    jobs = list(jobs)
    if n_jobs == 1:
        return [fn(*args, **kwargs)
                for fn, args, kwargs in tqdm(jobs, desc=desc, disable=not progress)]
    return Parallel(n_jobs=n_jobs)(jobs)


# =====================================================================
# PAGES ABERRANTES
# =====================================================================

def outlier_mask(X, names, percentile=OUTLIER_PERCENTILE):
    """
    True pour les lignes à garder : ratio nœuds/arêtes de la page sous le
    percentile donné. Ratio non défini → ligne gardée.
    """
    names = list(names or ())
    if not set(OUTLIER_COLUMNS) <= set(names):
        raise SchemaMismatch(f"outlier removal needs columns {OUTLIER_COLUMNS}")
    nodes = X[:, names.index(OUTLIER_COLUMNS[0])]
    edges = X[:, names.index(OUTLIER_COLUMNS[1])]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(edges > 0, nodes / edges, np.nan)
    if np.isnan(ratio).all():
        return np.ones(len(ratio), dtype=bool)
    cutoff = np.nanpercentile(ratio, percentile)
    return np.isnan(ratio) | (ratio <= cutoff)


def drop_outliers(X, y, names, train_idx, percentile=OUTLIER_PERCENTILE):
    """Indices d'entraînement sans le percentile supérieur du ratio nœuds/arêtes."""
    keep = outlier_mask(X[train_idx], names, percentile)
    return train_idx[keep]


# =====================================================================
# FOLD ÉLÉMENTAIRE
# =====================================================================

def fold_auc(X, y, train_idx, test_idx, hp=None, null_threshold=DEFAULT_NULL_THRESHOLD,
             corr_threshold=DEFAULT_CORR_THRESHOLD, names=None, outliers=False):
    """
    Ajuste sur train_idx, score test_idx.

    Returns:
        (RocResult, GBDTModel)
    """
    if outliers:
        train_idx = drop_outliers(X, y, names, train_idx)
    model = fit_model(X[train_idx], y[train_idx], hp, null_threshold, corr_threshold,
                      names=names)
    return roc_auc(score_model(model, X[test_idx]), y[test_idx]), model


def _safe_fold_auc(X, y, train_idx, test_idx, **kwargs):
    if X.shape[1] == 0:
        return CONSTANT_AUC
    try:
        return fold_auc(X, y, train_idx, test_idx, **kwargs)[0].auc
    except AllFeaturesDropped as e:
        logger.warning("fold sans feature (%s) : AUC %.1f", e, CONSTANT_AUC)
        return CONSTANT_AUC


def cross_val_aucs(X, y, folds=5, seed=DEFAULT_SEED, hp=None, names=None, outliers=False,
                   n_jobs=1, progress=False):
    """AUC par fold, hyperparamètres par défaut, folds stratifiés seedés."""
    _check_classes(y, folds, f"{folds}-fold CV")
    kwargs = {"hp": hp, "names": names, "outliers": outliers}
    jobs = [delayed(_safe_fold_auc)(X, y, tr, te, **kwargs) for tr, te in _splits(y, folds, seed)]
    return _run(jobs, n_jobs, "CV", progress)


# =====================================================================
# VALIDATION CROISÉE IMBRIQUÉE
# =====================================================================

@dataclass
class FoldResult:
    fold: int
    auc: float
    params: dict
    inner_scores: list
    n_train: int
    n_test: int
    fpr: tuple = ()
    tpr: tuple = ()
    model: Optional[object] = field(default=None, repr=False, compare=False)

    def to_dict(self):
        return {
            "fold": self.fold,
            "auc": self.auc,
            "params": self.params,
            "inner_scores": self.inner_scores,
            "n_train": self.n_train,
            "n_test": self.n_test,
        }


@dataclass
class CVReport:
    folds: list
    outer: int
    inner: int
    budget: int
    seed: int

    @property
    def fold_aucs(self):
        return [f.auc for f in self.folds]

    @property
    def mean_auc(self):
        return float(np.mean(self.fold_aucs))

    @property
    def std_auc(self):
        return float(np.std(self.fold_aucs))

    @property
    def chosen_params(self):
        return [f.params for f in self.folds]

    def mean_curve(self):
        return mean_roc(self.folds)

    def to_dict(self):
        fpr, tpr = self.mean_curve()
        return {
            "experiment": "nested_cv",
            "outer_folds": self.outer,
            "inner_folds": self.inner,
            "budget": self.budget,
            "seed": self.seed,
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "fold_aucs": self.fold_aucs,
            "chosen_params": self.chosen_params,
            "folds": [f.to_dict() for f in self.folds],
            "mean_roc": {"fpr": fpr, "tpr": tpr},
        }

    def summary(self):
        lines = [
            "=" * 80,
            "Validation croisée imbriquée",
            "=" * 80,
            f"{self.outer} folds externes × {self.budget} configurations × "
            f"{self.inner} folds internes",
            f"ROC-AUC : {self.mean_auc:.3f} (± {self.std_auc:.3f})",
            "-" * 80,
        ]
        for f in self.folds:
            lines.append(f"  Fold {f.fold}: AUC={f.auc:.4f}  n_trees={f.params['n_trees']} "
                         f"max_depth={f.params['max_depth']} "
                         f"lr={f.params['learning_rate']:.3f}")
        lines.append("=" * 80)
        return "\n".join(lines)


def _config(params, seed):
    """Configuration tirée → (Hyperparams, null_threshold, corr_threshold, dict JSON)."""
    clean = {
        "n_trees": int(params["n_trees"]),
        "max_depth": int(params["max_depth"]),
        "learning_rate": float(params["learning_rate"]),
        "null_threshold": float(params["null_threshold"]),
        "corr_threshold": float(params["corr_threshold"]),
    }
    hp = Hyperparams(n_trees=clean["n_trees"], max_depth=clean["max_depth"],
                     learning_rate=clean["learning_rate"], seed=seed)
    return hp, clean["null_threshold"], clean["corr_threshold"], clean


def outer_fold(X, y, train_idx, test_idx, fold=0, inner=3, budget=10, seed=DEFAULT_SEED,
               names=None, outliers=False):
    """
    Recherche aléatoire sur les folds internes de train_idx, réentraînement
    de la meilleure configuration sur tout train_idx, score sur test_idx.
    """
    configs = list(ParameterSampler(SEARCH_SPACE, n_iter=budget, random_state=seed))
    inner_splits = [(train_idx[tr], train_idx[te])
                    for tr, te in _splits(y[train_idx], inner, seed)]

    inner_scores = []
    for params in configs:
        hp, null_t, corr_t, _ = _config(params, seed)
        try:
            aucs = [fold_auc(X, y, tr, te, hp, null_t, corr_t, names, outliers)[0].auc
                    for tr, te in inner_splits]
            inner_scores.append(float(np.mean(aucs)))
        except AllFeaturesDropped as e:
            logger.debug("configuration écartée (%s)", e)
            inner_scores.append(float("-inf"))

    if all(math.isinf(s) for s in inner_scores):
        raise AllFeaturesDropped(f"fold {fold}: every configuration dropped all features")
    best = int(np.argmax(inner_scores))
    hp, null_t, corr_t, params = _config(configs[best], seed)

    roc, model = fold_auc(X, y, train_idx, test_idx, hp, null_t, corr_t, names, outliers)
    logger.info("fold %d : AUC %.4f (config %d/%d, AUC interne %.4f)",
                fold, roc.auc, best + 1, budget, inner_scores[best])
    return FoldResult(
        fold=fold,
        auc=roc.auc,
        params=params,
        inner_scores=[s if math.isfinite(s) else None for s in inner_scores],
        n_train=len(train_idx),
        n_test=len(test_idx),
        fpr=roc.fpr,
        tpr=roc.tpr,
        model=model,
    )


def nested_cv(X, y, outer=10, inner=3, budget=10, seed=DEFAULT_SEED, names=None,
              outliers=False, n_jobs=1, progress=False):
    """
    Raises:
        TooFewSamples: moins de 2·outer exemples dans une classe
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    _check_classes(y, 2 * outer, f"nested CV with {outer} outer folds")

    fold_seeds = derive_seeds(seed, outer)
    jobs = [
        delayed(outer_fold)(X, y, train_idx, test_idx, fold=k, inner=inner, budget=budget,
                            seed=fold_seeds[k], names=names, outliers=outliers)
        for k, (train_idx, test_idx) in enumerate(_splits(y, outer, seed))
    ]
    folds = _run(jobs, n_jobs, "Folds externes", progress)
    return CVReport(folds=folds, outer=outer, inner=inner, budget=budget, seed=seed)


# =====================================================================
# LEAVE-ONE-COVARIATE-OUT
# =====================================================================

@dataclass
class LocoEntry:
    target: str
    kind: str
    n_removed: int
    mean_auc: float
    mean_auc_loss: float
    std_auc_loss: float
    rank: int = 0


@dataclass
class LocoReport:
    baseline_fold_aucs: list
    entries: list
    folds: int
    seed: int

    @property
    def baseline_mean_auc(self):
        return float(np.mean(self.baseline_fold_aucs))

    @property
    def baseline_std_auc(self):
        return float(np.std(self.baseline_fold_aucs))

    def frame(self):
        columns = [f.name for f in fields(LocoEntry)]
        return pd.DataFrame([asdict(e) for e in self.entries], columns=columns)

    def to_dict(self):
        return {
            "experiment": "loco",
            "folds": self.folds,
            "seed": self.seed,
            "baseline_mean_auc": self.baseline_mean_auc,
            "baseline_std_auc": self.baseline_std_auc,
            "baseline_fold_aucs": self.baseline_fold_aucs,
            "entries": [asdict(e) for e in self.entries],
        }


def resolve_targets(targets, names, groups):
    """
    Returns:
        liste de (cible, "feature" | "group", noms retirés)

    Raises:
        UnknownTarget: ni une feature de la matrice ni un groupe
    """
    present = set(names)
    resolved = []
    for target in targets:
        if target in groups:
            removed = [n for n in groups[target] if n in present]
            resolved.append((target, "group", removed))
        elif target in present:
            resolved.append((target, "feature", [target]))
        else:
            raise UnknownTarget(f"unknown LOCO target {target!r}")
    return resolved


def _reduced_aucs(X, y, names, removed, splits):
    removed = set(removed)
    columns = [i for i, n in enumerate(names) if n not in removed]
    reduced_names = [names[i] for i in columns]
    return [_safe_fold_auc(X[:, columns], y, tr, te, names=reduced_names)
            for tr, te in splits]


def loco(X, y, names, targets, folds=5, seed=DEFAULT_SEED, groups=None, n_jobs=1,
         progress=False):
    """
    Perte d'AUC en retirant chaque cible (feature ou groupe de dimensions),
    hyperparamètres par défaut, mêmes folds pour la référence et chaque cible.

    Raises:
        UnknownTarget
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    names = list(names)
    groups = dimension_groups() if groups is None else groups
    resolved = resolve_targets(targets, names, groups)
    _check_classes(y, folds, f"{folds}-fold LOCO")

    splits = _splits(y, folds, seed)
    jobs = [delayed(_reduced_aucs)(X, y, names, [], splits)]
    jobs += [delayed(_reduced_aucs)(X, y, names, removed, splits)
             for _, _, removed in resolved]
    results = _run(jobs, n_jobs, "LOCO", progress)
    baseline = results[0]

    entries = []
    for (target, kind, removed), aucs in zip(resolved, results[1:]):
        losses = np.asarray(baseline) - np.asarray(aucs)
        mean_auc = float(np.mean(aucs))
        entries.append(LocoEntry(
            target=target,
            kind=kind,
            n_removed=len(removed),
            mean_auc=mean_auc,
            mean_auc_loss=float(np.mean(baseline)) - mean_auc,
            std_auc_loss=float(np.std(losses)),
        ))

    order = sorted(range(len(entries)), key=lambda i: (-entries[i].mean_auc_loss, i))
    for rank, i in enumerate(order, start=1):
        entries[i].rank = rank
    entries = [entries[i] for i in order]
    return LocoReport(baseline_fold_aucs=list(baseline), entries=entries, folds=folds, seed=seed)


# =====================================================================
# COURBE D'APPRENTISSAGE
# =====================================================================

@dataclass
class CurvePoint:
    fraction: float
    fold_aucs: list
    available: bool = True

    @property
    def mean_auc(self):
        return float(np.mean(self.fold_aucs)) if self.fold_aucs else None

    @property
    def std_auc(self):
        return float(np.std(self.fold_aucs)) if self.fold_aucs else None

    def to_dict(self):
        return {
            "fraction": self.fraction,
            "mean_auc": self.mean_auc,
            "std_auc": self.std_auc,
            "n_folds": len(self.fold_aucs),
            "available": self.available,
            "fold_aucs": self.fold_aucs,
        }


@dataclass
class LearningCurve:
    points: list
    folds: int
    seed: int

    def frame(self):
        rows = [p.to_dict() for p in self.points]
        return pd.DataFrame(rows, columns=["fraction", "mean_auc", "std_auc", "n_folds",
                                           "available"])

    def to_dict(self):
        return {
            "experiment": "learning_curve",
            "folds": self.folds,
            "seed": self.seed,
            "points": [p.to_dict() for p in self.points],
        }


def stratified_subsample(train_idx, y, fraction, rng):
    """
    round(fraction · n_c) lignes de chaque classe ; None si une classe
    n'a plus aucune ligne.
    """
    if fraction >= 1.0:
        return train_idx
    chosen = []
    for label in (0, 1):
        rows = train_idx[y[train_idx] == label]
        n = int(round(fraction * len(rows)))
        if n == 0:
            return None
        chosen.append(rng.permutation(rows)[:n])
    return np.sort(np.concatenate(chosen))


def _check_fractions(fractions):
    fractions = [float(f) for f in fractions]
    if not fractions:
        raise ConfigError("learning curve needs at least one fraction")
    if any(not 0 < f <= 1 for f in fractions):
        raise ConfigError(f"fractions must lie in (0, 1] (got {fractions})")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ConfigError(f"fractions must be strictly increasing (got {fractions})")
    return fractions


def _curve_fold(X, y, train_idx, test_idx, fractions, seed, names):
    """AUC du fold pour chaque fraction (None si indisponible)."""
    aucs = []
    for i, fraction in enumerate(fractions):
        rng = np.random.default_rng([seed, i])
        rows = stratified_subsample(train_idx, y, fraction, rng)
        if rows is None or len(rows) < 2:
            aucs.append(None)
            continue
        aucs.append(_safe_fold_auc(X, y, rows, test_idx, names=names))
    return aucs


def learning_curve(X, y, fractions=LEARNING_CURVE_FRACTIONS, folds=10, seed=DEFAULT_SEED,
                   names=None, n_jobs=1, progress=False):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    fractions = _check_fractions(fractions)
    _check_classes(y, folds, f"{folds}-fold learning curve")

    fold_seeds = derive_seeds(seed, folds)
    jobs = [delayed(_curve_fold)(X, y, tr, te, fractions, fold_seeds[k], names)
            for k, (tr, te) in enumerate(_splits(y, folds, seed))]
    per_fold = _run(jobs, n_jobs, "Courbe d'apprentissage", progress)

    points = []
    for i, fraction in enumerate(fractions):
        aucs = [fold[i] for fold in per_fold if fold[i] is not None]
        if len(aucs) < folds:
            logger.warning("fraction %.2f : %d/%d folds disponibles", fraction, len(aucs), folds)
        points.append(CurvePoint(fraction=fraction, fold_aucs=aucs, available=bool(aucs)))
    return LearningCurve(points=points, folds=folds, seed=seed)


# =====================================================================
# ÉLIMINATION RÉCURSIVE
# =====================================================================

@dataclass
class EliminationStep:
    n_features: int
    mean_auc: float
    std_auc: float
    removed: list


@dataclass
class EliminationReport:
    steps: list
    folds: int
    seed: int

    def to_dict(self):
        return {
            "experiment": "recursive_elimination",
            "folds": self.folds,
            "seed": self.seed,
            "steps": [asdict(s) for s in self.steps],
        }


def _importances(model, n_columns):
    """Importance par colonne d'entrée ; 0 pour les colonnes écartées au prétraitement."""
    full = np.zeros(n_columns)
    full[list(model.preprocessor.kept_indices)] = model.feature_importances()
    return full


def recursive_elimination(X, y, names, step=ELIMINATION_STEP, folds=5, seed=DEFAULT_SEED,
                          min_features=1, n_jobs=1, progress=False):
    """
    Retire à chaque étape les step·100 % features les moins importantes
    (gain total), AUC en CV à chaque étape.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    names = list(names)
    current = list(range(len(names)))
    steps = []

    while current:
        current_names = [names[i] for i in current]
        aucs = cross_val_aucs(X[:, current], y, folds, seed, names=current_names,
                              n_jobs=n_jobs)
        n_drop = max(1, math.ceil(step * len(current)))
        removed = []
        if len(current) - n_drop >= min_features:
            try:
                model = fit_model(X[:, current], y, names=current_names)
            except AllFeaturesDropped:
                model = None
            if model is not None:
                importance = _importances(model, len(current))
                dropped = set(np.argsort(importance, kind="stable")[:n_drop].tolist())
                removed = [current_names[i] for i in sorted(dropped)]
        steps.append(EliminationStep(n_features=len(current), mean_auc=float(np.mean(aucs)),
                                     std_auc=float(np.std(aucs)), removed=removed))
        if progress:
            logger.info("élimination : %d features, AUC %.4f", len(current), np.mean(aucs))
        if not removed:
            break
        removed_set = set(removed)
        current = [i for i in current if names[i] not in removed_set]

    return EliminationReport(steps=steps, folds=folds, seed=seed)


# =====================================================================
# RAPPORTS
# =====================================================================

def write_report_json(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2, ensure_ascii=False)
        f.write("\n")


def write_roc_csv(report, path):
    """Courbes ROC par fold + courbe moyenne (fold = "mean")."""
    rows = []
    for fold in report.folds:
        rows.extend({"fold": str(fold.fold), "fpr": x, "tpr": t}
                    for x, t in zip(fold.fpr, fold.tpr))
    fpr, tpr = report.mean_curve()
    rows.extend({"fold": "mean", "fpr": x, "tpr": t} for x, t in zip(fpr, tpr))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=["fold", "fpr", "tpr"]).to_csv(path, index=False,
                                                                float_format="%.10g")


def write_curve_csv(curve, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    curve.frame().to_csv(path, index=False, float_format="%.10g")


def write_loco_csv(report, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report.frame().to_csv(path, index=False, float_format="%.10g")
