"""
Gradient boosting d'arbres de décision (perte logistique, second ordre)

- recherche de split exacte et gloutonne (tri préalable par feature)
- valeurs manquantes : direction par défaut apprise à chaque nœud
  (les deux côtés sont essayés, on garde le meilleur gain)
- sérialisation JSON autodescriptive, arbres en enregistrements imbriqués
"""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import expit

from src.errors import ConfigError, DegenerateLabels, SchemaMismatch
from src.models.preprocessor import PreprocessorModel
from src.preprocessing.features import SCHEMA_VERSION

logger = logging.getLogger(__name__)

MODEL_FORMAT = "breakage-gbdt"
MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    n_trees: int = 200
    max_depth: int = 4
    learning_rate: float = 0.1
    min_child_weight: float = 1.0
    l2_lambda: float = 1.0
    subsample: float = 1.0
    seed: int = 42

    def validate(self):
        if self.n_trees < 0 or self.max_depth < 1:
            raise ConfigError(f"n_trees must be ≥ 0 and max_depth ≥ 1 ({self})")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f"learning_rate must be in (0, 1] (got {self.learning_rate})")
        # λ = 0 avec une hessienne nulle : poids de feuille G/0
        if self.min_child_weight <= 0 or self.l2_lambda <= 0:
            raise ConfigError("min_child_weight and l2_lambda must be > 0")
        if not 0 < self.subsample <= 1:
            raise ConfigError(f"subsample must be in (0, 1] (got {self.subsample})")
        return self

    @classmethod
    def from_dict(cls, data):
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known).validate()


# =====================================================================
# PERTE LOGISTIQUE
# =====================================================================

def logistic_loss(y, raw):
    """Log-loss en fonction du score brut (log-odds)."""
    return np.logaddexp(0.0, raw) - y * raw


def gradient(y, p):
    return p - y


def hessian(p):
    return p * (1.0 - p)


def leaf_weight(G, H, l2_lambda):
    return -G / (H + l2_lambda)


def split_gain(GL, HL, GR, HR, l2_lambda):
    def score(G, H):
        return G ** 2 / (H + l2_lambda)
    return 0.5 * (score(GL, HL) + score(GR, HR) - score(GL + GR, HL + HR))


# =====================================================================
# ARBRE
# =====================================================================

@dataclass
class Tree:
    """
    Arbre à plat : feature == -1 pour une feuille.
    Gauche si x <= threshold, manquant selon default_left.
    """
    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    default_left: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    gain: list = field(default_factory=list)

    def add_leaf(self, value):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.default_left.append(False)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.gain.append(0.0)
        return len(self.feature) - 1

    def depth(self, node=0):
        if self.feature[node] < 0:
            return 0
        return 1 + max(self.depth(self.left[node]), self.depth(self.right[node]))

    def predict(self, X):
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        default_left = np.asarray(self.default_left)
        left = np.asarray(self.left)
        right = np.asarray(self.right)

        rows = np.arange(X.shape[0])
        node = np.zeros(X.shape[0], dtype=int)
        while True:
            internal = feature[node] >= 0
            if not internal.any():
                break
            x = X[rows, np.where(internal, feature[node], 0)]
            go_left = np.where(np.isnan(x), default_left[node], x <= threshold[node])
            node = np.where(internal, np.where(go_left, left[node], right[node]), node)
        return np.asarray(self.value)[node]

    def to_record(self, node=0):
        if self.feature[node] < 0:
            return {"leaf": self.value[node]}
        return {
            "feature": self.feature[node],
            "threshold": self.threshold[node],
            "default_left": self.default_left[node],
            "gain": self.gain[node],
            "left": self.to_record(self.left[node]),
            "right": self.to_record(self.right[node]),
        }

    @classmethod
    def from_record(cls, record):
        tree = cls()

        def visit(rec):
            if "leaf" in rec:
                return tree.add_leaf(rec["leaf"])
            node = tree.add_leaf(0.0)
            tree.feature[node] = int(rec["feature"])
            tree.threshold[node] = float(rec["threshold"])
            tree.default_left[node] = bool(rec["default_left"])
            tree.gain[node] = float(rec.get("gain", 0.0))
            tree.left[node] = visit(rec["left"])
            tree.right[node] = visit(rec["right"])
            return node

        visit(record)
        return tree


@dataclass(frozen=True)
class _Split:
    feature: int
    threshold: float
    default_left: bool
    gain: float


class _TreeBuilder:
    """
    Construction d'un arbre sur les lignes de l'échantillon.

    sorted_rows : (F, m) indices de lignes triés par valeur de chaque
    feature, NaN en dernier. Chaque ligne de la matrice contient le même
    ensemble de lignes ; la partition d'un nœud garde l'ordre trié.
    """

    def __init__(self, X, g, h, hp, splittable):
        self.X = X
        self.Xt = X.T
        self.g = g
        self.h = h
        self.hp = hp
        self.splittable = splittable
        self.tree = Tree()

    def build(self, sorted_rows):
        self._grow(sorted_rows, depth=0)
        return self.tree

    def _grow(self, sorted_rows, depth):
        rows = sorted_rows[0]
        G = self.g[rows].sum()
        H = self.h[rows].sum()
        node = self.tree.add_leaf(leaf_weight(G, H, self.hp.l2_lambda) * self.hp.learning_rate)

        if depth >= self.hp.max_depth or len(rows) < 2:
            return node
        split = self._best_split(sorted_rows, G, H)
        if split is None:
            return node

        x = self.X[rows, split.feature]
        go_left = np.where(np.isnan(x), split.default_left, x <= split.threshold)
        left_mask = np.zeros(self.X.shape[0], dtype=bool)
        left_mask[rows[go_left]] = True

        selected = left_mask[sorted_rows]
        n_left = int(go_left.sum())
        left_rows = sorted_rows[selected].reshape(sorted_rows.shape[0], n_left)
        right_rows = sorted_rows[~selected].reshape(sorted_rows.shape[0], len(rows) - n_left)

        tree = self.tree
        tree.feature[node] = split.feature
        tree.threshold[node] = split.threshold
        tree.default_left[node] = split.default_left
        tree.gain[node] = split.gain
        tree.left[node] = self._grow(left_rows, depth + 1)
        tree.right[node] = self._grow(right_rows, depth + 1)
        return node

    def _best_split(self, sorted_rows, G, H):
        features = self.splittable
        if not len(features):
            return None
        order = sorted_rows[features]                         # (F', m)
        values = np.take_along_axis(self.Xt[features], order, axis=1)
        missing = np.isnan(values)
        gs = np.where(missing, 0.0, self.g[order])
        hs = np.where(missing, 0.0, self.h[order])
        G_missing = self.g[order].sum(axis=1, where=missing)[:, None]
        H_missing = self.h[order].sum(axis=1, where=missing)[:, None]

        # split après la position k : valeurs présentes et distinctes de part et d'autre
        GL = np.cumsum(gs, axis=1)[:, :-1]
        HL = np.cumsum(hs, axis=1)[:, :-1]
        with np.errstate(invalid="ignore"):
            valid = ~missing[:, 1:] & (values[:, :-1] < values[:, 1:])
        if not valid.any():
            return None

        lam = self.hp.l2_lambda
        mcw = self.hp.min_child_weight
        best = None
        # manquants à gauche puis à droite : à gain égal, la gauche l'emporte
        for default_left in (True, False):
            gl = GL + G_missing if default_left else GL
            hl = HL + H_missing if default_left else HL
            gr, hr = G - gl, H - hl
            with np.errstate(invalid="ignore"):
                gain = split_gain(gl, hl, gr, hr, lam)
            ok = valid & (hl >= mcw) & (hr >= mcw) & (gain > 0)
            if not ok.any():
                continue
            gain = np.where(ok, gain, -np.inf)
            f, k = np.unravel_index(np.argmax(gain), gain.shape)
            if best is None or gain[f, k] > best[0]:
                best = (gain[f, k], f, k, default_left)

        if best is None:
            return None
        gain, f, k, default_left = best
        lo, hi = values[f, k], values[f, k + 1]
        threshold = lo + (hi - lo) / 2.0
        if not lo <= threshold < hi:
            threshold = lo
        return _Split(feature=int(features[f]), threshold=float(threshold),
                      default_left=bool(default_left), gain=float(gain))


# =====================================================================
# MODÈLE
# =====================================================================

@dataclass
class GBDTModel:
    base_score: float
    trees: list
    hyperparams: Hyperparams
    n_features: int
    feature_names: tuple = ()
    preprocessor: Optional[PreprocessorModel] = None

    def raw_score(self, X):
        raw = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            raw += tree.predict(X)
        return raw

    def feature_importances(self):
        """Gain total des splits par feature retenue."""
        importances = np.zeros(self.n_features)
        for tree in self.trees:
            for feature, gain in zip(tree.feature, tree.gain):
                if feature >= 0:
                    importances[feature] += gain
        return importances

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "format_version": MODEL_FORMAT_VERSION,
            "schema_version": SCHEMA_VERSION,
            "hyperparams": asdict(self.hyperparams),
            "base_score": self.base_score,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names),
            "preprocessor": None if self.preprocessor is None else self.preprocessor.to_dict(),
            "trees": [tree.to_record() for tree in self.trees],
        }

    @classmethod
    def from_dict(cls, data):
        if data.get("format") != MODEL_FORMAT:
            raise SchemaMismatch(f"not a {MODEL_FORMAT} document (format={data.get('format')!r})")
        if str(data.get("schema_version")) != SCHEMA_VERSION:
            raise SchemaMismatch(f"model schema version {data.get('schema_version')} "
                                 f"!= {SCHEMA_VERSION}")
        preprocessor = data.get("preprocessor")
        return cls(
            base_score=float(data["base_score"]),
            trees=[Tree.from_record(rec) for rec in data["trees"]],
            hyperparams=Hyperparams.from_dict(data["hyperparams"]),
            n_features=int(data["n_features"]),
            feature_names=tuple(data.get("feature_names", ())),
            preprocessor=None if preprocessor is None else PreprocessorModel.from_dict(preprocessor),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, ensure_ascii=False) + "\n"


def _check_labels(y):
    y = np.asarray(y)
    if y.ndim != 1 or len(y) == 0:
        raise DegenerateLabels("labels must be a non-empty vector")
    values = set(np.unique(y).tolist())
    if not values <= {0, 1}:
        raise DegenerateLabels(f"labels must be 0/1 (got {sorted(values)})")
    if len(values) < 2:
        raise DegenerateLabels("both classes are required to train")
    return y.astype(float)


def train(X, y, hp=None, feature_names=(), preprocessor=None, verbose=False):
    """
    Entraîne n_trees arbres sur X (déjà transformé par le préprocesseur).

    Raises:
        DegenerateLabels: labels hors {0,1} ou une seule classe
    """
    hp = (hp or Hyperparams()).validate()
    X = np.asarray(X, dtype=float)
    y = _check_labels(y)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise SchemaMismatch(f"matrix {X.shape} does not match {len(y)} labels")

    n, n_features = X.shape
    if n_features == 0:
        raise SchemaMismatch("cannot train on a matrix without feature columns")
    positive_rate = y.mean()
    base_score = float(np.log(positive_rate / (1.0 - positive_rate)))

    # tri unique ; NaN en fin de chaque colonne
    presorted = np.argsort(X, axis=0, kind="stable").T
    present = ~np.isnan(X)
    splittable = np.flatnonzero([
        np.unique(X[present[:, j], j]).size >= 2 for j in range(n_features)
    ])
    rng = np.random.default_rng(hp.seed)
    n_sample = max(2, int(round(hp.subsample * n)))

    raw = np.full(n, base_score)
    trees = []
    for round_no in range(hp.n_trees):
        p = expit(raw)
        g = gradient(y, p)
        h = hessian(p)

        if n_sample < n:
            in_sample = np.zeros(n, dtype=bool)
            in_sample[rng.choice(n, size=n_sample, replace=False)] = True
            sorted_rows = presorted[in_sample[presorted]].reshape(n_features, n_sample)
        else:
            sorted_rows = presorted

        tree = _TreeBuilder(X, g, h, hp, splittable).build(sorted_rows)
        trees.append(tree)
        raw += tree.predict(X)
        if verbose and (round_no + 1) % 50 == 0:
            logger.debug("round %d/%d, log-loss %.4f", round_no + 1, hp.n_trees,
                         logistic_loss(y, raw).mean())

    return GBDTModel(
        base_score=base_score,
        trees=trees,
        hyperparams=hp,
        n_features=n_features,
        feature_names=tuple(feature_names),
        preprocessor=preprocessor,
    )


def predict_proba(m, X):
    """
    Raises:
        SchemaMismatch: nombre de colonnes différent du modèle
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise SchemaMismatch(f"model expects {m.n_features} columns, got "
                             f"{X.shape[1] if X.ndim == 2 else X.shape}")
    return expit(m.raw_score(X))


def save_model(m, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(m.to_json(), encoding="utf-8")


def load_model(path):
    with open(path, "r", encoding="utf-8") as f:
        return GBDTModel.from_dict(json.load(f))
