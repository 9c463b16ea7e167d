"""
Visualisations des rapports d'évaluation (PNG)
- courbes ROC par fold + moyenne (validation croisée imbriquée)
- pertes d'AUC LOCO (top features / groupes)
- courbe d'apprentissage
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import seaborn as sns  # noqa: E402

logger = logging.getLogger(__name__)

sns.set_style("whitegrid")


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    logger.info("graphique sauvegardé : %s", path)
    return path


def plot_roc(report, path):
    fig, ax = plt.subplots(figsize=(8, 8))
    for fold in report.folds:
        ax.plot(fold.fpr, fold.tpr, color="steelblue", alpha=0.25, lw=1)
    fpr, tpr = report.mean_curve()
    ax.plot(fpr, tpr, color="darkred", lw=2,
            label=f"Moyenne (AUC = {report.mean_auc:.3f} ± {report.std_auc:.3f})")
    ax.plot([0, 1], [0, 1], "k--", lw=1, label="Aléatoire")
    ax.set_xlabel("Taux de faux positifs", fontsize=12)
    ax.set_ylabel("Taux de vrais positifs", fontsize=12)
    ax.set_title(f"ROC, {report.outer} folds externes", fontsize=14, fontweight="bold")
    ax.legend(loc="lower right")
    return _save(fig, path)


def plot_loco(report, path, top=40):
    frame = report.frame().head(top)
    fig, ax = plt.subplots(figsize=(10, max(4, 0.3 * len(frame) + 1)))
    sns.barplot(data=frame, y="target", x="mean_auc_loss", hue="kind", dodge=False,
                orient="h", ax=ax)
    ax.errorbar(frame["mean_auc_loss"], range(len(frame)), xerr=frame["std_auc_loss"],
                fmt="none", ecolor="black", lw=1)
    ax.axvline(x=0, color="r", linestyle="--", lw=1)
    ax.set_xlabel("Perte d'AUC", fontsize=12)
    ax.set_ylabel("")
    ax.set_title(f"LOCO (référence AUC = {report.baseline_mean_auc:.3f})",
                 fontsize=14, fontweight="bold")
    return _save(fig, path)


def plot_learning_curve(curve, path):
    frame = curve.frame()
    frame = frame[frame["available"]]
    fig, ax = plt.subplots(figsize=(8, 6))
    ax.errorbar(frame["fraction"] * 100, frame["mean_auc"], yerr=frame["std_auc"],
                marker="o", capsize=4, color="steelblue")
    ax.set_xlabel("Données d'entraînement (%)", fontsize=12)
    ax.set_ylabel("ROC-AUC moyenne", fontsize=12)
    ax.set_title(f"Courbe d'apprentissage ({curve.folds} folds)", fontsize=14, fontweight="bold")
    return _save(fig, path)
