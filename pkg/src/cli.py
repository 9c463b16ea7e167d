#!/usr/bin/env python3
"""
Pipeline de prédiction de casse des listes de filtres

Usage:
  python -m src.cli mine --commits commits.jsonl --out examples.jsonl
  python -m src.cli simulate --config configs/synth.yaml --out data/raw/synth
  python -m src.cli diff --pre a.pre.graphml --post a.post.graphml --out a.intervention.graphml
  python -m src.cli featurize --dataset data/raw/synth --out data/processed/features.csv
  python -m src.cli train --features data/processed/features.csv --model models/model.json
  python -m src.cli evaluate --features data/processed/features.csv --report reports/cv.json
  python -m src.cli loco --features data/processed/features.csv --report reports/loco.json
  python -m src.cli curve --features data/processed/features.csv --report reports/curve.json
  python -m src.cli match --rules easylist.txt --url https://x.com/a.js --type script --frame x.com
  python -m src.cli predict --features features.csv --model models/model.json --out scores.csv
  python -m src.cli pipeline --config configs/synth.yaml --out runs/demo

Codes de sortie : 0 succès, 2 entrée invalide, 1 erreur interne.
"""

import argparse
import json
import logging
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from src import __version__
from src.config import DEFAULT_JOBS, DEFAULT_SEED, LOG_LEVEL
from src.data_collection.commit_miner import (
    DEFAULT_SINCE,
    MiningStats,
    mine_examples,
    parse_commit_log,
    write_examples_jsonl,
)
from src.data_collection.synth_crawl import generate_dataset, load_synth_config, write_dataset
from src.errors import BreakageError
from src.filtering.filter_engine import (
    RequestContext,
    ResourceType,
    decide,
    parse_filter_list,
)
from src.graphs.graphml import load_graphml, save_graphml
from src.models import analyze, evaluation
from src.models.gbdt import Hyperparams, load_model, save_model
from src.models.predict import predict_matrix
from src.models.preprocessor import DEFAULT_CORR_THRESHOLD, DEFAULT_NULL_THRESHOLD
from src.models.train import importance_frame, train_on_matrix
from src.preprocessing.create_ml_dataset import (
    featurize_dataset,
    read_feature_csv,
    write_feature_csv,
    write_schema_jsonl,
)
from src.preprocessing.features import SCHEMA_VERSION, dimension_groups, schema
from src.preprocessing.intervention_diff import build_intervention_graph, flipped_resources

logger = logging.getLogger("src.cli")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2


# =====================================================================
# AFFICHAGE
# =====================================================================

def print_header(title, out=print):
    """Affiche un en-tête formaté"""
    out("\n" + "=" * 70)
    out(f"  {title}")
    out("=" * 70)


def print_section(icon, title, out=print):
    """Affiche un titre de section"""
    out(f"\n{icon} {title}")
    out("-" * 70)


def _silent(*args, **kwargs):
    pass


# =====================================================================
# MANIFEST D'EXÉCUTION
# =====================================================================

@dataclass
class RunManifest:
    command: str
    argv: list
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    seed: int = None
    schema_version: str = SCHEMA_VERSION
    version: str = __version__
    counts: dict = field(default_factory=dict)
    wall_time_s: float = 0.0

    def write(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(asdict(self), f, indent=2, ensure_ascii=False, default=str)
            f.write("\n")
        return path


def _manifest_path(args, primary):
    if args.manifest:
        return Path(args.manifest)
    if primary is None:
        return None
    return Path(f"{primary}.manifest.json")


def _report_path(report, suffix):
    """reports/cv.json → reports/cv<suffix>"""
    report = Path(report)
    return report.with_name(report.stem + suffix)


# =====================================================================
# COMMANDES
# =====================================================================

def cmd_mine(args, manifest, out):
    print_header("⛏️  EXTRACTION DES EXEMPLES (historique de commits)", out)
    with open(args.commits, "r", encoding="utf-8") as f:
        commits = parse_commit_log(f)
    stats = MiningStats()
    examples = mine_examples(commits, since=args.since, stats=stats)

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8") as f:
        write_examples_jsonl(examples, f)

    n_broken = sum(e.label.value == "broken" for e in examples)
    out(f"   ✅ {len(commits)} commits → {len(examples)} exemples "
        f"({n_broken} broken, {len(examples) - n_broken} working)")
    if stats.skipped:
        out(f"   • Ignorés : {dict(stats.skipped)}")
    out(f"   💾 {out_path}")

    manifest.inputs["commits"] = args.commits
    manifest.outputs["examples"] = str(out_path)
    manifest.counts.update(stats.as_counts())
    return out_path


def cmd_simulate(args, manifest, out):
    print_header("🧪 CRAWL SYNTHÉTIQUE", out)
    cfg = load_synth_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    out(f"   • {cfg.n_examples} exemples, signal={cfg.signal_strength}, seed={cfg.seed}")

    examples = generate_dataset(cfg, n_jobs=args.jobs, progress=not args.quiet)
    manifest_file = write_dataset(examples, args.out)
    n_broken = sum(e.label.value == "broken" for e in examples)
    out(f"   ✅ {len(examples)} triplets écrits ({n_broken} broken)")
    out(f"   💾 {manifest_file}")

    manifest.seed = cfg.seed
    manifest.inputs["config"] = args.config
    manifest.outputs["dataset"] = str(args.out)
    manifest.counts.update({"examples_out": len(examples), "broken": n_broken,
                            "working": len(examples) - n_broken})
    return Path(args.out)


def cmd_diff(args, manifest, out):
    print_header("🔀 GRAPHE D'INTERVENTION", out)
    pre = load_graphml(args.pre)
    post = load_graphml(args.post)
    intervention = build_intervention_graph(pre, post)
    n_flipped = len(flipped_resources(pre, post))
    save_graphml(intervention, args.out)

    if not intervention.nodes:
        logger.warning("aucune ressource débloquée → bloquée : graphe d'intervention vide")
    out(f"   ✅ {n_flipped} ressources bloquées par l'intervention")
    out(f"   • {len(intervention.nodes)} nœuds, {len(intervention.edges)} arêtes")
    out(f"   💾 {args.out}")

    manifest.inputs.update({"pre": args.pre, "post": args.post})
    manifest.outputs["intervention"] = str(args.out)
    manifest.counts.update({"flipped_resources": n_flipped,
                            "nodes": len(intervention.nodes),
                            "edges": len(intervention.edges)})
    return Path(args.out)


def cmd_featurize(args, manifest, out):
    print_header("🔧 EXTRACTION DES FEATURES", out)
    frame, result = featurize_dataset(args.dataset, n_jobs=args.jobs, progress=not args.quiet)
    write_feature_csv(frame, args.out)
    schema_path = Path(args.schema) if args.schema else _report_path(args.out, ".schema.jsonl")
    write_schema_jsonl(result.schema, schema_path)

    out(f"   ✅ {len(frame)} lignes × {len(result.schema)} features")
    if result.skipped_effectless:
        out(f"   • {result.skipped_effectless} triplets sans effet écartés")
    out(f"   💾 {args.out}")
    out(f"   💾 {schema_path}")

    manifest.inputs["dataset"] = str(args.dataset)
    manifest.outputs.update({"features": str(args.out), "schema": str(schema_path)})
    manifest.counts.update({"examples_in": len(frame) + result.skipped_effectless,
                            "examples_out": len(frame),
                            "skipped_effectless": result.skipped_effectless,
                            "features": len(result.schema)})
    return Path(args.out)


def _hyperparams(args):
    return Hyperparams(n_trees=args.n_trees, max_depth=args.max_depth,
                       learning_rate=args.learning_rate, seed=args.seed).validate()


def cmd_train(args, manifest, out):
    print_header("🤖 ENTRAÎNEMENT DU MODÈLE", out)
    matrix = read_feature_csv(args.features)
    out(f"   • {matrix.n_samples} lignes × {len(matrix.names)} features")

    model, summary = train_on_matrix(matrix, _hyperparams(args), args.null_threshold,
                                     args.corr_threshold)
    save_model(model, args.model)
    importance_path = _report_path(args.model, ".importance.csv")
    importance_frame(model).to_csv(importance_path, index=False, float_format="%.10g")

    print_section("📊", "Top features (gain)", out)
    for row in summary["top_features"]:
        out(f"      {row['feature']:50s} {row['importance']:.4f}")
    out(f"\n   ✅ {summary['n_features_kept']} features retenues, "
        f"AUC entraînement {summary['train_auc']:.3f}")
    out(f"   💾 {args.model}")

    manifest.seed = args.seed
    manifest.inputs["features"] = args.features
    manifest.outputs.update({"model": str(args.model), "importance": str(importance_path)})
    manifest.counts.update({k: v for k, v in summary.items() if k != "top_features"})
    return Path(args.model)


def cmd_evaluate(args, manifest, out):
    print_header("📈 VALIDATION CROISÉE IMBRIQUÉE", out)
    matrix = read_feature_csv(args.features)
    report = evaluation.nested_cv(matrix.X, matrix.y, outer=args.outer, inner=args.inner,
                                  budget=args.budget, seed=args.seed, names=matrix.names,
                                  outliers=args.drop_outliers, n_jobs=args.jobs,
                                  progress=not args.quiet)
    evaluation.write_report_json(report, args.report)
    roc_path = _report_path(args.report, ".roc.csv")
    evaluation.write_roc_csv(report, roc_path)
    out(report.summary())
    manifest.outputs.update({"report": str(args.report), "roc": str(roc_path)})

    if args.plot:
        manifest.outputs["plot"] = str(analyze.plot_roc(report, args.plot))
    if args.elimination_report:
        print_section("✂️", "Élimination récursive de features", out)
        elimination = evaluation.recursive_elimination(
            matrix.X, matrix.y, matrix.names, seed=args.seed, n_jobs=args.jobs,
            progress=not args.quiet)
        evaluation.write_report_json(elimination, args.elimination_report)
        for step in elimination.steps:
            out(f"      {step.n_features:4d} features : AUC {step.mean_auc:.4f} "
                f"(± {step.std_auc:.4f})")
        manifest.outputs["elimination"] = str(args.elimination_report)

    manifest.seed = args.seed
    manifest.inputs["features"] = args.features
    manifest.counts.update({"examples_in": matrix.n_samples, "features": len(matrix.names),
                            "mean_auc": report.mean_auc, "std_auc": report.std_auc})
    return Path(args.report)


def _default_loco_targets(names):
    ranked = sorted((spec.rank, spec.name) for spec in schema().specs
                    if spec.rank is not None and spec.name in set(names))
    return list(dimension_groups()) + [name for _, name in ranked]


def cmd_loco(args, manifest, out):
    print_header("🧩 LEAVE-ONE-COVARIATE-OUT", out)
    matrix = read_feature_csv(args.features)
    targets = args.targets if args.targets is not None else _default_loco_targets(matrix.names)
    report = evaluation.loco(matrix.X, matrix.y, matrix.names, targets, folds=args.folds,
                             seed=args.seed, n_jobs=args.jobs, progress=not args.quiet)
    evaluation.write_report_json(report, args.report)
    csv_path = _report_path(args.report, ".csv")
    evaluation.write_loco_csv(report, csv_path)

    out(f"   • Référence : AUC {report.baseline_mean_auc:.4f} (± {report.baseline_std_auc:.4f})")
    for entry in report.entries[:20]:
        out(f"      {entry.rank:3d}. {entry.target:50s} {entry.mean_auc_loss:+.4f} "
            f"(± {entry.std_auc_loss:.4f})")
    if args.plot:
        manifest.outputs["plot"] = str(analyze.plot_loco(report, args.plot))

    manifest.seed = args.seed
    manifest.inputs["features"] = args.features
    manifest.outputs.update({"report": str(args.report), "csv": str(csv_path)})
    manifest.counts.update({"targets": len(targets), "baseline_mean_auc": report.baseline_mean_auc})
    return Path(args.report)


def cmd_curve(args, manifest, out):
    print_header("📉 COURBE D'APPRENTISSAGE", out)
    matrix = read_feature_csv(args.features)
    curve = evaluation.learning_curve(matrix.X, matrix.y, fractions=args.fractions,
                                      folds=args.folds, seed=args.seed, names=matrix.names,
                                      n_jobs=args.jobs, progress=not args.quiet)
    evaluation.write_report_json(curve, args.report)
    csv_path = _report_path(args.report, ".csv")
    evaluation.write_curve_csv(curve, csv_path)

    for point in curve.points:
        if point.available:
            out(f"      {point.fraction:5.0%} : AUC {point.mean_auc:.4f} (± {point.std_auc:.4f})")
        else:
            out(f"      {point.fraction:5.0%} : indisponible")
    if args.plot:
        manifest.outputs["plot"] = str(analyze.plot_learning_curve(curve, args.plot))

    manifest.seed = args.seed
    manifest.inputs["features"] = args.features
    manifest.outputs.update({"report": str(args.report), "csv": str(csv_path)})
    manifest.counts["points"] = len(curve.points)
    return Path(args.report)


def cmd_match(args, manifest, out):
    with open(args.rules, "r", encoding="utf-8") as f:
        parsed = parse_filter_list(f)
    ctx = RequestContext(url=args.url, resource_type=ResourceType(args.type),
                         frame_origin=args.frame)
    decision = decide(parsed.rules, ctx)
    if decision.matched_rule is None:
        print(decision.outcome.value)
    else:
        rule = parsed.rules[decision.matched_rule]
        print(f"{decision.outcome.value}\t{decision.matched_rule}\t{rule.raw}")

    manifest.inputs["rules"] = args.rules
    manifest.counts.update({"rules": len(parsed.rules),
                            "unsupported": sum(parsed.unsupported.values())})
    return None


def cmd_predict(args, manifest, out):
    print_header("🎯 PRÉDICTION", out)
    model = load_model(args.model)
    matrix = read_feature_csv(args.features, require_labels=False)
    frame = predict_matrix(model, matrix)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out_path, index=False, float_format="%.10g")
    out(f"   ✅ {len(frame)} exemples scorés")
    out(f"   💾 {out_path}")

    manifest.inputs.update({"features": args.features, "model": args.model})
    manifest.outputs["predictions"] = str(out_path)
    manifest.counts["examples_out"] = len(frame)
    return out_path


def cmd_pipeline(args, manifest, out):
    """simulate → featurize → train → evaluate dans un même répertoire."""
    root = Path(args.out)
    steps = argparse.Namespace(**vars(args))
    steps.out = root / "dataset"
    cmd_simulate(steps, manifest, out)

    steps.dataset, steps.out, steps.schema = root / "dataset", root / "features.csv", None
    cmd_featurize(steps, manifest, out)

    steps.features = str(root / "features.csv")
    steps.model = root / "model.json"
    steps.seed = manifest.seed
    cmd_train(steps, manifest, out)

    steps.report = root / "report.json"
    steps.elimination_report = None
    cmd_evaluate(steps, manifest, out)
    return root


# =====================================================================
# ARGUMENTS
# =====================================================================

def _date(text):
    try:
        return datetime.strptime(text, "%Y-%m-%d").replace(tzinfo=timezone.utc)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid date {text!r} (expected YYYY-MM-DD)")


def _fractions(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid fraction list {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--jobs", type=int, default=DEFAULT_JOBS,
                        help="Parallélisme interne (défaut : nombre de cœurs)")
    common.add_argument("--log-level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help=f"Niveau de log (défaut : {LOG_LEVEL})")
    common.add_argument("--quiet", action="store_true",
                        help="Pas de bannières ni de barres de progression")
    common.add_argument("--manifest", default=None,
                        help="Chemin du manifest d'exécution (défaut : <sortie>.manifest.json)")

    seeded = argparse.ArgumentParser(add_help=False)
    seeded.add_argument("--seed", type=int, default=DEFAULT_SEED,
                        help=f"Graine (défaut : {DEFAULT_SEED})")

    hyper = argparse.ArgumentParser(add_help=False)
    defaults = Hyperparams()
    hyper.add_argument("--n-trees", type=int, default=defaults.n_trees)
    hyper.add_argument("--max-depth", type=int, default=defaults.max_depth)
    hyper.add_argument("--learning-rate", type=float, default=defaults.learning_rate)
    hyper.add_argument("--null-threshold", type=float, default=DEFAULT_NULL_THRESHOLD)
    hyper.add_argument("--corr-threshold", type=float, default=DEFAULT_CORR_THRESHOLD)

    nested = argparse.ArgumentParser(add_help=False)
    nested.add_argument("--outer", type=int, default=10, help="Folds externes")
    nested.add_argument("--inner", type=int, default=3, help="Folds internes")
    nested.add_argument("--budget", type=int, default=10, help="Configurations par fold")
    nested.add_argument("--drop-outliers", action="store_true",
                        help="Retire le 1 %% de pages au ratio nœuds/arêtes le plus élevé")
    nested.add_argument("--plot", default=None, help="PNG de la courbe ROC")

    parser = argparse.ArgumentParser(
        prog="breakage",
        description="Prédiction de casse des pages web par les listes de filtres")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__} (feature schema {SCHEMA_VERSION})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", parents=[common], help="Commits → exemples étiquetés")
    p.add_argument("--commits", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--since", type=_date, default=DEFAULT_SINCE,
                   help="Date minimale des commits (défaut : 2013-01-01)")

    p = sub.add_parser("simulate", parents=[common], help="Crawl synthétique → triplets GraphML")
    p.add_argument("--config", required=True, help="Configuration YAML")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="Surcharge la graine de la configuration")

    p = sub.add_parser("diff", parents=[common], help="pre + post → graphe d'intervention")
    p.add_argument("--pre", required=True)
    p.add_argument("--post", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("featurize", parents=[common], help="Dataset → CSV de features")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--schema", default=None, help="Schéma JSONL (défaut : <out>.schema.jsonl)")

    p = sub.add_parser("train", parents=[common, seeded, hyper], help="Entraîne le GBDT")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)

    p = sub.add_parser("evaluate", parents=[common, seeded, nested],
                       help="Validation croisée imbriquée")
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--elimination-report", default=None,
                   help="Lance aussi l'élimination récursive et écrit son rapport")

    p = sub.add_parser("loco", parents=[common, seeded], help="Importance LOCO")
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--targets", nargs="*", default=None,
                   help="Features ou groupes (défaut : 6 groupes + features classées)")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--plot", default=None)

    p = sub.add_parser("curve", parents=[common, seeded], help="Courbe d'apprentissage")
    p.add_argument("--features", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--fractions", type=_fractions,
                   default=list(evaluation.LEARNING_CURVE_FRACTIONS))
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--plot", default=None)

    p = sub.add_parser("match", parents=[common], help="Décision d'une liste pour une requête")
    p.add_argument("--rules", required=True)
    p.add_argument("--url", required=True)
    p.add_argument("--type", required=True, type=str.lower,
                   choices=[t.value for t in ResourceType])
    p.add_argument("--frame", required=True, help="Hôte du document qui émet la requête")

    p = sub.add_parser("predict", parents=[common], help="Score un CSV de features")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("pipeline", parents=[common, hyper, nested],
                       help="simulate → featurize → train → evaluate")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="Surcharge la graine de la configuration")

    return parser


COMMANDS = {
    "mine": cmd_mine,
    "simulate": cmd_simulate,
    "diff": cmd_diff,
    "featurize": cmd_featurize,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "loco": cmd_loco,
    "curve": cmd_curve,
    "match": cmd_match,
    "predict": cmd_predict,
    "pipeline": cmd_pipeline,
}


def _setup_logging(args):
    level = args.log_level or ("WARNING" if args.quiet else LOG_LEVEL)
    logging.basicConfig(level=level, force=True,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_INPUT
    _setup_logging(args)

    out = _silent if args.quiet or args.command == "match" else print
    manifest = RunManifest(command=args.command, argv=argv)
    started = time.perf_counter()
    try:
        primary = COMMANDS[args.command](args, manifest, out)
    except (BreakageError, FileNotFoundError) as e:
        logger.error("%s: %s", type(e).__name__, e)
        return EXIT_INPUT
    except Exception:
        logger.exception("erreur interne")
        return EXIT_INTERNAL

    manifest.wall_time_s = round(time.perf_counter() - started, 3)
    path = _manifest_path(args, primary)
    if path is None:
        logger.info("manifest: %s", json.dumps(asdict(manifest), default=str))
    else:
        manifest.write(path)
        out(f"\n📝 Manifest : {path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
