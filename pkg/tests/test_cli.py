import json

import pandas as pd
import pytest

from src.cli import EXIT_INPUT, EXIT_OK, main
from src.graphs.graphml import load_graphml, save_graphml

QUIET = ["--jobs", "1", "--quiet"]

SMALL_CONFIG = """\
seed: 5
n_examples: 12
broken_fraction: 0.5
signal_strength: 1.0
size_range: [50, 80]
"""


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "synth.yaml"
    path.write_text(SMALL_CONFIG, encoding="utf-8")
    return path


@pytest.fixture(scope="module")
def features_csv(tmp_path_factory, synth_dir):
    path = tmp_path_factory.mktemp("features") / "features.csv"
    assert main(["featurize", "--dataset", str(synth_dir), "--out", str(path), *QUIET]) == 0
    return path


@pytest.fixture(scope="module")
def model_json(tmp_path_factory, features_csv):
    path = tmp_path_factory.mktemp("models") / "model.json"
    code = main(["train", "--features", str(features_csv), "--model", str(path),
                 "--n-trees", "20", *QUIET])
    assert code == 0
    return path


def test_version(capsys):
    assert main(["--version"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "breakage 1.0.0 (feature schema 1)"


def test_usage_errors():
    assert main([]) == EXIT_INPUT
    assert main(["mine", "--commits", "x.jsonl"]) == EXIT_INPUT
    assert main(["mine", "--commits", "x", "--out", "y", "--since", "11/06/2020"]) == EXIT_INPUT


# =====================================================================
# mine / match / diff
# =====================================================================

def test_mine(tmp_path, commit_log_file):
    out = tmp_path / "examples.jsonl"
    assert main(["mine", "--commits", str(commit_log_file), "--out", str(out), *QUIET]) == 0
    rows = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert [r["label"] for r in rows] == ["broken", "working"]

    manifest = read_json(tmp_path / "examples.jsonl.manifest.json")
    assert manifest["command"] == "mine"
    assert manifest["counts"]["examples"] == 2
    assert manifest["schema_version"] == "1"


def test_mine_since(tmp_path, commit_log_file):
    out = tmp_path / "examples.jsonl"
    assert main(["mine", "--commits", str(commit_log_file), "--out", str(out),
                 "--since", "2021-01-01", *QUIET]) == 0
    assert len(out.read_text(encoding="utf-8").splitlines()) == 1


def test_mine_rejects_malformed_log(tmp_path, write_commit_log, fix_commit):
    path = write_commit_log(fix_commit)
    with open(path, "a", encoding="utf-8") as f:
        f.write('{"id": \n')
    assert main(["mine", "--commits", str(path), "--out", str(tmp_path / "o.jsonl"),
                 *QUIET]) == EXIT_INPUT
    assert main(["mine", "--commits", str(tmp_path / "absent.jsonl"),
                 "--out", str(tmp_path / "o.jsonl"), *QUIET]) == EXIT_INPUT


def test_match(tmp_path, capsys):
    rules = tmp_path / "list.txt"
    rules.write_text("[Adblock Plus 2.0]\n||sfzover.com^\n@@||mealty.ru/js/ga_events.js"
                     "$~third-party\n", encoding="utf-8")
    base = ["match", "--rules", str(rules), "--type", "script"]

    assert main(base + ["--url", "https://sfzover.com/ad.js", "--frame", "tinyzonetv.to"]) == 0
    assert capsys.readouterr().out == "blocked\t0\t||sfzover.com^\n"

    assert main(base + ["--url", "https://tinyzonetv.to/app.js", "--frame", "tinyzonetv.to"]) == 0
    assert capsys.readouterr().out == "allowed\n"

    assert main(base + ["--url", "https://mealty.ru/js/ga_events.js",
                        "--frame", "www.mealty.ru"]) == 0
    assert capsys.readouterr().out.startswith("exception_allowed\t1\t")

    assert main(["match", "--rules", str(rules), "--type", "Script",
                 "--url", "https://sfzover.com/ad.js", "--frame", "tinyzonetv.to"]) == 0
    assert capsys.readouterr().out.startswith("blocked\t0")


def test_match_rejects_unknown_type(tmp_path):
    rules = tmp_path / "list.txt"
    rules.write_text("||a.com^\n", encoding="utf-8")
    assert main(["match", "--rules", str(rules), "--url", "https://a.com/", "--type", "font",
                 "--frame", "a.com"]) == EXIT_INPUT


def test_diff(tmp_path, image_pre, image_post):
    save_graphml(image_pre, tmp_path / "a.pre.graphml")
    save_graphml(image_post, tmp_path / "a.post.graphml")
    out = tmp_path / "a.intervention.graphml"
    assert main(["diff", "--pre", str(tmp_path / "a.pre.graphml"),
                 "--post", str(tmp_path / "a.post.graphml"), "--out", str(out), *QUIET]) == 0
    assert sorted(n.id for n in load_graphml(out).nodes) == [1, 2, 197]
    assert [n.id for n in load_graphml(out).nodes if n.flipped] == [2]
    assert read_json(tmp_path / "a.intervention.graphml.manifest.json")["counts"][
        "flipped_resources"] == 1


def test_diff_rejects_invalid_graph(tmp_path, image_pre):
    save_graphml(image_pre, tmp_path / "pre.graphml")
    (tmp_path / "post.graphml").write_text("<graphml>", encoding="utf-8")
    assert main(["diff", "--pre", str(tmp_path / "pre.graphml"),
                 "--post", str(tmp_path / "post.graphml"),
                 "--out", str(tmp_path / "i.graphml"), *QUIET]) == EXIT_INPUT


# =====================================================================
# simulate / featurize
# =====================================================================

def test_simulate(tmp_path, config_file):
    out = tmp_path / "synth"
    assert main(["simulate", "--config", str(config_file), "--out", str(out), "--seed", "9",
                 *QUIET]) == 0
    assert len((out / "manifest.jsonl").read_text(encoding="utf-8").splitlines()) == 12
    assert len(list(out.glob("*.graphml"))) == 36
    manifest = read_json(tmp_path / "synth.manifest.json")
    assert manifest["seed"] == 9
    assert manifest["counts"]["broken"] == 6


def test_simulate_rejects_bad_config(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("n_examples: 1\n", encoding="utf-8")
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "o"),
                 *QUIET]) == EXIT_INPUT


def test_featurize(features_csv, synth_config):
    frame = pd.read_csv(features_csv)
    assert len(frame) == synth_config.n_examples
    schema_file = features_csv.with_name("features.schema.jsonl")
    n_schema = len(schema_file.read_text(encoding="utf-8").splitlines())
    assert n_schema == frame.shape[1] - 2
    manifest = read_json(features_csv.with_name("features.csv.manifest.json"))
    assert manifest["counts"]["skipped_effectless"] == 0


# =====================================================================
# train / predict
# =====================================================================

def test_train(model_json):
    document = read_json(model_json)
    assert document["format"] == "breakage-gbdt"
    assert len(document["trees"]) == 20
    importance = pd.read_csv(model_json.with_name("model.importance.csv"))
    assert list(importance.columns) == ["feature", "importance"]
    manifest = read_json(model_json.with_name("model.json.manifest.json"))
    assert manifest["counts"]["train_auc"] > 0.9


def test_train_rejects_bad_hyperparams(tmp_path, features_csv):
    assert main(["train", "--features", str(features_csv), "--model",
                 str(tmp_path / "m.json"), "--learning-rate", "0", *QUIET]) == EXIT_INPUT


def test_predict(tmp_path, features_csv, model_json):
    out = tmp_path / "scores.csv"
    assert main(["predict", "--features", str(features_csv), "--model", str(model_json),
                 "--out", str(out), *QUIET]) == 0
    scores = pd.read_csv(out)
    assert list(scores.columns) == ["example_id", "probability", "label"]
    assert scores["probability"].between(0, 1).all()


def test_predict_rejects_other_columns(tmp_path, features_csv, model_json):
    frame = pd.read_csv(features_csv).iloc[:, :5]
    path = tmp_path / "narrow.csv"
    frame.to_csv(path, index=False)
    assert main(["predict", "--features", str(path), "--model", str(model_json),
                 "--out", str(tmp_path / "s.csv"), *QUIET]) == EXIT_INPUT


# =====================================================================
# evaluate / loco / curve / pipeline
# =====================================================================

def test_evaluate(tmp_path, features_csv):
    report = tmp_path / "cv.json"
    code = main(["evaluate", "--features", str(features_csv), "--report", str(report),
                 "--outer", "3", "--inner", "2", "--budget", "1", "--plot",
                 str(tmp_path / "roc.png"), *QUIET])
    assert code == 0
    document = read_json(report)
    assert len(document["fold_aucs"]) == 3
    assert (tmp_path / "cv.roc.csv").exists()
    assert (tmp_path / "roc.png").exists()


def test_evaluate_needs_enough_examples(tmp_path, features_csv):
    assert main(["evaluate", "--features", str(features_csv), "--report",
                 str(tmp_path / "cv.json"), "--outer", "10", *QUIET]) == EXIT_INPUT


def test_loco(tmp_path, features_csv):
    report = tmp_path / "loco.json"
    code = main(["loco", "--features", str(features_csv), "--report", str(report),
                 "--targets", "page", "intervention", "--folds", "3", *QUIET])
    assert code == 0
    entries = read_json(report)["entries"]
    assert {e["target"] for e in entries} == {"page", "intervention"}
    assert len(pd.read_csv(tmp_path / "loco.csv")) == 2


def test_loco_rejects_unknown_target(tmp_path, features_csv):
    assert main(["loco", "--features", str(features_csv), "--report",
                 str(tmp_path / "loco.json"), "--targets", "nope", *QUIET]) == EXIT_INPUT


def test_curve(tmp_path, features_csv):
    report = tmp_path / "curve.json"
    code = main(["curve", "--features", str(features_csv), "--report", str(report),
                 "--fractions", "0.5,1", "--folds", "3", *QUIET])
    assert code == 0
    points = read_json(report)["points"]
    assert [p["fraction"] for p in points] == [0.5, 1.0]
    assert len(pd.read_csv(tmp_path / "curve.csv")) == 2


@pytest.mark.slow
def test_pipeline(tmp_path, config_file):
    out = tmp_path / "run"
    code = main(["pipeline", "--config", str(config_file), "--out", str(out),
                 "--n-trees", "10", "--outer", "3", "--inner", "2", "--budget", "1", *QUIET])
    assert code == 0
    for name in ("dataset/manifest.jsonl", "features.csv", "model.json", "report.json"):
        assert (out / name).exists()
    assert read_json(tmp_path / "run.manifest.json")["command"] == "pipeline"
