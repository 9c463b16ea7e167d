"""
Fixtures partagées : commits d'EasyList, petit graphe image/requête/réponse,
petit dataset synthétique et matrices jouets.
"""

import json

import numpy as np
import pytest

from src.data_collection.synth_crawl import SynthConfig, generate_dataset, write_dataset
from src.graphs.page_graph import EdgeKind, GraphEdge, GraphNode, NodeKind, PageGraph

MEALTY_RULE = "@@||mealty.ru/js/ga_events.js$~third-party"
SFZOVER_RULE = "||sfzover.com^"


# =====================================================================
# COMMITS
# =====================================================================

@pytest.fixture
def fix_commit():
    """Commit « P: » qui ajoute une exception pour mealty.ru."""
    return {
        "id": "a509c21b",
        "timestamp": "2020-06-11T08:15:00Z",
        "message": ("P: https://www.mealty.ru/catalog/ (Fixes\n"
                    "  https://forums.lanik.us/viewtopic.php?t=47335)"),
        "files": [{
            "path": "easyprivacy/easyprivacy_allowlist_international.txt",
            "added": [MEALTY_RULE],
            "removed": [],
        }],
    }


@pytest.fixture
def coverage_commit():
    """Commit « A: » qui bloque un serveur publicitaire vu sur tinyzonetv.to."""
    return {
        "id": "0c453dbe",
        "timestamp": "2021-03-02T19:40:00Z",
        "message": "A: https://tinyzonetv.to/\nBlock adserver at https://tinyzonetv.to/",
        "files": [{
            "path": "easylist/easylist_adservers.txt",
            "added": [SFZOVER_RULE],
            "removed": [],
        }],
    }


def _commit_log(*records):
    return "".join(json.dumps(r) + "\n" for r in records)


@pytest.fixture
def write_commit_log(tmp_path):
    """Écrit des enregistrements en JSONL et renvoie le chemin."""
    def write(*records, name="commits.jsonl"):
        path = tmp_path / name
        path.write_text(_commit_log(*records), encoding="utf-8")
        return path
    return write


@pytest.fixture
def commit_log_file(write_commit_log, fix_commit, coverage_commit):
    return write_commit_log(fix_commit, coverage_commit)


# =====================================================================
# GRAPHES
# =====================================================================

IMAGE_URL = "https://a.com/b.png"


@pytest.fixture
def image_pre():
    """parser → <img> → requête image → réponse 200 (13191 octets)."""
    return PageGraph(
        nodes=(
            GraphNode(id=1, kind=NodeKind.PARSER, frame_id=0),
            GraphNode(id=197, kind=NodeKind.DOM_NODE, tag="img", frame_id=0),
            GraphNode(id=2, kind=NodeKind.NETWORK_RESOURCE, url=IMAGE_URL),
        ),
        edges=(
            GraphEdge(id=1, src=1, dst=197, kind=EdgeKind.NODE_CREATE),
            GraphEdge(id=2, src=197, dst=2, kind=EdgeKind.HTTP_REQUEST,
                      request_type="image", size_bytes=1880),
            GraphEdge(id=3, src=2, dst=197, kind=EdgeKind.HTTP_RESPONSE,
                      status=200, size_bytes=13191),
        ),
        page_url="https://a.com/",
    )


@pytest.fixture
def image_post(image_pre):
    """Même page, l'image bloquée par une règle : plus de réponse."""
    return PageGraph(
        nodes=image_pre.nodes + (GraphNode(id=3, kind=NodeKind.FILTER_RULE),),
        edges=image_pre.edges[:2] + (
            GraphEdge(id=4, src=3, dst=2, kind=EdgeKind.RESOURCE_BLOCK, key="||a.com/b.png"),
        ),
        page_url="https://a.com/",
    )


# =====================================================================
# DONNÉES SYNTHÉTIQUES
# =====================================================================

@pytest.fixture(scope="session")
def synth_config():
    return SynthConfig(seed=7, n_examples=24, broken_fraction=0.5, signal_strength=1.0,
                       size_min=50, size_max=120)


@pytest.fixture(scope="session")
def synth_examples(synth_config):
    return generate_dataset(synth_config)


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory, synth_examples):
    directory = tmp_path_factory.mktemp("synth")
    write_dataset(synth_examples, directory)
    return directory


@pytest.fixture
def separable():
    """100 lignes, 2 features : la première sépare parfaitement les classes."""
    rng = np.random.default_rng(0)
    y = np.repeat([0, 1], 50)
    X = np.column_stack([
        np.where(y == 1, rng.uniform(1.0, 2.0, 100), rng.uniform(-2.0, -1.0, 100)),
        rng.normal(size=100),
    ])
    return X, y


@pytest.fixture
def planted():
    """
    200 lignes, 6 features : `signal` porte le label, `noise.*` non,
    `partial` est faiblement corrélée au label.
    """
    rng = np.random.default_rng(3)
    y = np.repeat([0, 1], 100)
    rng.shuffle(y)
    signal = y * 2.0 + rng.normal(scale=0.3, size=200)
    partial = y * 0.5 + rng.normal(size=200)
    noise = rng.normal(size=(200, 4))
    X = np.column_stack([signal, partial, noise])
    names = ["signal", "partial", "noise.a", "noise.b", "noise.c", "noise.d"]
    return X, y, names
