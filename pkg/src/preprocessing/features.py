"""
Extraction des features à partir du triplet (pré, post, intervention)

Trois dimensions :
  - portée      : page (graphe pré) / intervention (graphe intervention seule)
  - valeur      : absolue / relative (intervention ÷ page) / delta (pré − post)
  - origine     : expertise / grille automatique

Grille automatique : {types de nœuds, types d'arêtes, balises HTML, préfixes
d'API Web} × {comptage page, comptage intervention, ratio intervention/page}.
S'y ajoutent les features nommées (expertise et classement d'importance).

Les graphes sont convertis en listes d'arêtes (DataFrames pandas) avant
calcul ; une valeur manquante (NaN) signale un dénominateur nul.
"""

import logging
from dataclasses import asdict, dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from src.graphs.html_tags import HTML_TAGS
from src.graphs.page_graph import EdgeKind, NodeKind
from src.preprocessing.intervention_diff import flipped_in, is_effectless

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

API_PREFIXES = (
    "window.navigator",
    "window.screen",
    "window.location",
    "window.history",
    "document.cookie",
    "document.write",
    "document.createElement",
    "document.querySelector",
    "WebGLRenderingContext",
    "CanvasRenderingContext2D",
    "XMLHttpRequest",
    "window.fetch",
    "window.postMessage",
    "window.setTimeout",
    "Storage",
)

NODE_COLUMNS = ["id", "kind", "tag", "url", "api_name", "storage_kind", "text_len", "frame_id",
                "flipped"]
EDGE_COLUMNS = ["id", "src", "dst", "kind", "request_type", "status", "size_bytes", "key",
                "cross_frame"]

STORAGE_EDGES = (EdgeKind.STORAGE_SET.value, EdgeKind.STORAGE_READ.value,
                 EdgeKind.STORAGE_DELETE.value)
ACTOR_KINDS = (NodeKind.PARSER.value, NodeKind.SCRIPT_ACTOR.value,
               NodeKind.FILTER_RULE.value, NodeKind.CONTENT_BLOCKER.value)


class Scope(str, Enum):
    PAGE = "page"
    INTERVENTION = "intervention"


class ValueKind(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"
    DELTA = "delta"


class Source(str, Enum):
    EXPERT = "expert"
    AUTO = "auto"


class Category(str, Enum):
    HTML_STRUCTURE = "html_structure"
    JS_DOM_MODIFICATION = "js_dom_modification"
    JS_OTHER = "js_other"
    NETWORK = "network"
    GENERIC_GRAPH = "generic_graph"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    scope: Scope
    kind: ValueKind
    source: Source
    category: Category
    description: str = ""
    rank: Optional[int] = None

    def to_dict(self):
        row = asdict(self)
        for key in ("scope", "kind", "source", "category"):
            row[key] = row[key].value
        return row


@dataclass(frozen=True)
class FeatureSchema:
    specs: tuple
    version: str = SCHEMA_VERSION

    @property
    def names(self):
        return [spec.name for spec in self.specs]

    def __len__(self):
        return len(self.specs)

    def index(self, name):
        return self.names.index(name)


@dataclass(frozen=True)
class FeatureVector:
    example_id: str
    label: Optional[str]
    values: tuple


# =====================================================================
# LISTES D'ARÊTES
# =====================================================================

def _value(v):
    return v.value if isinstance(v, Enum) else v


def graph_frames(g):
    """
    Graphe → (nodes, edges) ; edges porte aussi le type et les attributs
    utiles de ses extrémités (src_kind, src_tag, dst_kind, dst_tag, …).
    """
    nodes = pd.DataFrame(
        [{"id": n.id, "kind": n.kind.value, **n.attrs()} for n in g.nodes],
        columns=NODE_COLUMNS,
    )
    edges = pd.DataFrame(
        [{"id": e.id, "src": e.src, "dst": e.dst, "kind": e.kind.value,
          **{k: _value(v) for k, v in e.attrs().items()}} for e in g.edges],
        columns=EDGE_COLUMNS,
    )
    src = nodes[["id", "kind", "tag"]].rename(
        columns={"id": "src", "kind": "src_kind", "tag": "src_tag"})
    dst = nodes[["id", "kind", "tag", "api_name", "storage_kind", "text_len"]].rename(
        columns={"id": "dst", "kind": "dst_kind", "tag": "dst_tag", "api_name": "dst_api_name",
                 "storage_kind": "dst_storage_kind", "text_len": "dst_text_len"})
    edges = edges.merge(src, on="src", how="left").merge(dst, on="dst", how="left")
    return nodes, edges


def _api_mask(edges, prefix):
    names = edges["dst_api_name"].fillna("").astype(str)
    return (edges["kind"] == EdgeKind.API_CALL.value) & names.str.startswith(prefix)


def _storage_mask(edges, storage_kind, kinds=STORAGE_EDGES):
    return edges["kind"].isin(kinds) & (edges["dst_storage_kind"] == storage_kind)


def _bytes(edges, mask=None):
    selected = edges["kind"] == EdgeKind.HTTP_RESPONSE.value
    if mask is not None:
        selected &= mask
    return float(pd.to_numeric(edges.loc[selected, "size_bytes"], errors="coerce")
                 .fillna(0).sum())


def _ratio(numerator, denominator):
    return numerator / denominator if denominator else np.nan


class _Graphs:
    """Listes d'arêtes des trois graphes + ressources/scripts bloqués."""

    def __init__(self, pre, post, intervention):
        self.pre_nodes, self.pre_edges = graph_frames(pre)
        self.post_nodes, self.post_edges = graph_frames(post)
        self.intv_nodes, self.intv_edges = graph_frames(intervention)

        # ressources bloquées : marquées flipped dans le graphe d'intervention
        self.blocked = flipped_in(intervention)

        edges = self.intv_edges
        requesters = edges[(edges["kind"] == EdgeKind.HTTP_REQUEST.value)
                           & edges["dst"].isin(self.blocked)
                           & (edges["src_tag"] == "script")]["src"]
        executes = edges[(edges["kind"] == EdgeKind.SCRIPT_EXECUTE.value)
                         & edges["src"].isin(set(requesters))
                         & (edges["dst_kind"] == NodeKind.SCRIPT_ACTOR.value)]
        self.blocked_scripts = set(executes["dst"])

    def by_blocked_scripts(self, mask=None):
        edges = self.intv_edges
        selected = edges["src"].isin(self.blocked_scripts)
        return edges[selected if mask is None else selected & mask]

    def count_by_blocked(self, mask_fn):
        return float(len(self.by_blocked_scripts(mask_fn(self.intv_edges))))

    def count_in_page(self, mask_fn):
        return float(mask_fn(self.pre_edges).sum())

    def ratio_by_blocked(self, mask_fn):
        return _ratio(self.count_by_blocked(mask_fn), self.count_in_page(mask_fn))

    def count_intv_requests(self, request_type):
        edges = self.intv_edges
        mask = ((edges["kind"] == EdgeKind.HTTP_REQUEST.value)
                & (edges["request_type"] == request_type)
                & edges["dst"].isin(self.blocked))
        return float(mask.sum())

    def tag_share(self, tag):
        dom = self.pre_nodes[self.pre_nodes["kind"] == NodeKind.DOM_NODE.value]
        return _ratio(float((dom["tag"] == tag).sum()), float(len(dom)))


def _kind(kind):
    return lambda e: e["kind"] == kind.value


def _parser_creates(edges):
    return ((edges["kind"] == EdgeKind.NODE_CREATE.value)
            & (edges["src_kind"] == NodeKind.PARSER.value)
            & edges["dst_kind"].isin([NodeKind.DOM_NODE.value, NodeKind.TEXT_NODE.value]))


def _script_creates(edges):
    return ((edges["kind"] == EdgeKind.NODE_CREATE.value)
            & (edges["src_kind"] == NodeKind.SCRIPT_ACTOR.value))


def _frame_count(nodes):
    return float(nodes["frame_id"].dropna().nunique())


# =====================================================================
# FEATURES NOMMÉES
# =====================================================================

# Chaque entrée : nom, rang d'importance (ou None), portée, valeur, origine,
# catégorie, description, fonction de calcul sur _Graphs.
S, K, O, C = Scope, ValueKind, Source, Category

NAMED_FEATURES = (
    ("net.delta_bytes_after_blocking", 1, S.INTERVENTION, K.DELTA, O.EXPERT, C.NETWORK,
     "Δ des octets reçus après blocage",
     lambda g: _bytes(g.pre_edges) - _bytes(g.post_edges)),
    ("intv.sum.blocked_resource_bytes", 2, S.INTERVENTION, K.ABSOLUTE, O.EXPERT, C.NETWORK,
     "taille des ressources directement bloquées",
     lambda g: _bytes(g.intv_edges, g.intv_edges["src"].isin(g.blocked))),
    ("intv.ratio.request.subdocument", 3, S.INTERVENTION, K.RELATIVE, O.AUTO,
     C.HTML_STRUCTURE, "% des requêtes de sous-documents bloquées",
     lambda g: _ratio(
         g.count_intv_requests("subdocument"),
         float(((g.pre_edges["kind"] == EdgeKind.HTTP_REQUEST.value)
                & (g.pre_edges["request_type"] == "subdocument")).sum()))),
    ("intv.count.scripts_fetched_by_blocked", 5, S.INTERVENTION, K.ABSOLUTE, O.AUTO,
     C.JS_OTHER, "# de scripts chargés ou évalués par les scripts bloqués",
     lambda g: g.count_by_blocked(_kind(EdgeKind.SCRIPT_EXECUTE))),
    ("page.count.parser_created_nodes", 6, S.PAGE, K.ABSOLUTE, O.AUTO, C.HTML_STRUCTURE,
     "# de balises et nœuds texte du HTML initial",
     lambda g: g.count_in_page(_parser_creates)),
    ("intv.count.parser_nodes_prevented", 7, S.INTERVENTION, K.DELTA, O.AUTO,
     C.JS_DOM_MODIFICATION, "# de nœuds DOM du parser empêchés par le blocage",
     lambda g: float(_parser_creates(g.pre_edges).sum() - _parser_creates(g.post_edges).sum())),
    ("page.count.storage_delete.sessionStorage", 8, S.PAGE, K.ABSOLUTE, O.EXPERT, C.JS_OTHER,
     "# de suppressions dans sessionStorage",
     lambda g: g.count_in_page(
         lambda e: _storage_mask(e, "sessionStorage", (EdgeKind.STORAGE_DELETE.value,)))),
    ("intv.ratio.cookie_sets_by_blocked", 9, S.INTERVENTION, K.RELATIVE, O.EXPERT, C.JS_OTHER,
     "% des écritures document.cookie faites par les scripts bloqués",
     lambda g: g.ratio_by_blocked(
         lambda e: _storage_mask(e, "cookie", (EdgeKind.STORAGE_SET.value,)))),
    ("intv.ratio.localstorage_ops_by_blocked", 10, S.INTERVENTION, K.RELATIVE, O.AUTO,
     C.JS_OTHER, "% des opérations localStorage faites par les scripts bloqués",
     lambda g: g.ratio_by_blocked(lambda e: _storage_mask(e, "localStorage"))),
    ("page.count.unique_node_edge_types", 11, S.PAGE, K.ABSOLUTE, O.AUTO, C.GENERIC_GRAPH,
     "# de types de nœuds et d'arêtes distincts",
     lambda g: float(g.pre_nodes["kind"].nunique() + g.pre_edges["kind"].nunique())),
    ("intv.ratio.script_nodes_by_blocked", 12, S.INTERVENTION, K.RELATIVE, O.AUTO,
     C.JS_DOM_MODIFICATION, "% des nœuds DOM créés en JS par les scripts bloqués",
     lambda g: g.ratio_by_blocked(_script_creates)),
    ("html.delta_subdocuments_after_blocking", 13, S.INTERVENTION, K.DELTA, O.AUTO,
     C.HTML_STRUCTURE, "Δ du nombre de sous-documents après blocage",
     lambda g: _frame_count(g.pre_nodes) - _frame_count(g.post_nodes)),
    ("page.count.scripts_fetched", 14, S.PAGE, K.ABSOLUTE, O.AUTO, C.JS_OTHER,
     "# de scripts chargés ou évalués dans la page",
     lambda g: g.count_in_page(_kind(EdgeKind.SCRIPT_EXECUTE))),
    ("intv.count.cookie_reads_by_blocked", 15, S.INTERVENTION, K.ABSOLUTE, O.EXPERT,
     C.JS_OTHER, "# de lectures document.cookie par les scripts bloqués",
     lambda g: g.count_by_blocked(
         lambda e: _storage_mask(e, "cookie", (EdgeKind.STORAGE_READ.value,)))),
    ("intv.count.node_inserts_by_blocked", 16, S.INTERVENTION, K.ABSOLUTE, O.AUTO,
     C.JS_DOM_MODIFICATION, "# d'insertions DOM par les scripts bloqués",
     lambda g: g.count_by_blocked(_kind(EdgeKind.NODE_INSERT))),
    ("page.count.cookie_ops", 17, S.PAGE, K.ABSOLUTE, O.AUTO, C.JS_OTHER,
     "# d'opérations document.cookie dans la page",
     lambda g: g.count_in_page(lambda e: _storage_mask(e, "cookie"))),
    ("intv.ratio.sessionstorage_ops_by_blocked", 18, S.INTERVENTION, K.RELATIVE, O.AUTO,
     C.JS_OTHER, "% des opérations sessionStorage faites par les scripts bloqués",
     lambda g: g.ratio_by_blocked(lambda e: _storage_mask(e, "sessionStorage"))),
    ("intv.count.html_created_by_blocked", 21, S.INTERVENTION, K.ABSOLUTE, O.EXPERT,
     C.JS_DOM_MODIFICATION, "# d'éléments <html> créés par les scripts bloqués",
     lambda g: g.count_by_blocked(
         lambda e: (e["kind"] == EdgeKind.NODE_CREATE.value) & (e["dst_tag"] == "html"))),
    ("intv.count.unique_actions_by_blocked", 22, S.INTERVENTION, K.ABSOLUTE, O.AUTO,
     C.GENERIC_GRAPH, "# de types d'actions distincts des scripts bloqués",
     lambda g: float(g.by_blocked_scripts()["kind"].nunique())),
    ("intv.count.api_calls_by_blocked", 23, S.INTERVENTION, K.ABSOLUTE, O.AUTO, C.JS_OTHER,
     "# d'appels d'API Web par les scripts bloqués",
     lambda g: g.count_by_blocked(_kind(EdgeKind.API_CALL))),
    ("intv.count.nodes_created_by_blocked", 25, S.INTERVENTION, K.ABSOLUTE, O.EXPERT,
     C.JS_DOM_MODIFICATION, "# de nœuds DOM créés par les scripts bloqués",
     lambda g: g.count_by_blocked(_kind(EdgeKind.NODE_CREATE))),
    ("intv.ratio.listener_removals_by_blocked", 26, S.INTERVENTION, K.RELATIVE, O.AUTO,
     C.JS_OTHER, "% des retraits d'eventListener faits par les scripts bloqués",
     lambda g: g.ratio_by_blocked(_kind(EdgeKind.EVENT_LISTENER_REMOVE))),
    ("page.ratio.network_actions", 27, S.PAGE, K.RELATIVE, O.AUTO, C.NETWORK,
     "% des actions de la page qui sont des requêtes réseau",
     lambda g: _ratio(g.count_in_page(_kind(EdgeKind.HTTP_REQUEST)),
                      g.count_in_page(lambda e: e["src_kind"].isin(ACTOR_KINDS)))),
    ("intv.ratio.navigator_reads_by_blocked", 29, S.INTERVENTION, K.RELATIVE, O.EXPERT,
     C.JS_OTHER, "% des lectures window.navigator faites par les scripts bloqués",
     lambda g: g.ratio_by_blocked(lambda e: _api_mask(e, "window.navigator"))),
    ("page.count.script_created_nodes", 30, S.PAGE, K.ABSOLUTE, O.AUTO,
     C.JS_DOM_MODIFICATION, "# de nœuds DOM créés par des scripts dans la page",
     lambda g: g.count_in_page(_script_creates)),
    ("page.ratio.tag.html", 33, S.PAGE, K.RELATIVE, O.AUTO, C.HTML_STRUCTURE,
     "% des nœuds DOM qui sont <html>",
     lambda g: g.tag_share("html")),
    ("intv.ratio.node_deletes_by_blocked", 34, S.INTERVENTION, K.RELATIVE, O.AUTO,
     C.JS_DOM_MODIFICATION, "% des suppressions de nœuds DOM faites par les scripts bloqués",
     lambda g: g.ratio_by_blocked(_kind(EdgeKind.NODE_DELETE))),
    ("page.count.unique_actions", 35, S.PAGE, K.ABSOLUTE, O.AUTO, C.GENERIC_GRAPH,
     "# de types d'actions distincts dans la page",
     lambda g: float(g.pre_edges["kind"].nunique())),
    ("page.ratio.tag.iframe", 36, S.PAGE, K.RELATIVE, O.AUTO, C.HTML_STRUCTURE,
     "% des nœuds DOM qui sont <iframe>",
     lambda g: g.tag_share("iframe")),
    ("page.count.cross_document_script_reads", 38, S.PAGE, K.ABSOLUTE, O.AUTO, C.JS_OTHER,
     "# de lectures inter-documents par des scripts",
     lambda g: g.count_in_page(
         lambda e: (e["kind"] == EdgeKind.API_CALL.value) & e["cross_frame"].eq(True))),
    ("page.count.storage_read.localStorage", 39, S.PAGE, K.ABSOLUTE, O.EXPERT, C.JS_OTHER,
     "# de lectures localStorage dans la page",
     lambda g: g.count_in_page(
         lambda e: _storage_mask(e, "localStorage", (EdgeKind.STORAGE_READ.value,)))),

    # exemples d'expertise sans rang d'importance
    ("intv.flag.blocked_script_fetches_scripts", None, S.INTERVENTION, K.ABSOLUTE, O.EXPERT,
     C.JS_OTHER, "un script bloqué charge-t-il d'autres scripts",
     lambda g: float(g.count_by_blocked(_kind(EdgeKind.SCRIPT_EXECUTE)) > 0)),
    ("intv.count.listeners_registered_by_blocked", None, S.INTERVENTION, K.ABSOLUTE,
     O.EXPERT, C.JS_OTHER, "# de gestionnaires d'événements enregistrés par les scripts bloqués",
     lambda g: g.count_by_blocked(_kind(EdgeKind.EVENT_LISTENER_ADD))),
    ("intv.sum.text_inserted_by_blocked", None, S.INTERVENTION, K.ABSOLUTE, O.EXPERT,
     C.JS_DOM_MODIFICATION, "quantité de texte insérée par les scripts bloqués",
     lambda g: float(pd.to_numeric(g.by_blocked_scripts(
         (g.intv_edges["kind"] == EdgeKind.NODE_CREATE.value)
         & (g.intv_edges["dst_kind"] == NodeKind.TEXT_NODE.value))["dst_text_len"],
         errors="coerce").fillna(0).sum())),
    ("page.sum.text_len", None, S.PAGE, K.ABSOLUTE, O.AUTO, C.HTML_STRUCTURE,
     "longueur totale du texte de la page",
     lambda g: float(pd.to_numeric(g.pre_nodes["text_len"], errors="coerce").fillna(0).sum())),
    ("page.count.nodes_total", None, S.PAGE, K.ABSOLUTE, O.AUTO, C.GENERIC_GRAPH,
     "# de nœuds du graphe pré", lambda g: float(len(g.pre_nodes))),
    ("page.count.edges_total", None, S.PAGE, K.ABSOLUTE, O.AUTO, C.GENERIC_GRAPH,
     "# d'arêtes du graphe pré", lambda g: float(len(g.pre_edges))),
    ("intv.count.nodes_total", None, S.INTERVENTION, K.ABSOLUTE, O.AUTO, C.GENERIC_GRAPH,
     "# de nœuds du graphe d'intervention", lambda g: float(len(g.intv_nodes))),
    ("intv.count.edges_total", None, S.INTERVENTION, K.ABSOLUTE, O.AUTO, C.GENERIC_GRAPH,
     "# d'arêtes du graphe d'intervention", lambda g: float(len(g.intv_edges))),
)

# Entrées de la grille qui figurent aussi au classement d'importance :
# nom → (rang, origine, catégorie, description)
RANKED_GRID_FEATURES = {
    "page.count.api.window.navigator": (4, O.EXPERT, C.JS_OTHER,
                                        "# d'accès à window.navigator"),
    "page.count.tag.iframe": (19, O.AUTO, C.HTML_STRUCTURE, "# de <iframe> dans la page"),
    "page.count.api.WebGLRenderingContext": (20, O.EXPERT, C.JS_OTHER,
                                             "# d'appels WebGL dans la page"),
    "intv.count.node.network_resource": (24, O.EXPERT, C.NETWORK,
                                         "# de ressources bloquées (directement ou non)"),
    "page.count.edge.event_listener_add": (28, O.AUTO, C.JS_OTHER,
                                           "# d'enregistrements d'eventListener"),
    "page.count.tag.script": (31, O.AUTO, C.JS_OTHER, "# de balises <script>"),
    "intv.ratio.node.network_resource": (32, O.EXPERT, C.NETWORK,
                                         "% des ressources réseau bloquées"),
    "page.count.api.window.screen": (37, O.EXPERT, C.JS_OTHER,
                                     "# de lectures de window.screen"),
    "intv.ratio.tag.html": (40, O.EXPERT, C.HTML_STRUCTURE, "% des éléments <html> bloqués"),
}

_EDGE_CATEGORIES = {
    EdgeKind.NODE_CREATE: C.JS_DOM_MODIFICATION,
    EdgeKind.NODE_INSERT: C.JS_DOM_MODIFICATION,
    EdgeKind.NODE_DELETE: C.JS_DOM_MODIFICATION,
    EdgeKind.NODE_MODIFY: C.JS_DOM_MODIFICATION,
    EdgeKind.STRUCTURE: C.HTML_STRUCTURE,
    EdgeKind.HTTP_REQUEST: C.NETWORK,
    EdgeKind.HTTP_RESPONSE: C.NETWORK,
    EdgeKind.RESOURCE_BLOCK: C.NETWORK,
}


def _grid_groups():
    """(groupe, valeur, catégorie) pour chaque ligne de la grille."""
    rows = []
    for kind in NodeKind:
        category = C.NETWORK if kind is NodeKind.NETWORK_RESOURCE else C.GENERIC_GRAPH
        rows.append(("node", kind.value, category))
    for kind in EdgeKind:
        rows.append(("edge", kind.value, _EDGE_CATEGORIES.get(kind, C.JS_OTHER)))
    for tag in HTML_TAGS:
        rows.append(("tag", tag, C.HTML_STRUCTURE))
    for prefix in API_PREFIXES:
        rows.append(("api", prefix, C.JS_OTHER))
    return rows


GRID_COLUMNS = (
    ("page.count", S.PAGE, K.ABSOLUTE),
    ("intv.count", S.INTERVENTION, K.ABSOLUTE),
    ("intv.ratio", S.INTERVENTION, K.RELATIVE),
)


@lru_cache(maxsize=1)
def _grid():
    """Specs de la grille + correspondance nom → (colonne, clé de comptage)."""
    specs, lookup = [], {}
    for prefix, scope, kind in GRID_COLUMNS:
        for group, value, category in _grid_groups():
            name = f"{prefix}.{group}.{value}"
            rank, source, description = None, O.AUTO, ""
            if name in RANKED_GRID_FEATURES:
                rank, source, category, description = RANKED_GRID_FEATURES[name]
            specs.append(FeatureSpec(name, scope, kind, source, category, description, rank))
            lookup[name] = (prefix, f"{group}.{value}")
    return tuple(specs), lookup


@lru_cache(maxsize=1)
def schema():
    """Schéma ordonné : features nommées puis grille automatique."""
    specs = [FeatureSpec(name, scope, kind, source, category, description, rank)
             for name, rank, scope, kind, source, category, description, _ in NAMED_FEATURES]
    specs.extend(_grid()[0])
    return FeatureSchema(specs=tuple(specs))


DIMENSION_GROUPS = ("page", "intervention", "absolute", "relative", "expert", "auto")
CATEGORY_GROUPS = tuple(c.value for c in Category)


def dimension_groups(specs=None):
    """
    Groupes pour LOCO : portée, type de valeur, origine, puis catégorie
    (html_structure, network, ...). Les features delta sont rangées avec
    les absolues.
    """
    specs = schema().specs if specs is None else specs
    groups = {name: [] for name in DIMENSION_GROUPS + CATEGORY_GROUPS}
    for spec in specs:
        groups[spec.scope.value].append(spec.name)
        groups["relative" if spec.kind is ValueKind.RELATIVE else "absolute"].append(spec.name)
        groups[spec.source.value].append(spec.name)
        groups[spec.category.value].append(spec.name)
    return groups


_NAMED_COMPUTE = {entry[0]: entry[-1] for entry in NAMED_FEATURES}


# =====================================================================
# CALCUL
# =====================================================================

def _grid_counts(nodes, edges):
    """Comptages de la grille pour un graphe : {nom sans préfixe → valeur}."""
    counts = {}
    for kind, n in nodes["kind"].value_counts().items():
        counts[f"node.{kind}"] = float(n)
    for kind, n in edges["kind"].value_counts().items():
        counts[f"edge.{kind}"] = float(n)
    dom = nodes[nodes["kind"] == NodeKind.DOM_NODE.value]
    for tag, n in dom["tag"].value_counts().items():
        counts[f"tag.{tag}"] = float(n)
    for prefix in API_PREFIXES:
        counts[f"api.{prefix}"] = float(_api_mask(edges, prefix).sum())
    return counts


def extract(pre, post, intervention, example_id="", label=None):
    """
    Vecteur de features du triplet, dans l'ordre de schema().

    Les features de portée page ne lisent que pre ; celles de portée
    intervention lisent le graphe d'intervention (et pre/post pour les
    dénominateurs, les deltas et l'identification des ressources bloquées).
    """
    graphs = _Graphs(pre, post, intervention)
    page = _grid_counts(graphs.pre_nodes, graphs.pre_edges)
    intv = _grid_counts(graphs.intv_nodes, graphs.intv_edges)
    grid_lookup = _grid()[1]

    values = []
    for spec in schema().specs:
        compute = _NAMED_COMPUTE.get(spec.name)
        if compute is not None:
            values.append(float(compute(graphs)))
            continue
        prefix, key = grid_lookup[spec.name]
        if prefix == "page.count":
            values.append(page.get(key, 0.0))
        elif prefix == "intv.count":
            values.append(intv.get(key, 0.0))
        else:
            values.append(_ratio(intv.get(key, 0.0), page.get(key, 0.0)))
    return FeatureVector(example_id=example_id, label=label, values=tuple(values))


def extract_triple(triple):
    return extract(triple.pre, triple.post, triple.intervention,
                   example_id=triple.example_id, label=triple.label)


@dataclass
class ExtractionResult:
    vectors: list
    schema: FeatureSchema
    skipped_effectless: int = 0


def extract_dataset(triples, n_jobs=1, progress=False):
    """
    Applique extract à chaque triplet ; les triplets sans effet (graphe
    d'intervention vide) sont écartés et comptés. Sortie triée par example_id.
    """
    triples = list(triples)
    kept = [t for t in triples if not is_effectless(t)]
    skipped = len(triples) - len(kept)
    if skipped:
        logger.info("%d triplets sans effet écartés", skipped)

    iterator = tqdm(kept, desc="Features", disable=not progress)
    if n_jobs == 1:
        vectors = [extract_triple(t) for t in iterator]
    else:
        vectors = Parallel(n_jobs=n_jobs)(delayed(extract_triple)(t) for t in iterator)

    vectors.sort(key=lambda v: v.example_id)
    return ExtractionResult(vectors=vectors, schema=schema(), skipped_effectless=skipped)
