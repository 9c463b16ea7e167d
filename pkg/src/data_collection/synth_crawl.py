"""
Générateur de crawls synthétiques : paires (pré, post) étiquetées

Remplace le crawl réel à l'échelle d'un poste de travail. Chaque exemple
est une page (parser, arbre DOM, scripts, ressources, appels d'API et de
stockage, sous-documents) et un diff de liste de filtres qui bloque une à
trois ressources "cibles". Les ressources effectivement bloquées sont
déduites en rejouant les règles sur les requêtes de la page.

Signal planté (label broken, décalé de signal_strength) :
  - octets des ressources bloquées
  - nombre de scripts enfants chargés par un script bloqué
  - nombre de nœuds DOM créés par la cible

Le tirage aléatoire ne dépend jamais du label : à signal_strength=0, un
exemple broken et un exemple working de même graine sont identiques.
"""

import json
import logging
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml
from joblib import Parallel, delayed
from tqdm import tqdm

from src.data_collection.commit_miner import FilterListDiff, Label
from src.errors import ConfigError
from src.filtering.domains import url_host
from src.filtering.filter_engine import (
    RequestContext, ResourceType, apply_diff, decide, parse_filter_list,
)
from src.graphs.page_graph import EdgeKind, GraphEdge, GraphNode, NodeKind, PageGraph
from src.preprocessing.intervention_diff import GraphTriple, build_intervention_graph, write_triple

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.jsonl"

SITE_WORDS = ("news", "shop", "recipes", "travel", "forum", "sports", "weather", "games",
              "tech", "movies", "garden", "auto", "books", "music", "health", "finance")
PAGE_PATHS = ("", "index.html", "article/", "catalog/", "video/", "search?q=deals")

CDN_HOSTS = ("cdn.staticfiles.net", "widgets.socialhub.com", "player.videocloud.net",
             "maps.geoapi.com", "comments.discuss.io", "fonts.webtype.net")
AD_HOSTS = ("ads.bannerhub.net", "pagead.admetrics.com", "static.adserve.io",
            "sync.bidexchange.net", "px.promoline.com", "media.sponsorcdn.net")
TRACKER_HOSTS = ("collect.trackpixel.com", "stats.visitlog.net", "beacon.audiencegraph.io")

# liste de base : les traqueurs sont bloqués avant ET après l'intervention
BASELINE_RULES = tuple(f"||{host}^" for host in TRACKER_HOSTS)

API_NAMES = (
    "window.navigator.userAgent", "window.navigator.language", "window.navigator.plugins",
    "window.screen.width", "window.screen.colorDepth", "window.location.href",
    "window.history.pushState", "document.write", "document.createElement",
    "document.querySelector", "WebGLRenderingContext.getParameter",
    "CanvasRenderingContext2D.fillText", "XMLHttpRequest.open", "window.fetch",
    "window.postMessage", "window.setTimeout", "Storage.getItem",
)
STORAGE_KINDS = ("cookie", "localStorage", "sessionStorage")
STORAGE_OPS = (EdgeKind.STORAGE_SET, EdgeKind.STORAGE_READ, EdgeKind.STORAGE_DELETE)
EVENTS = ("click", "load", "scroll", "message", "resize", "submit")

SCRIPT_TAGS = ("div", "span", "a", "img", "p", "iframe", "button", "html", "ins", "section")
SCRIPT_TAG_WEIGHTS = (0.25, 0.2, 0.1, 0.1, 0.1, 0.05, 0.05, 0.05, 0.05, 0.05)
FILLER_TAGS = ("div", "p", "span", "a", "li", "ul", "section", "article", "h2", "nav",
               "footer", "header", "button", "input", "form", "table", "tr", "td")

TARGET_KINDS = (ResourceType.SCRIPT, ResourceType.IMAGE, ResourceType.SUBDOCUMENT)
TARGET_KIND_WEIGHTS = (0.7, 0.15, 0.15)

# Octets bloqués : working ~ U(1000, 20000), broken décalé de 20000·s
BYTES_LOW, BYTES_SPAN, BYTES_SHIFT = 1000, 19000, 20000
CHILD_SCRIPTS_SHIFT = 3
DOM_CREATION_SHIFT = 10


@dataclass
class SynthConfig:
    seed: int = 42
    n_examples: int = 200
    broken_fraction: float = 0.5
    signal_strength: float = 0.8
    size_min: int = 50
    size_max: int = 500
    baseline_rules: bool = True

    def validate(self):
        if self.n_examples < 2:
            raise ConfigError(f"n_examples must be >= 2 (got {self.n_examples})")
        if not 0.0 <= self.broken_fraction <= 1.0:
            raise ConfigError(f"broken_fraction must be in [0, 1] (got {self.broken_fraction})")
        if not 0.0 <= self.signal_strength <= 1.0:
            raise ConfigError(f"signal_strength must be in [0, 1] (got {self.signal_strength})")
        if self.size_min <= 0 or self.size_max < self.size_min:
            raise ConfigError(f"invalid size range [{self.size_min}, {self.size_max}]")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer (got {self.seed})")
        return self

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("synthetic crawl config must be a mapping")
        data = dict(data)
        if "size_range" in data:
            size_range = data.pop("size_range")
            if not isinstance(size_range, (list, tuple)) or len(size_range) != 2:
                raise ConfigError("size_range must be a [min, max] pair")
            data["size_min"], data["size_max"] = size_range

        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")

        values = {}
        for name, value in data.items():
            caster = {"seed": int, "n_examples": int, "size_min": int, "size_max": int,
                      "broken_fraction": float, "signal_strength": float,
                      "baseline_rules": bool}[name]
            if isinstance(value, bool) and caster is not bool:
                raise ConfigError(f'"{name}" must be a number')
            try:
                values[name] = caster(value)
            except (TypeError, ValueError):
                raise ConfigError(f'"{name}" has an invalid value {value!r}') from None
        return cls(**values).validate()

    def to_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_synth_config(path):
    """Charge une configuration YAML ; toute erreur devient ConfigError."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML in {path} ({e})") from e
    return SynthConfig.from_dict(data if data is not None else {})


@dataclass
class SyntheticExample:
    example_id: str
    page_url: str
    label: Label
    diff: FilterListDiff
    seed: int
    pre: PageGraph
    post: PageGraph
    intervention: Optional[PageGraph] = None

    def triple(self):
        intervention = self.intervention
        if intervention is None:
            intervention = build_intervention_graph(self.pre, self.post)
        return GraphTriple(example_id=self.example_id, pre=self.pre, post=self.post,
                           intervention=intervention, label=self.label.value)

    def manifest_row(self):
        return {
            "example_id": self.example_id,
            "page_url": self.page_url,
            "label": self.label.value,
            "diff": self.diff.to_dict(),
            "source_commit": None,
            "provenance": "synthetic",
            "seed": self.seed,
        }


# =====================================================================
# CONSTRUCTION DE LA PAGE
# =====================================================================

class _PageBuilder:
    """
    Enregistre la page complète (rien de bloqué). Chaque nœud/arête porte
    l'ensemble des ressources dont le blocage le fait disparaître.
    """

    def __init__(self, page_url):
        self.page_url = page_url
        self.nodes = []
        self.edges = []
        self.requests = []  # (id ressource, RequestContext)
        self.bodies = {}
        self._apis = {}
        self._storages = {}
        self.content_blocker = self.node(NodeKind.CONTENT_BLOCKER)

    def node(self, kind, owners=frozenset(), **attrs):
        node_id = len(self.nodes)
        self.nodes.append((GraphNode(id=node_id, kind=kind, **attrs), owners))
        return node_id

    def edge(self, src, dst, kind, owners=frozenset(), **attrs):
        edge_id = len(self.edges)
        self.edges.append((GraphEdge(id=edge_id, src=src, dst=dst, kind=kind, **attrs), owners))
        return edge_id

    def api(self, name):
        if name not in self._apis:
            self._apis[name] = self.node(NodeKind.WEB_API, api_name=name)
        return self._apis[name]

    def storage(self, kind):
        if kind not in self._storages:
            self._storages[kind] = self.node(NodeKind.STORAGE_AREA, storage_kind=kind)
        return self._storages[kind]

    def document(self, frame, owners=frozenset()):
        """Parser + html/head/body d'un document ; renvoie (parser, html)."""
        parser = self.node(NodeKind.PARSER, owners, frame_id=frame)
        html = self.parser_element(parser, "html", frame, owners, parent=None)
        head = self.parser_element(parser, "head", frame, owners, parent=html)
        body = self.parser_element(parser, "body", frame, owners, parent=html)
        self.bodies[frame] = body
        self.parser_element(parser, "meta", frame, owners, parent=head)
        return parser, html

    def parser_element(self, parser, tag, frame, owners=frozenset(), parent=None):
        element = self.node(NodeKind.DOM_NODE, owners, tag=tag, frame_id=frame)
        self.edge(parser, element, EdgeKind.NODE_CREATE, owners)
        if parent is not None:
            self.edge(parent, element, EdgeKind.STRUCTURE, owners)
        return element

    def fetch(self, requester, owners, url, request_type, size, origin, status=200):
        """Requête + réponse ; la réponse disparaît avec la ressource. `origin` : URL du document."""
        resource = self.node(NodeKind.NETWORK_RESOURCE, owners, url=url)
        self.edge(requester, resource, EdgeKind.HTTP_REQUEST, owners, request_type=request_type)
        self.edge(resource, requester, EdgeKind.HTTP_RESPONSE, owners | {resource},
                  status=status, size_bytes=int(size))
        self.requests.append((resource, RequestContext(url, request_type, url_host(origin))))
        return resource

    def render(self, blocked, rule_of):
        """
        Graphe observé quand `blocked` est bloqué : les éléments dépendants
        disparaissent, chaque ressource bloquée reçoit une arête
        resource_block depuis le nœud de sa règle.
        """
        blocked = frozenset(blocked)
        nodes = [n for n, owners in self.nodes if not owners & blocked]
        kept = {n.id for n in nodes}
        edges = [e for e, owners in self.edges
                 if not owners & blocked and e.src in kept and e.dst in kept]

        # API et stockage : n'existent que s'ils sont utilisés
        used = {e.src for e in edges} | {e.dst for e in edges}
        nodes = [n for n in nodes
                 if n.kind not in (NodeKind.WEB_API, NodeKind.STORAGE_AREA) or n.id in used]

        next_node, next_edge = len(self.nodes), len(self.edges)
        rule_nodes = {}
        for resource in sorted(blocked):
            rule = rule_of[resource]
            if rule not in rule_nodes:
                rule_nodes[rule] = next_node
                nodes.append(GraphNode(id=next_node, kind=NodeKind.FILTER_RULE))
                next_node += 1
            edges.append(GraphEdge(id=next_edge, src=rule_nodes[rule], dst=resource,
                                   kind=EdgeKind.RESOURCE_BLOCK, key=rule))
            next_edge += 1
        return PageGraph(nodes=tuple(nodes), edges=tuple(edges), page_url=self.page_url)


def _script_activity(b, rng, actor, owners, frame, origin, n_dom, n_children, depth=0):
    """Actions d'un acteur script : API, stockage, DOM, listeners, scripts enfants."""
    for _ in range(rng.integers(1, 8)):
        cross = frame != 0 and rng.random() < 0.3
        b.edge(actor, b.api(str(rng.choice(API_NAMES))), EdgeKind.API_CALL, owners,
               cross_frame=bool(cross) or None)

    for _ in range(rng.integers(0, 4)):
        area = b.storage(str(rng.choice(STORAGE_KINDS)))
        op = STORAGE_OPS[rng.integers(0, len(STORAGE_OPS))]
        b.edge(actor, area, op, owners, key=f"k{rng.integers(0, 20)}")

    body = b.bodies[frame]
    created = []
    for _ in range(n_dom):
        tag = str(rng.choice(SCRIPT_TAGS, p=SCRIPT_TAG_WEIGHTS))
        element = b.node(NodeKind.DOM_NODE, owners, tag=tag, frame_id=frame)
        b.edge(actor, element, EdgeKind.NODE_CREATE, owners)
        b.edge(actor, element, EdgeKind.NODE_INSERT, owners)
        b.edge(body, element, EdgeKind.STRUCTURE, owners)
        if rng.random() < 0.4:
            text = b.node(NodeKind.TEXT_NODE, owners, text_len=int(rng.integers(1, 400)),
                          frame_id=frame)
            b.edge(actor, text, EdgeKind.NODE_CREATE, owners)
            b.edge(element, text, EdgeKind.STRUCTURE, owners)
        created.append(element)

    for _ in range(rng.integers(0, 3)):
        target = created[rng.integers(0, len(created))] if created else body
        event = str(rng.choice(EVENTS))
        b.edge(actor, target, EdgeKind.EVENT_LISTENER_ADD, owners, key=event)
        if rng.random() < 0.2:
            b.edge(actor, target, EdgeKind.EVENT_LISTENER_REMOVE, owners, key=event)

    if created and rng.random() < 0.3:
        b.edge(actor, created[rng.integers(0, len(created))], EdgeKind.NODE_MODIFY, owners)
    if created and rng.random() < 0.2:
        b.edge(actor, created[rng.integers(0, len(created))], EdgeKind.NODE_DELETE, owners)

    if rng.random() < 0.3:
        host = str(rng.choice(CDN_HOSTS))
        b.fetch(actor, owners, f"https://{host}/api/data{actor}.json", ResourceType.XHR,
                rng.integers(200, 3000), origin)

    for child in range(n_children):
        host = str(rng.choice(CDN_HOSTS + AD_HOSTS))
        url = f"https://{host}/js/child{actor}-{child}.js"
        resource = b.fetch(actor, owners, url, ResourceType.SCRIPT, rng.integers(500, 8000),
                           origin)
        child_owners = owners | {resource}
        child_actor = b.node(NodeKind.SCRIPT_ACTOR, child_owners, url=url)
        b.edge(actor, child_actor, EdgeKind.SCRIPT_EXECUTE, child_owners)
        if depth < 1:
            _script_activity(b, rng, child_actor, child_owners, frame, origin,
                             n_dom=int(rng.integers(0, 3)), n_children=0, depth=depth + 1)


def _script_element(b, rng, frame, origin, url, size, owners=frozenset()):
    """<script src> créé par le parser → ressource → acteur ; renvoie (acteur, owners)."""
    parser_id = next(n.id for n, _ in b.nodes
                     if n.kind is NodeKind.PARSER and n.frame_id == frame)
    script = b.parser_element(parser_id, "script", frame, owners, parent=b.bodies[frame])
    resource = b.fetch(script, owners, url, ResourceType.SCRIPT, size, origin)
    actor_owners = owners | {resource}
    actor = b.node(NodeKind.SCRIPT_ACTOR, actor_owners, url=url)
    b.edge(script, actor, EdgeKind.SCRIPT_EXECUTE, actor_owners)
    return actor, actor_owners, resource


def _subdocument(b, rng, parser, frame, origin, url, size, n_content, owners=frozenset()):
    """<iframe> → ressource subdocument → document enfant (frame dédiée)."""
    iframe = b.parser_element(parser, "iframe", 0, owners, parent=b.bodies[0])
    resource = b.fetch(iframe, owners, url, ResourceType.SUBDOCUMENT, size, origin)
    frame_owners = owners | {resource}
    child_parser, child_html = b.document(frame, frame_owners)
    b.edge(iframe, child_html, EdgeKind.STRUCTURE, frame_owners)
    for _ in range(n_content):
        tag = str(rng.choice(FILLER_TAGS))
        b.parser_element(child_parser, tag, frame, frame_owners, parent=b.bodies[frame])
    text = b.node(NodeKind.TEXT_NODE, frame_owners, text_len=int(rng.integers(10, 300)),
                  frame_id=frame)
    b.edge(child_parser, text, EdgeKind.NODE_CREATE, frame_owners)
    b.edge(b.bodies[frame], text, EdgeKind.STRUCTURE, frame_owners)
    return child_parser, frame_owners, resource


def _split_bytes(total, weights):
    sizes = [max(1, int(round(total * w))) for w in weights[:-1]]
    sizes.append(max(1, total - sum(sizes)))
    return sizes


def generate_example(seed, label, signal_strength=0.8, size_range=(50, 500),
                     baseline_rules=True, example_id="syn-00000"):
    """
    Génère une page et son diff, puis les graphes pré et post.

    Args:
        seed: graine de l'exemple (même graine + même label → mêmes graphes)
        label: Label.BROKEN ou Label.WORKING
    Returns:
        SyntheticExample (graphe d'intervention non calculé)
    """
    label = Label(label)
    shift = signal_strength if label is Label.BROKEN else 0.0
    page_ss, target_ss, filler_ss = np.random.SeedSequence(seed).spawn(3)
    rng = np.random.default_rng(page_ss)
    target_rng = np.random.default_rng(target_ss)
    filler_rng = np.random.default_rng(filler_ss)

    # --- tirages de la page (indépendants du label) ---
    site = f"{rng.choice(SITE_WORDS)}{rng.integers(10, 1000)}.com"
    page_url = f"https://www.{site}/{rng.choice(PAGE_PATHS)}"
    target_size = int(rng.integers(size_range[0], size_range[1] + 1))
    target_kind = TARGET_KINDS[rng.choice(len(TARGET_KINDS), p=TARGET_KIND_WEIGHTS)]
    n_targets = int(rng.integers(1, 4))
    u_bytes = rng.random()
    weights = rng.dirichlet(np.ones(n_targets))
    base_children = rng.integers(0, 3, size=n_targets)
    base_dom = rng.integers(0, 6, size=n_targets)

    # --- signal planté ---
    total_bytes = int(round(BYTES_LOW + BYTES_SPAN * u_bytes + BYTES_SHIFT * shift))
    target_bytes = _split_bytes(total_bytes, weights)
    children = base_children + int(round(CHILD_SCRIPTS_SHIFT * shift))
    dom_counts = base_dom + int(round(DOM_CREATION_SHIFT * shift))

    b = _PageBuilder(page_url)
    parser, _ = b.document(0)
    frame = 0

    # Feuilles de style et images premières parties
    for i in range(rng.integers(1, 4)):
        link = b.parser_element(parser, "link", 0, parent=b.bodies[0])
        b.fetch(link, frozenset(), f"https://www.{site}/css/style{i}.css",
                ResourceType.STYLESHEET, rng.integers(1000, 30000), page_url)
    for i in range(rng.integers(2, 12)):
        img = b.parser_element(parser, "img", 0, parent=b.bodies[0])
        b.fetch(img, frozenset(), f"https://www.{site}/img/photo{i}.jpg", ResourceType.IMAGE,
                rng.integers(2000, 60000), page_url)

    # Scripts ordinaires (première et tierce partie)
    for i in range(rng.integers(1, 6)):
        host = f"www.{site}" if rng.random() < 0.6 else str(rng.choice(CDN_HOSTS))
        actor, owners, _ = _script_element(b, rng, 0, page_url, f"https://{host}/js/app{i}.js",
                                           rng.integers(1000, 50000))
        _script_activity(b, rng, actor, owners, 0, page_url,
                         n_dom=int(rng.integers(0, 6)), n_children=int(rng.integers(0, 2)))

    # Sous-documents ordinaires (widgets)
    for i in range(rng.integers(0, 3)):
        frame += 1
        host = str(rng.choice(CDN_HOSTS))
        url = f"https://{host}/embed/widget{i}.html"
        child_parser, owners, _ = _subdocument(b, rng, parser, frame, page_url, url,
                                               rng.integers(2000, 20000),
                                               n_content=int(rng.integers(2, 8)))
        if rng.random() < 0.5:
            actor, actor_owners, _ = _script_element(
                b, rng, frame, url, f"https://{host}/js/embed{i}.js",
                rng.integers(1000, 20000), owners)
            _script_activity(b, rng, actor, actor_owners, frame, url,
                             n_dom=int(rng.integers(0, 3)), n_children=0)

    # Traqueurs (bloqués par la liste de base)
    for i in range(rng.integers(0, 3)):
        host = str(rng.choice(TRACKER_HOSTS))
        pixel = b.parser_element(parser, "img", 0, parent=b.bodies[0])
        b.fetch(pixel, frozenset(), f"https://{host}/p{i}.gif?id={rng.integers(1_000_000)}",
                ResourceType.IMAGE, 43, page_url)

    # --- ressources cibles (tirages dédiés) ---
    diff_rules = []
    for i in range(n_targets):
        host = str(target_rng.choice(AD_HOSTS + CDN_HOSTS))
        if target_kind is ResourceType.SCRIPT:
            url = f"https://{host}/s/tag{i}.js"
            actor, owners, _ = _script_element(b, target_rng, 0, page_url, url, target_bytes[i])
            _script_activity(b, target_rng, actor, owners, 0, page_url,
                             n_dom=int(dom_counts[i]), n_children=int(children[i]))
        elif target_kind is ResourceType.IMAGE:
            url = f"https://{host}/b/banner{i}.png"
            img = b.parser_element(parser, "img", 0, parent=b.bodies[0])
            b.fetch(img, frozenset(), url, ResourceType.IMAGE, target_bytes[i], page_url)
        else:
            frame += 1
            url = f"https://{host}/f/frame{i}.html"
            _subdocument(b, target_rng, parser, frame, page_url, url, target_bytes[i],
                         n_content=int(dom_counts[i]) + 2)
        diff_rules.append(f"||{url.split('://', 1)[1]}|${target_kind.value}")

    # --- remplissage jusqu'à la taille visée ---
    while len(b.nodes) < target_size:
        tag = str(filler_rng.choice(FILLER_TAGS))
        element = b.parser_element(parser, tag, 0, parent=b.bodies[0])
        if filler_rng.random() < 0.3:
            text = b.node(NodeKind.TEXT_NODE, text_len=int(filler_rng.integers(1, 500)),
                          frame_id=0)
            b.edge(parser, text, EdgeKind.NODE_CREATE)
            b.edge(element, text, EdgeKind.STRUCTURE)

    # --- blocage : liste de base (pré) puis liste + diff (post) ---
    pre_lines = list(BASELINE_RULES) if baseline_rules else []
    post_lines = apply_diff(pre_lines, diff_rules, ())
    pre_rules = parse_filter_list(pre_lines).rules
    post_rules = parse_filter_list(post_lines).rules

    pre_blocked, post_blocked, rule_of = set(), set(), {}
    for resource, ctx in b.requests:
        before = decide(pre_rules, ctx)
        after = decide(post_rules, ctx)
        if before.is_blocked:
            pre_blocked.add(resource)
            rule_of[resource] = pre_rules[before.matched_rule].raw
        if after.is_blocked:
            post_blocked.add(resource)
            rule_of.setdefault(resource, post_rules[after.matched_rule].raw)

    return SyntheticExample(
        example_id=example_id,
        page_url=page_url,
        label=label,
        diff=FilterListDiff(added=tuple(diff_rules)),
        seed=int(seed),
        pre=b.render(pre_blocked, rule_of),
        post=b.render(post_blocked, rule_of),
    )


def _example_plan(cfg):
    """(example_id, graine, label) de chaque exemple ; split exact, ordre mélangé."""
    label_ss, *example_ss = np.random.SeedSequence(cfg.seed).spawn(cfg.n_examples + 1)
    n_broken = int(round(cfg.n_examples * cfg.broken_fraction))
    broken = np.arange(cfg.n_examples) < n_broken
    np.random.default_rng(label_ss).shuffle(broken)
    return [
        (f"syn-{i:05d}", int(ss.generate_state(1, dtype=np.uint64)[0]),
         Label.BROKEN if broken[i] else Label.WORKING)
        for i, ss in enumerate(example_ss)
    ]


def _generate_with_intervention(example_id, seed, label, cfg):
    example = generate_example(seed, label, signal_strength=cfg.signal_strength,
                               size_range=(cfg.size_min, cfg.size_max),
                               baseline_rules=cfg.baseline_rules, example_id=example_id)
    example.intervention = build_intervention_graph(example.pre, example.post)
    if not example.intervention.nodes:
        raise RuntimeError(f"{example_id}: generated example has no measurable effect")
    return example


def generate_dataset(cfg, n_jobs=1, progress=False):
    """
    Génère cfg.n_examples exemples, graphes d'intervention compris.
    Le résultat ne dépend pas de n_jobs.
    """
    cfg.validate()
    plan = _example_plan(cfg)
    iterator = tqdm(plan, desc="Crawl synthétique", disable=not progress)
    if n_jobs == 1:
        examples = [_generate_with_intervention(eid, seed, label, cfg)
                    for eid, seed, label in iterator]
    else:
        examples = Parallel(n_jobs=n_jobs)(
            delayed(_generate_with_intervention)(eid, seed, label, cfg)
            for eid, seed, label in iterator)

    n_broken = sum(e.label is Label.BROKEN for e in examples)
    logger.info("%d exemples synthétiques (%d broken, %d working, signal=%.2f)",
                len(examples), n_broken, len(examples) - n_broken, cfg.signal_strength)
    return examples


def write_dataset(examples, directory):
    """Trois GraphML par exemple + manifest.jsonl ; renvoie le chemin du manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for example in examples:
        write_triple(example.triple(), directory)
    manifest_path = directory / MANIFEST_NAME
    with open(manifest_path, "w", encoding="utf-8") as f:
        for example in examples:
            f.write(json.dumps(example.manifest_row(), ensure_ascii=False) + "\n")
    return manifest_path
