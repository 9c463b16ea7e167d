"""
Graphe de comportement d'une page : multigraphe orienté typé

Les nœuds sont les acteurs (parser, scripts, bloqueur) et les objets
(nœuds DOM, ressources réseau, API Web, stockage, règles de filtre) ;
les arêtes sont les actions enregistrées par le navigateur instrumenté.

Les invariants sont vérifiés à la construction : un graphe existant est
toujours valide.
"""

from collections import Counter, defaultdict
from dataclasses import dataclass, fields, replace
from enum import Enum
from functools import cached_property
from typing import Optional

from src.errors import DanglingEdge, SchemaError
from src.filtering.filter_engine import ResourceType
from src.graphs.html_tags import normalize_tag


class NodeKind(str, Enum):
    PARSER = "parser"
    DOM_NODE = "dom_node"
    TEXT_NODE = "text_node"
    SCRIPT_ACTOR = "script_actor"
    NETWORK_RESOURCE = "network_resource"
    WEB_API = "web_api"
    STORAGE_AREA = "storage_area"
    FILTER_RULE = "filter_rule"
    CONTENT_BLOCKER = "content_blocker"


class EdgeKind(str, Enum):
    NODE_CREATE = "node_create"
    NODE_INSERT = "node_insert"
    NODE_DELETE = "node_delete"
    NODE_MODIFY = "node_modify"
    STRUCTURE = "structure"
    HTTP_REQUEST = "http_request"
    HTTP_RESPONSE = "http_response"
    RESOURCE_BLOCK = "resource_block"
    SCRIPT_EXECUTE = "script_execute"
    API_CALL = "api_call"
    EVENT_LISTENER_ADD = "event_listener_add"
    EVENT_LISTENER_REMOVE = "event_listener_remove"
    STORAGE_SET = "storage_set"
    STORAGE_READ = "storage_read"
    STORAGE_DELETE = "storage_delete"


STORAGE_KINDS = ("cookie", "localStorage", "sessionStorage")


def _enum(enum_cls, value, what):
    try:
        return enum_cls(value)
    except ValueError:
        raise SchemaError(f'unknown {what} "{value}"') from None


@dataclass(frozen=True)
class GraphNode:
    id: int
    kind: NodeKind
    tag: Optional[str] = None
    url: Optional[str] = None
    api_name: Optional[str] = None
    storage_kind: Optional[str] = None
    text_len: Optional[int] = None
    frame_id: Optional[int] = None
    # graphe d'intervention : ressource autorisée avant, bloquée après
    flipped: Optional[bool] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", _enum(NodeKind, self.kind, "node kind"))
        if self.tag is not None:
            object.__setattr__(self, "tag", normalize_tag(self.tag))

        if self.kind is NodeKind.DOM_NODE and self.tag is None:
            raise SchemaError(f"dom_node n{self.id} without tag")
        if self.kind is NodeKind.NETWORK_RESOURCE and not self.url:
            raise SchemaError(f"network_resource n{self.id} without url")
        if self.kind is NodeKind.WEB_API and not self.api_name:
            raise SchemaError(f"web_api n{self.id} without api_name")
        if self.kind is NodeKind.STORAGE_AREA and self.storage_kind not in STORAGE_KINDS:
            raise SchemaError(f"storage_area n{self.id} with storage_kind {self.storage_kind!r}")
        if self.text_len is not None and self.text_len < 0:
            raise SchemaError(f"n{self.id}: negative text_len")
        if self.flipped and self.kind is not NodeKind.NETWORK_RESOURCE:
            raise SchemaError(f"n{self.id}: only network_resource nodes can be flipped")

    def attrs(self):
        """Attributs présents, dans l'ordre canonique."""
        return {f.name: getattr(self, f.name) for f in fields(self)[2:]
                if getattr(self, f.name) is not None}


@dataclass(frozen=True)
class GraphEdge:
    id: int
    src: int
    dst: int
    kind: EdgeKind
    request_type: Optional[ResourceType] = None
    status: Optional[int] = None
    size_bytes: Optional[int] = None
    key: Optional[str] = None
    cross_frame: Optional[bool] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", _enum(EdgeKind, self.kind, "edge kind"))
        if self.request_type is not None:
            # les crawlers écrivent aussi "Image" ou "XHR"
            value = self.request_type
            if not isinstance(value, ResourceType):
                value = str(value).lower()
            object.__setattr__(self, "request_type", _enum(ResourceType, value, "request_type"))

        if self.kind is EdgeKind.HTTP_REQUEST and self.request_type is None:
            raise SchemaError(f"http_request e{self.id} without request_type")
        if self.kind is EdgeKind.HTTP_RESPONSE and self.size_bytes is None:
            raise SchemaError(f"http_response e{self.id} without size_bytes")
        if self.size_bytes is not None and self.size_bytes < 0:
            raise SchemaError(f"e{self.id}: negative size_bytes")

    def attrs(self):
        return {f.name: getattr(self, f.name) for f in fields(self)[4:]
                if getattr(self, f.name) is not None}


@dataclass(frozen=True)
class PageGraph:
    """
    Graphe d'une page. `partial=True` marque un sous-graphe extrait
    (graphe d'intervention) : le parser de chaque document n'y est pas
    forcément présent.
    """
    nodes: tuple = ()
    edges: tuple = ()
    page_url: str = ""
    partial: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))

        node_ids = Counter(n.id for n in self.nodes)
        duplicated = [i for i, c in node_ids.items() if c > 1]
        if duplicated:
            raise SchemaError(f"duplicate node ids {sorted(duplicated)[:5]}")
        edge_ids = Counter(e.id for e in self.edges)
        duplicated = [i for i, c in edge_ids.items() if c > 1]
        if duplicated:
            raise SchemaError(f"duplicate edge ids {sorted(duplicated)[:5]}")

        for edge in self.edges:
            if edge.src not in node_ids or edge.dst not in node_ids:
                raise DanglingEdge(f"e{edge.id} references an absent node "
                                   f"(n{edge.src} -> n{edge.dst})")

        parsers = Counter(n.frame_id for n in self.nodes if n.kind is NodeKind.PARSER)
        extra = [f for f, c in parsers.items() if c > 1]
        if extra:
            raise SchemaError(f"several parser nodes for frame {extra[0]}")
        if not self.partial:
            frames = {n.frame_id for n in self.nodes if n.frame_id is not None}
            orphan = sorted(frames - set(parsers))
            if orphan:
                raise SchemaError(f"no parser node for frame {orphan[0]}")

    # --- index (calculés à la demande, le graphe est immuable) ---

    @cached_property
    def node_by_id(self):
        return {n.id: n for n in self.nodes}

    @cached_property
    def edge_by_id(self):
        return {e.id: e for e in self.edges}

    @cached_property
    def out_edges(self):
        index = defaultdict(list)
        for edge in self.edges:
            index[edge.src].append(edge)
        return index

    @cached_property
    def in_edges(self):
        index = defaultdict(list)
        for edge in self.edges:
            index[edge.dst].append(edge)
        return index

    def nodes_of_kind(self, kind):
        return [n for n in self.nodes if n.kind is kind]

    def edges_of_kind(self, kind):
        return [e for e in self.edges if e.kind is kind]

    def canonical(self):
        """Même graphe, nœuds et arêtes triés par id."""
        return replace(self,
                       nodes=tuple(sorted(self.nodes, key=lambda n: n.id)),
                       edges=tuple(sorted(self.edges, key=lambda e: e.id)))


def induced_subgraph(g, node_ids, edge_ids):
    """
    Sous-graphe de g restreint aux ids donnés (ids et attributs conservés).

    Raises:
        DanglingEdge: une arête retenue a une extrémité hors de node_ids
        SchemaError: id absent du graphe parent
    """
    node_ids, edge_ids = set(node_ids), set(edge_ids)
    unknown = (node_ids - g.node_by_id.keys()) or (edge_ids - g.edge_by_id.keys())
    if unknown:
        raise SchemaError(f"ids absent from the parent graph: {sorted(unknown)[:5]}")

    edges = [e for e in g.edges if e.id in edge_ids]
    for edge in edges:
        if edge.src not in node_ids or edge.dst not in node_ids:
            raise DanglingEdge(f"e{edge.id} endpoint outside the selected nodes")

    return PageGraph(
        nodes=tuple(n for n in g.nodes if n.id in node_ids),
        edges=tuple(edges),
        page_url=g.page_url,
        partial=g.partial or len(node_ids) < len(g.nodes),
    )
