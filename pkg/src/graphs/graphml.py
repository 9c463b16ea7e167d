"""
Import/export GraphML des graphes de page (lxml)

Clés déclarées :
  graphe : page_url, partial
  nœuds  : kind, tag, url, api_name, storage_kind, text_len, frame_id, flipped
  arêtes : kind, request_type, status, size_bytes, key, cross_frame

Ids GraphML : n<id> pour les nœuds, e<id> pour les arêtes. L'écriture est
canonique (ids triés, ordre des attributs fixe) : deux sauvegardes du même
graphe sont identiques octet pour octet.
"""

from pathlib import Path

from lxml import etree

from src.errors import SchemaError, XmlError
from src.graphs.page_graph import GraphEdge, GraphNode, PageGraph

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

GRAPH_KEYS = (("page_url", "string"), ("partial", "boolean"))
NODE_KEYS = (
    ("kind", "string"),
    ("tag", "string"),
    ("url", "string"),
    ("api_name", "string"),
    ("storage_kind", "string"),
    ("text_len", "int"),
    ("frame_id", "int"),
    ("flipped", "boolean"),
)
EDGE_KEYS = (
    ("kind", "string"),
    ("request_type", "string"),
    ("status", "int"),
    ("size_bytes", "long"),
    ("key", "string"),
    ("cross_frame", "boolean"),
)

_DOMAINS = {"graph": ("g", GRAPH_KEYS), "node": ("n", NODE_KEYS), "edge": ("e", EDGE_KEYS)}


def _q(tag):
    return f"{{{GRAPHML_NS}}}{tag}"


def _local(element):
    return etree.QName(element).localname


def _to_text(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _from_text(text, attr_type, where):
    text = (text or "").strip()
    try:
        if attr_type in ("int", "long"):
            return int(text)
        if attr_type == "boolean":
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return lowered in ("true", "1")
    except ValueError:
        raise SchemaError(f'{where}: "{text}" is not a valid {attr_type}') from None
    return text


def _element_id(raw, prefix, where):
    if not raw or not raw.startswith(prefix) or not raw[len(prefix):].isdigit():
        raise SchemaError(f'{where} id "{raw}" must look like {prefix}<int>')
    return int(raw[len(prefix):])


def _read_data(element, keys, where):
    attrs = {}
    for data in element:
        if _local(data) != "data":
            continue
        key_id = data.get("key")
        if key_id not in keys:
            raise SchemaError(f'{where}: undeclared key "{key_id}"')
        name, attr_type = keys[key_id]
        attrs[name] = _from_text(data.text, attr_type, where)
    return attrs


def load_graphml(stream):
    """
    Charge un graphe de page depuis un fichier GraphML (chemin ou flux).

    Raises:
        XmlError: document XML invalide
        SchemaError: clé non déclarée, type inconnu, attribut obligatoire
            manquant, arête vers un nœud absent
    """
    if isinstance(stream, Path):
        stream = str(stream)
    parser = etree.XMLParser(resolve_entities=False, no_network=True, huge_tree=True)
    try:
        root = etree.parse(stream, parser).getroot()
    except etree.XMLSyntaxError as e:
        raise XmlError(f"invalid GraphML document ({e})") from e

    if _local(root) != "graphml":
        raise XmlError(f'root element is "{_local(root)}", expected "graphml"')

    keys = {"graph": {}, "node": {}, "edge": {}}
    graph_element = None
    for child in root:
        if not isinstance(child.tag, str):
            continue
        if _local(child) == "key":
            domain = child.get("for")
            if domain not in keys:
                continue
            declared = dict(_DOMAINS[domain][1])
            name = child.get("attr.name")
            if name not in declared:
                raise SchemaError(f'unknown {domain} attribute "{name}"')
            keys[domain][child.get("id")] = (name, declared[name])
        elif _local(child) == "graph" and graph_element is None:
            graph_element = child

    if graph_element is None:
        return PageGraph()

    graph_attrs = _read_data(graph_element, keys["graph"], "graph")
    nodes, edges = [], []
    for element in graph_element:
        if not isinstance(element.tag, str):
            continue
        tag = _local(element)
        if tag == "node":
            node_id = _element_id(element.get("id"), "n", "node")
            attrs = _read_data(element, keys["node"], f"n{node_id}")
            if "kind" not in attrs:
                raise SchemaError(f"n{node_id} without kind")
            nodes.append(GraphNode(id=node_id, **attrs))
        elif tag == "edge":
            edge_id = _element_id(element.get("id"), "e", "edge")
            attrs = _read_data(element, keys["edge"], f"e{edge_id}")
            if "kind" not in attrs:
                raise SchemaError(f"e{edge_id} without kind")
            edges.append(GraphEdge(
                id=edge_id,
                src=_element_id(element.get("source"), "n", f"e{edge_id} source"),
                dst=_element_id(element.get("target"), "n", f"e{edge_id} target"),
                **attrs,
            ))

    return PageGraph(
        nodes=tuple(nodes),
        edges=tuple(edges),
        page_url=graph_attrs.get("page_url", ""),
        partial=graph_attrs.get("partial", False),
    )


def _add_data(parent, prefix, keys, values):
    for name, _ in keys:
        value = values.get(name)
        if value is None:
            continue
        data = etree.SubElement(parent, _q("data"), {"key": f"{prefix}_{name}"})
        data.text = _to_text(value)


def to_element(g):
    root = etree.Element(_q("graphml"), nsmap={None: GRAPHML_NS})
    for domain, (prefix, keys) in _DOMAINS.items():
        for name, attr_type in keys:
            etree.SubElement(root, _q("key"), {
                "id": f"{prefix}_{name}",
                "for": domain,
                "attr.name": name,
                "attr.type": attr_type,
            })

    graph = etree.SubElement(root, _q("graph"), {"id": "G", "edgedefault": "directed"})
    _add_data(graph, "g", GRAPH_KEYS, {"page_url": g.page_url, "partial": g.partial})

    for node in sorted(g.nodes, key=lambda n: n.id):
        element = etree.SubElement(graph, _q("node"), {"id": f"n{node.id}"})
        _add_data(element, "n", NODE_KEYS, {"kind": node.kind, **node.attrs()})

    for edge in sorted(g.edges, key=lambda e: e.id):
        element = etree.SubElement(graph, _q("edge"), {
            "id": f"e{edge.id}",
            "source": f"n{edge.src}",
            "target": f"n{edge.dst}",
        })
        _add_data(element, "e", EDGE_KEYS, {"kind": edge.kind, **edge.attrs()})
    return root


def graphml_bytes(g):
    return etree.tostring(to_element(g), xml_declaration=True, encoding="UTF-8",
                          pretty_print=True)


def save_graphml(g, stream):
    """Écrit g en GraphML canonique (chemin ou flux binaire)."""
    data = graphml_bytes(g)
    if isinstance(stream, (str, Path)):
        path = Path(stream)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    else:
        stream.write(data)
