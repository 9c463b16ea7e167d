import io

import pytest

from src.errors import DanglingEdge, SchemaError, XmlError
from src.filtering.filter_engine import ResourceType
from src.graphs.graphml import graphml_bytes, load_graphml, save_graphml
from src.graphs.html_tags import normalize_tag
from src.graphs.page_graph import (
    EdgeKind,
    GraphEdge,
    GraphNode,
    NodeKind,
    PageGraph,
    induced_subgraph,
)

NS = 'xmlns="http://graphml.graphdrawing.org/xmlns"'

IMAGE_GRAPHML = f"""<?xml version="1.0" encoding="UTF-8"?>
<graphml {NS}>
  <key id="nk" for="node" attr.name="kind" attr.type="string"/>
  <key id="nt" for="node" attr.name="tag" attr.type="string"/>
  <key id="nu" for="node" attr.name="url" attr.type="string"/>
  <key id="nf" for="node" attr.name="frame_id" attr.type="int"/>
  <key id="ek" for="edge" attr.name="kind" attr.type="string"/>
  <key id="er" for="edge" attr.name="request_type" attr.type="string"/>
  <key id="es" for="edge" attr.name="status" attr.type="int"/>
  <key id="eb" for="edge" attr.name="size_bytes" attr.type="long"/>
  <graph id="G" edgedefault="directed">
    <node id="n1"><data key="nk">parser</data><data key="nf">0</data></node>
    <node id="n197"><data key="nk">dom_node</data><data key="nt">IMG</data>
      <data key="nf">0</data></node>
    <node id="n2"><data key="nk">network_resource</data>
      <data key="nu">https://a.com/b.png</data></node>
    <edge id="e1" source="n1" target="n197"><data key="ek">node_create</data></edge>
    <edge id="e2" source="n197" target="n2"><data key="ek">http_request</data>
      <data key="er">image</data><data key="eb">1880</data></edge>
    <edge id="e3" source="n2" target="n197"><data key="ek">http_response</data>
      <data key="es">200</data><data key="eb">13191</data></edge>
  </graph>
</graphml>
"""


def load_text(text):
    return load_graphml(io.BytesIO(text.encode("utf-8")))


# =====================================================================
# MODÈLE
# =====================================================================

def test_node_validation():
    with pytest.raises(SchemaError):
        GraphNode(id=1, kind=NodeKind.DOM_NODE)
    with pytest.raises(SchemaError):
        GraphNode(id=1, kind=NodeKind.NETWORK_RESOURCE)
    with pytest.raises(SchemaError):
        GraphNode(id=1, kind=NodeKind.STORAGE_AREA, storage_kind="indexedDB")
    with pytest.raises(SchemaError):
        GraphNode(id=1, kind="shadow_root")
    with pytest.raises(SchemaError, match="flipped"):
        GraphNode(id=1, kind=NodeKind.DOM_NODE, tag="img", frame_id=0, flipped=True)


def test_edge_validation():
    with pytest.raises(SchemaError):
        GraphEdge(id=1, src=1, dst=2, kind=EdgeKind.HTTP_REQUEST)
    with pytest.raises(SchemaError):
        GraphEdge(id=1, src=1, dst=2, kind=EdgeKind.HTTP_RESPONSE, status=200)
    with pytest.raises(SchemaError):
        GraphEdge(id=1, src=1, dst=2, kind=EdgeKind.HTTP_RESPONSE, size_bytes=-1)


def test_request_type_is_case_insensitive():
    edge = GraphEdge(id=1, src=1, dst=2, kind=EdgeKind.HTTP_REQUEST, request_type="Image")
    assert edge.request_type is ResourceType.IMAGE
    assert load_text(IMAGE_GRAPHML.replace(">image<", ">Image<")).edge_by_id[2].request_type \
        is ResourceType.IMAGE
    with pytest.raises(SchemaError):
        GraphEdge(id=1, src=1, dst=2, kind=EdgeKind.HTTP_REQUEST, request_type="beacon")


def test_tags_are_normalized():
    assert GraphNode(id=1, kind=NodeKind.DOM_NODE, tag="IFRAME").tag == "iframe"
    assert normalize_tag("my-widget") == "unknown"


def test_graph_invariants(image_pre):
    with pytest.raises(DanglingEdge):
        PageGraph(nodes=image_pre.nodes[:2], edges=image_pre.edges)
    with pytest.raises(SchemaError):
        PageGraph(nodes=image_pre.nodes + (GraphNode(id=1, kind=NodeKind.TEXT_NODE),))
    with pytest.raises(SchemaError, match="parser"):
        PageGraph(nodes=(GraphNode(id=5, kind=NodeKind.DOM_NODE, tag="div", frame_id=3),))
    with pytest.raises(SchemaError, match="parser"):
        PageGraph(nodes=(GraphNode(id=1, kind=NodeKind.PARSER, frame_id=0),
                         GraphNode(id=2, kind=NodeKind.PARSER, frame_id=0)))


def test_partial_graph_may_lack_parser():
    node = GraphNode(id=5, kind=NodeKind.DOM_NODE, tag="div", frame_id=3)
    assert PageGraph(nodes=(node,), partial=True).nodes == (node,)


def test_parallel_edges_are_kept(image_pre):
    extra = GraphEdge(id=9, src=197, dst=2, kind=EdgeKind.HTTP_REQUEST, request_type="image")
    g = PageGraph(nodes=image_pre.nodes, edges=image_pre.edges + (extra,))
    assert len(g.out_edges[197]) == 2
    assert [e.id for e in g.in_edges[2]] == [2, 9]


def test_indexes(image_pre):
    assert image_pre.node_by_id[197].tag == "img"
    assert [e.id for e in image_pre.edges_of_kind(EdgeKind.HTTP_RESPONSE)] == [3]
    assert [n.id for n in image_pre.nodes_of_kind(NodeKind.PARSER)] == [1]


# =====================================================================
# induced_subgraph
# =====================================================================

def test_induced_subgraph_identity(image_pre):
    sub = induced_subgraph(image_pre, {1, 197, 2}, {1, 2, 3})
    assert sub == image_pre


def test_induced_subgraph_empty(image_pre):
    sub = induced_subgraph(image_pre, set(), set())
    assert sub.nodes == () and sub.edges == ()
    assert sub.partial


def test_induced_subgraph_subset(image_pre):
    sub = induced_subgraph(image_pre, {197, 2}, {2, 3})
    assert sorted(n.id for n in sub.nodes) == [2, 197]
    assert sorted(e.id for e in sub.edges) == [2, 3]
    assert sub.partial
    assert sub.edge_by_id[3].size_bytes == 13191


def test_induced_subgraph_rejects_dangling_edge(image_pre):
    with pytest.raises(DanglingEdge):
        induced_subgraph(image_pre, {197}, {2})
    with pytest.raises(SchemaError):
        induced_subgraph(image_pre, {42}, set())


# =====================================================================
# GRAPHML
# =====================================================================

def test_load_image_graph(image_pre):
    g = load_text(IMAGE_GRAPHML)
    assert len(g.nodes) == 3 and len(g.edges) == 3
    assert g.node_by_id[197].tag == "img"
    request = g.edge_by_id[2]
    assert request.kind is EdgeKind.HTTP_REQUEST
    assert request.request_type.value == "image"
    assert request.size_bytes == 1880
    assert g.edge_by_id[3].status == 200
    assert g.canonical().nodes == image_pre.canonical().nodes
    assert g.canonical().edges == image_pre.canonical().edges


def test_load_empty_graph():
    g = load_text(f'<graphml {NS}><graph id="G" edgedefault="directed"/></graphml>')
    assert g == PageGraph()


def test_load_rejects_dangling_edge():
    text = IMAGE_GRAPHML.replace('target="n197"><data key="ek">node_create',
                                 'target="n404"><data key="ek">node_create')
    with pytest.raises(SchemaError):
        load_text(text)


def test_load_rejects_unknown_attribute():
    text = IMAGE_GRAPHML.replace('attr.name="tag"', 'attr.name="color"')
    with pytest.raises(SchemaError, match="color"):
        load_text(text)


def test_load_rejects_bad_values():
    with pytest.raises(SchemaError):
        load_text(IMAGE_GRAPHML.replace("<data key=\"es\">200", "<data key=\"es\">OK"))
    with pytest.raises(SchemaError):
        load_text(IMAGE_GRAPHML.replace('id="n197"', 'id="img"'))


def test_load_rejects_invalid_xml():
    with pytest.raises(XmlError):
        load_text("<graphml><graph>")
    with pytest.raises(XmlError):
        load_text("<svg/>")


def test_save_then_load_is_identity(tmp_path, image_pre, image_post):
    for g in (image_pre, image_post, PageGraph(), PageGraph(page_url="https://x.org/")):
        path = tmp_path / "g.graphml"
        save_graphml(g, path)
        assert load_graphml(path).canonical() == g.canonical()


def test_save_is_byte_stable(tmp_path, image_pre):
    shuffled = PageGraph(nodes=image_pre.nodes[::-1], edges=image_pre.edges[::-1],
                         page_url=image_pre.page_url)
    assert graphml_bytes(shuffled) == graphml_bytes(image_pre)
    path = tmp_path / "nested" / "pre.graphml"
    save_graphml(image_pre, path)
    assert path.read_bytes() == graphml_bytes(image_pre)
    assert graphml_bytes(load_graphml(path)) == graphml_bytes(image_pre)


def test_partial_flag_and_parallel_edges_round_trip(image_pre):
    extra = GraphEdge(id=9, src=197, dst=2, kind=EdgeKind.HTTP_REQUEST, request_type="image",
                      cross_frame=True)
    g = PageGraph(nodes=image_pre.nodes, edges=image_pre.edges + (extra,), partial=True)
    loaded = load_graphml(io.BytesIO(graphml_bytes(g)))
    assert loaded.partial
    assert loaded.edge_by_id[9].cross_frame is True
    assert len(loaded.edges) == 4


def test_flipped_flag_round_trips(image_pre):
    nodes = tuple(GraphNode(id=n.id, kind=n.kind, url=n.url, flipped=True)
                  if n.kind is NodeKind.NETWORK_RESOURCE else n for n in image_pre.nodes)
    g = PageGraph(nodes=nodes, edges=image_pre.edges, partial=True)
    loaded = load_graphml(io.BytesIO(graphml_bytes(g)))
    assert loaded.node_by_id[2].flipped is True
    assert loaded.node_by_id[197].flipped is None
