"""
Graphe « intervention seule » : ce que le diff de liste de filtres a changé

À partir des graphes pré- et post-intervention :
  (a) ressources réseau autorisées avant, bloquées après ("flipped")
  (b) pour chacune, le nœud qui l'a demandée (arête http_request entrante)
      et la paire requête/réponse
  (c) pour chaque <script> marqué, l'acteur script exécuté
  (d) tout voisin direct (dans les deux sens) d'un nœud marqué en (a)-(c)

(c) et (d) ne sont appliquées qu'une fois : pas de point fixe, sinon le
parcours remonte toute la page.
"""

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from src.graphs.graphml import load_graphml, save_graphml
from src.graphs.page_graph import EdgeKind, NodeKind, PageGraph, induced_subgraph

logger = logging.getLogger(__name__)

GRAPH_ROLES = ("pre", "post", "intervention")


@dataclass(frozen=True)
class GraphTriple:
    example_id: str
    pre: PageGraph
    post: PageGraph
    intervention: PageGraph
    label: Optional[str] = None


def _resource_keys(g, node):
    """Clés de correspondance inter-graphes : (url, type de la requête entrante)."""
    keys = {(node.url, e.request_type) for e in g.in_edges.get(node.id, ())
            if e.kind is EdgeKind.HTTP_REQUEST}
    return keys or {(node.url, None)}


def _is_blocked(g, node_id):
    return any(e.kind is EdgeKind.RESOURCE_BLOCK for e in g.in_edges.get(node_id, ()))


def flipped_resources(pre, post):
    """
    Ids (dans pre) des ressources non bloquées dans pre dont un homologue
    de post porte une arête resource_block entrante. Plusieurs ressources de
    pre avec la même clé sont toutes retenues.
    """
    blocked_after = set()
    for node in post.nodes_of_kind(NodeKind.NETWORK_RESOURCE):
        if _is_blocked(post, node.id):
            blocked_after |= _resource_keys(post, node)
    if not blocked_after:
        return set()

    return {
        node.id for node in pre.nodes_of_kind(NodeKind.NETWORK_RESOURCE)
        if not _is_blocked(pre, node.id) and _resource_keys(pre, node) & blocked_after
    }


def build_intervention_graph(pre, post):
    flipped = flipped_resources(pre, post)
    nodes, edges = set(flipped), set()

    # (b) demandeur + requête/réponse
    for resource_id in flipped:
        for edge in pre.in_edges.get(resource_id, ()):
            if edge.kind is EdgeKind.HTTP_REQUEST:
                nodes.add(edge.src)
                edges.add(edge.id)
        for edge in pre.out_edges.get(resource_id, ()):
            if edge.kind is EdgeKind.HTTP_RESPONSE:
                nodes.add(edge.dst)
                edges.add(edge.id)

    # (c) <script> → script_execute → acteur
    for node_id in list(nodes):
        node = pre.node_by_id[node_id]
        if node.kind is NodeKind.DOM_NODE and node.tag == "script":
            for edge in pre.out_edges.get(node_id, ()):
                if edge.kind is EdgeKind.SCRIPT_EXECUTE:
                    nodes.add(edge.dst)
                    edges.add(edge.id)

    # (d) un pas depuis chaque nœud déjà marqué
    for node_id in list(nodes):
        for edge in pre.out_edges.get(node_id, ()):
            nodes.add(edge.dst)
            edges.add(edge.id)
        for edge in pre.in_edges.get(node_id, ()):
            nodes.add(edge.src)
            edges.add(edge.id)

    intervention = induced_subgraph(pre, nodes, edges)
    # le graphe porte ses propres ressources flipped : les features de portée
    # intervention ne relisent jamais post
    marked = tuple(replace(n, flipped=True) if n.id in flipped else n
                   for n in intervention.nodes)
    # partial=True même quand tout pre est marqué : c'est un sous-graphe extrait
    return PageGraph(nodes=marked, edges=intervention.edges,
                     page_url=pre.page_url, partial=True)


def flipped_in(intervention):
    """Ids des ressources marquées flipped dans un graphe d'intervention."""
    return {n.id for n in intervention.nodes if n.flipped}


def is_effectless(triple):
    return not triple.intervention.nodes


def make_triple(example_id, pre, post, label=None):
    return GraphTriple(
        example_id=example_id,
        pre=pre,
        post=post,
        intervention=build_intervention_graph(pre, post),
        label=label,
    )


def triple_paths(directory, example_id):
    directory = Path(directory)
    return {role: directory / f"{example_id}.{role}.graphml" for role in GRAPH_ROLES}


def write_triple(triple, directory):
    for role, path in triple_paths(directory, triple.example_id).items():
        save_graphml(getattr(triple, role), path)


def read_triple(directory, example_id, label=None):
    """
    Charge un triplet ; le graphe d'intervention est recalculé s'il manque.
    """
    paths = triple_paths(directory, example_id)
    pre = load_graphml(paths["pre"])
    post = load_graphml(paths["post"])
    if paths["intervention"].exists():
        intervention = load_graphml(paths["intervention"])
    else:
        logger.debug("%s: graphe d'intervention absent, recalcul", example_id)
        intervention = build_intervention_graph(pre, post)
    return GraphTriple(example_id=example_id, pre=pre, post=post,
                       intervention=intervention, label=label)
