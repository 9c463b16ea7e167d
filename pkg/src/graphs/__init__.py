"""
Modèle de graphe de comportement de page (nœuds/arêtes typés) + GraphML
"""

__all__ = ['graphml', 'html_tags', 'page_graph']
