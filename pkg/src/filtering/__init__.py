"""
Moteur de listes de filtres (sous-ensemble de la syntaxe ABP)
"""

__all__ = ['domains', 'filter_engine']
