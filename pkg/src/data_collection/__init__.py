"""
Collecte des exemples : historique de commits des listes de filtres
et crawl synthétique de pages
"""

__all__ = [
    'commit_miner',
    'synth_crawl',
]
