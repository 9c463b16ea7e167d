"""
Post-traitement des graphes : graphe d'intervention, features, dataset ML
"""

__all__ = [
    'create_ml_dataset',
    'features',
    'intervention_diff',
]
