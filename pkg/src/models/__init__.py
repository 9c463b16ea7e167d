"""
Modèle de casse : prétraitement, GBDT, métriques et évaluation
"""

__all__ = [
    'analyze',
    'evaluation',
    'gbdt',
    'metrics',
    'predict',
    'preprocessor',
    'train',
]
