# Blocked or Broken - prédiction de casse web par les listes de filtres
__version__ = "1.0.0"
