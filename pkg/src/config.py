"""
Configuration : chemins du projet + surcharges par variables
d'environnement (.env chargé avec python-dotenv).
"""

import os
from pathlib import Path

import joblib
from dotenv import load_dotenv

load_dotenv()

# Paths
BASE_DIR = Path(__file__).parent.parent
DATA_DIR = BASE_DIR / "data"
DATA_RAW_DIR = DATA_DIR / "raw"
DATA_PROCESSED_DIR = DATA_DIR / "processed"
MODELS_DIR = BASE_DIR / "models"
REPORTS_DIR = BASE_DIR / "reports"

# Reproductibilité
DEFAULT_SEED = int(os.getenv("BREAKAGE_SEED", "42"))
DEFAULT_JOBS = int(os.getenv("BREAKAGE_JOBS", "0")) or joblib.cpu_count()
LOG_LEVEL = os.getenv("BREAKAGE_LOG_LEVEL", "INFO")
