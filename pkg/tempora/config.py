# tempora/config.py
from __future__ import annotations
import os
from pathlib import Path

# ---- Env helpers -------------------------------------------------------------
def _env_bool(name: str, default: bool = False) -> bool:
    v = os.getenv(name)
    if v is None:
        return default
    return v.strip().lower() in ("1", "true", "yes", "on")

def _env_int(name: str, default: int) -> int:
    v = os.getenv(name)
    if v is None or not v.strip():
        return default
    try:
        return int(v)
    except ValueError:
        return default

# ---- Defaults ----------------------------------------------------------------
DEBUG = _env_bool("TEMPORA_DEBUG", False)

MAX_ACTIONS = _env_int("TEMPORA_MAX_ACTIONS", 12)   # action-sequence bound (search + decode)
BEAM_WIDTH = _env_int("TEMPORA_BEAM", 10)
TOP_K = _env_int("TEMPORA_TOP_K", 5)
JOBS = _env_int("TEMPORA_JOBS", 1)

TEMPLATES_DIR = Path(os.getenv("TEMPORA_TEMPLATES", Path(__file__).parent / "templates")).resolve()
