# tempora/render.py
from __future__ import annotations
import os
from pathlib import Path
from jinja2 import Environment, FileSystemLoader, StrictUndefined, select_autoescape

from . import config

_jinja_env = None
_templates_path = None

def _resolve_templates_path() -> Path:
    """Bundled templates unless TEMPORA_TEMPLATES points elsewhere."""
    if os.getenv("TEMPORA_TEMPLATES"):
        return Path(os.getenv("TEMPORA_TEMPLATES")).resolve()
    return config.TEMPLATES_DIR

def _env() -> Environment:
    global _jinja_env, _templates_path
    if _jinja_env is None:
        _templates_path = _resolve_templates_path()
        _jinja_env = Environment(
            loader=FileSystemLoader(str(_templates_path)),
            autoescape=select_autoescape(["tml", "xml"], default_for_string=False),
            undefined=StrictUndefined,
            keep_trailing_newline=True,
            trim_blocks=True,
            lstrip_blocks=True,
        )
        _jinja_env.filters["ljustify"] = lambda v, width: str(v).ljust(width)
        _jinja_env.filters["rjustify"] = lambda v, width: str(v).rjust(width)
    return _jinja_env

def render(template: str, **ctx) -> str:
    """Render a bundled template to text."""
    return _env().get_template(template).render(**ctx)
