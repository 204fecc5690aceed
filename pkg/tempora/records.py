# tempora/records.py
from __future__ import annotations
from typing import Any, Iterable

from .errors import InputError


class Record:
    """
    Chainable validator for JSON input records.
    - Build from a decoded JSON object
    - Chain checks; errors accumulate per field
    - `raise_for_errors()` turns them into one InputError
    """
    def __init__(self, data: Any, *, source: str = "input"):
        self.source = source
        self.errors: dict[str, list[str]] = {}
        if isinstance(data, dict):
            self.data: dict[str, Any] = data
        else:
            self.data = {}
            self._err("$", "expected a JSON object")

    # ----- API -----
    def require(self, *fields: str) -> "Record":
        for f in fields:
            if self.data.get(f) in (None, "", []):
                self._err(f, "required")
        return self

    def typed(self, field: str, kind: type | tuple[type, ...]) -> "Record":
        v = self.data.get(field)
        if v is not None and not isinstance(v, kind):
            self._err(field, "has the wrong type")
        return self

    def list_of(self, field: str, kind: type | tuple[type, ...], *, optional: bool = False) -> "Record":
        v = self.data.get(field)
        if v is None:
            if not optional:
                self._err(field, "required")
            return self
        if not isinstance(v, list):
            self._err(field, "expected a list")
            return self
        for i, item in enumerate(v):
            if not isinstance(item, kind):
                self._err(field, f"item {i} has the wrong type")
        return self

    def one_of(self, field: str, choices: Iterable[str], *, optional: bool = True) -> "Record":
        v = self.data.get(field)
        if v is None:
            if not optional:
                self._err(field, "required")
            return self
        allowed = set(choices)
        if not isinstance(v, str) or v not in allowed:
            self._err(field, f"must be one of {', '.join(sorted(allowed))}")
        return self

    def raise_for_errors(self) -> "Record":
        if self.errors:
            summary = "; ".join(f"{f}: {', '.join(msgs)}" for f, msgs in sorted(self.errors.items()))
            raise InputError(f"invalid {self.source} ({summary})", source=self.source, fields=self.errors)
        return self

    def __getitem__(self, key: str) -> Any:
        return self.data.get(key)

    # ----- internals -----
    def _err(self, field: str, msg: str):
        self.errors.setdefault(field, []).append(msg)
