# tempora/errors.py
from __future__ import annotations
from typing import Any


class TemporaError(Exception):
    """Base error. `to_record()` is what the CLI prints on failure."""
    code = "tempora_error"

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.details = details

    def to_record(self) -> dict[str, Any]:
        return {"error": self.code, "message": str(self), **self.details}


# ---- Algebra ----------------------------------------------------------------
class IntervalError(TemporaError, ValueError):
    code = "invalid_interval"

class RelationError(TemporaError, ValueError):
    code = "unknown_relation"


# ---- Network ----------------------------------------------------------------
class NetworkError(TemporaError):
    code = "network_error"

class DuplicateLabelError(NetworkError, ValueError):
    code = "duplicate_label"

class NodeError(NetworkError, ValueError):
    code = "invalid_node"

class NetworkStatusError(NetworkError):
    code = "network_status"


# ---- Language ---------------------------------------------------------------
class LFSyntaxError(TemporaError, ValueError):
    code = "lf_syntax"

class TypeCheckError(TemporaError, ValueError):
    code = "lf_type"

class ReplayError(TemporaError, ValueError):
    code = "lf_replay"


# ---- Search / decode --------------------------------------------------------
class SearchError(TemporaError, ValueError):
    code = "dpd_search"

class DecodeError(TemporaError, ValueError):
    code = "decode"


# ---- IO ---------------------------------------------------------------------
class TimeMLError(TemporaError):
    code = "timeml"

class InputError(TemporaError, ValueError):
    code = "invalid_input"
