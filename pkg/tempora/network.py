# tempora/network.py
"""Qualitative constraint networks over intervals.

Edges are stored once per unordered pair (i < j); the reverse direction is
read through the converse, a missing edge is the full set, and a self-loop
is always {equals}. `propagate` runs path consistency to a fixpoint from a
worklist of edges that changed since the last run, so asserting more
constraints and propagating again only revisits what moved.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Any

from ._log import log
from .algebra import (
    FULL_MASK, AllenRelation, RelationSet, compose_masks, converse_mask,
)
from .errors import DuplicateLabelError, NetworkStatusError, NodeError

_EQ = AllenRelation.EQUALS.bit

NodeId = int


class NodeKind(Enum):
    EVENT = "event"
    TIMEX = "timex"
    REFERENCE = "reference"


class Status(Enum):
    UNPROPAGATED = "unpropagated"
    CONSISTENT = "consistent"
    INCONSISTENT = "inconsistent"


@dataclass(frozen=True, slots=True)
class IntervalNode:
    id: NodeId
    kind: NodeKind
    label: str


class ConstraintNetwork:
    def __init__(self):
        self.nodes: list[IntervalNode] = []
        self.status = Status.CONSISTENT  # an empty network is trivially consistent
        self.conflict: str | None = None  # tag of the assertion that emptied an edge
        self._index: dict[str, NodeId] = {}
        self._edges: dict[tuple[int, int], int] = {}
        self._pending: set[tuple[int, int]] = set()
        self._last_tag: str | None = None

    # ---- nodes ----------------------------------------------------------------
    def add_node(self, kind: NodeKind, label: str) -> NodeId:
        if label in self._index:
            raise DuplicateLabelError(f"duplicate node label: {label!r}", label=label)
        nid = len(self.nodes)
        self.nodes.append(IntervalNode(nid, kind, label))
        self._index[label] = nid
        if self.status is not Status.INCONSISTENT:
            self.status = Status.UNPROPAGATED
        return nid

    def node_id(self, label: str) -> NodeId:
        try:
            return self._index[label]
        except KeyError:
            raise NodeError(f"unknown node label: {label!r}", label=label) from None

    def has_label(self, label: str) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return len(self.nodes)

    def _check(self, *ids: NodeId):
        for i in ids:
            if not isinstance(i, int) or not 0 <= i < len(self.nodes):
                raise NodeError(f"invalid node id: {i!r}", node=i)

    # ---- raw edge access ------------------------------------------------------
    def _get(self, i: int, j: int) -> int:
        if i == j:
            return _EQ
        if i < j:
            return self._edges.get((i, j), FULL_MASK)
        return converse_mask(self._edges.get((j, i), FULL_MASK))

    def _set(self, i: int, j: int, mask: int):
        if i < j:
            self._edges[i, j] = mask
            self._pending.add((i, j))
        else:
            self._edges[j, i] = converse_mask(mask)
            self._pending.add((j, i))

    # ---- constraints ----------------------------------------------------------
    def assert_constraint(self, i: NodeId, j: NodeId, r: RelationSet, *, tag: str | None = None) -> Status:
        """N(i,j) <- N(i,j) ∩ r."""
        self._check(i, j)
        self._last_tag = tag
        if self.status is Status.INCONSISTENT:
            return self.status
        if i == j:
            if not r.mask & _EQ:
                self._fail(tag)
            return self.status
        old = self._get(i, j)
        new = old & r.mask
        if new == old:
            return self.status
        self._set(i, j, new)
        if not new:
            self._fail(tag)
        else:
            self.status = Status.UNPROPAGATED
        return self.status

    def assert_labels(self, a: str, b: str, r: RelationSet, *, tag: str | None = None) -> Status:
        return self.assert_constraint(self.node_id(a), self.node_id(b), r, tag=tag)

    def _fail(self, tag: str | None):
        self.status = Status.INCONSISTENT
        if self.conflict is None:
            self.conflict = tag
        log("network inconsistent", f"at {tag}" if tag else "")

    def propagate(self) -> Status:
        """Path consistency to fixpoint over the edges changed since the last run."""
        if self.status is Status.INCONSISTENT:
            return self.status
        queue = deque(sorted(p for p in self._pending if self._edges.get(p, FULL_MASK) != FULL_MASK))
        queued = set(queue)
        self._pending.clear()
        n = len(self.nodes)

        def tighten(a: int, b: int, mask: int) -> bool:
            old = self._get(a, b)
            new = old & mask
            if new == old:
                return True
            self._set(a, b, new)
            if not new:
                return False
            key = (a, b) if a < b else (b, a)
            if key not in queued:
                queued.add(key)
                queue.append(key)
            return True

        while queue:
            i, j = queue.popleft()
            queued.discard((i, j))
            rij = self._get(i, j)
            for k in range(n):
                if k == i or k == j:
                    continue
                # N(i,k) ∩= N(i,j) ∘ N(j,k)
                if not tighten(i, k, compose_masks(rij, self._get(j, k))):
                    return self._inconsistent()
                # N(k,j) ∩= N(k,i) ∘ N(i,j)
                if not tighten(k, j, compose_masks(self._get(k, i), rij)):
                    return self._inconsistent()
        self._pending.clear()
        self.status = Status.CONSISTENT
        return self.status

    def _inconsistent(self) -> Status:
        self._pending.clear()
        self._fail(self._last_tag)
        return self.status

    # ---- queries --------------------------------------------------------------
    def relation_between(self, i: NodeId, j: NodeId) -> RelationSet:
        self._check(i, j)
        if self.status is not Status.CONSISTENT:
            raise NetworkStatusError(
                f"cannot query a {self.status.value} network; propagate it first",
                status=self.status.value,
            )
        return RelationSet(self._get(i, j))

    def edge(self, i: NodeId, j: NodeId) -> RelationSet:
        """Current label regardless of status."""
        self._check(i, j)
        return RelationSet(self._get(i, j))

    def edges(self) -> list[tuple[NodeId, NodeId, RelationSet]]:
        """All non-full labels, i < j, in id order."""
        return [(i, j, RelationSet(m)) for (i, j), m in sorted(self._edges.items()) if m != FULL_MASK]

    def to_graph(self) -> dict[str, Any]:
        """The relation-graph export: nodes, non-full edges and status."""
        return {
            "status": self.status.value,
            "nodes": [{"id": n.id, "kind": n.kind.value, "label": n.label} for n in self.nodes],
            "edges": [
                {"source": self.nodes[i].label, "target": self.nodes[j].label, "relations": r.names()}
                for i, j, r in self.edges()
            ],
            **({"conflict": self.conflict} if self.conflict else {}),
        }
