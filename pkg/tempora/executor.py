# tempora/executor.py
"""Execute logical forms by compiling them to constraint networks.

Every relation function and set operation introduces a fresh reference
interval: ``(r X)`` asserts ``R {r} X``; ``(intersection A B)`` asserts
``R ⊆ A`` and ``R ⊆ B``; ``(union A B)`` asserts ``A ⊆ R`` and ``B ⊆ R``,
where ⊆ is the containment set {starts, during, finishes, equals}. A set
operation whose two arguments are the same expression evaluates it once and
returns it. The denotation is the propagated relation of the root interval
to every context constant.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .algebra import CONTAINMENT, RelationSet, converse
from .errors import TypeCheckError
from .lang import (
    Constant, LogicalForm, Production, RelationFn, Vocabulary, from_actions, type_check,
)
from .network import ConstraintNetwork, NodeId, NodeKind, Status

CONTAINED_BY = CONTAINMENT                 # R ⊆ X
CONTAINS_OR_EQUALS = converse(CONTAINMENT)  # X ⊆ R, read from R's side

BackgroundConstraint = tuple[str, str, RelationSet]


@dataclass(frozen=True)
class ExecutionContext:
    vocabulary: Vocabulary
    background: tuple[BackgroundConstraint, ...] = ()

    def __post_init__(self):
        for a, b, _ in self.background:
            for label in (a, b):
                if label not in self.vocabulary:
                    raise TypeCheckError(
                        f"background constraint mentions {label!r}, which is not in the vocabulary",
                        constant=label,
                    )

    @classmethod
    def of(cls, labels: Iterable[str], background: Iterable[BackgroundConstraint] = ()) -> "ExecutionContext":
        return cls(Vocabulary.infer(labels), tuple(background))


@dataclass(frozen=True)
class Denotation:
    root: str
    relations: Mapping[str, RelationSet] = field(default_factory=dict)
    status: Status = Status.CONSISTENT

    @property
    def consistent(self) -> bool:
        return self.status is Status.CONSISTENT

    def to_dict(self) -> dict[str, Any]:
        return {
            "root": self.root,
            "status": self.status.value,
            "relations": {label: r.names() for label, r in sorted(self.relations.items())},
        }


@dataclass
class Execution:
    """A compiled form: its propagated network and the node standing for the root."""
    network: ConstraintNetwork
    root: NodeId
    context_nodes: dict[str, NodeId]

    @property
    def status(self) -> Status:
        return self.network.status

    def denotation(self) -> Denotation:
        root_label = self.network.nodes[self.root].label
        if self.network.status is not Status.CONSISTENT:
            return Denotation(root_label, {}, Status.INCONSISTENT)
        rel = {label: self.network.relation_between(self.root, nid) for label, nid in self.context_nodes.items()}
        return Denotation(root_label, rel, Status.CONSISTENT)

    def to_graph(self) -> dict[str, Any]:
        return {"root": self.network.nodes[self.root].label, **self.network.to_graph()}


class _Compiler:
    def __init__(self, ctx: ExecutionContext):
        self.net = ConstraintNetwork()
        self.context_nodes = {label: self.net.add_node(kind, label) for label, kind in ctx.vocabulary.entries}
        self._refs = 0

    def fresh(self) -> NodeId:
        label = f"ref#{self._refs}"
        self._refs += 1
        while self.net.has_label(label):
            label = f"ref#{self._refs}"
            self._refs += 1
        return self.net.add_node(NodeKind.REFERENCE, label)

    def compile(self, lf: LogicalForm) -> NodeId:
        if isinstance(lf, Constant):
            return self.context_nodes[lf.label]
        if isinstance(lf, RelationFn):
            n = self.compile(lf.arg)
            r = self.fresh()
            self.net.assert_constraint(r, n, RelationSet.of(lf.relation))
            return r
        a = self.compile(lf.left)
        if lf.left == lf.right:
            return a
        b = self.compile(lf.right)
        r = self.fresh()
        rel = CONTAINED_BY if lf.op == "intersection" else CONTAINS_OR_EQUALS
        self.net.assert_constraint(r, a, rel)
        self.net.assert_constraint(r, b, rel)
        return r


def compile_form(lf: LogicalForm, ctx: ExecutionContext) -> Execution:
    """Build and propagate the network for `lf` (background constraints included)."""
    type_check(lf, ctx.vocabulary)
    c = _Compiler(ctx)
    root = c.compile(lf)
    for a, b, rel in ctx.background:
        c.net.assert_constraint(c.context_nodes[a], c.context_nodes[b], rel)
    c.net.propagate()
    return Execution(c.net, root, c.context_nodes)


def execute(lf: LogicalForm, ctx: ExecutionContext) -> Denotation:
    return compile_form(lf, ctx).denotation()


def execute_actions(seq: Sequence[Production], ctx: ExecutionContext) -> Denotation:
    return execute(from_actions(seq), ctx)


def denotation_signature(d: Denotation) -> str:
    """Canonical text key: equal denotations have equal signatures."""
    if not d.consistent:
        return "INCONSISTENT"
    return ";".join(f"{label}:{d.relations[label]}" for label in sorted(d.relations))
