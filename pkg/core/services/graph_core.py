"""
Control-flow graph model.
Defines Cfg / Decision / Cfdg, structural validation and the successor,
predecessor and dominator queries shared by every other service.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, FrozenSet, List, Optional, Set, Tuple, Union

from core.exceptions import (
    DanglingEdge,
    Disconnected,
    GraphError,
    NoExit,
    NoUniqueEntry,
    OutdegreeViolation,
    UnknownVertex,
)

logger = logging.getLogger(__name__)

VertexId = str
Edge = Tuple[VertexId, VertexId]

MAX_OUTDEGREE = 2


@dataclass(frozen=True)
class Cfg:
    """
    Directed graph of program points. Every vertex has at most two distinct
    successors; parallel edges have already been collapsed by build_cfg.
    """

    vertices: Tuple[VertexId, ...]
    edges: Tuple[Edge, ...]
    labels: Mapping[VertexId, str] = field(default_factory=dict)
    edge_labels: Mapping[Edge, Optional[str]] = field(default_factory=dict)
    collapsed_edges: Tuple[Edge, ...] = ()

    __hash__ = None

    @cached_property
    def vertex_set(self) -> FrozenSet[VertexId]:
        return frozenset(self.vertices)

    @cached_property
    def successor_map(self) -> Dict[VertexId, Tuple[VertexId, ...]]:
        succ: Dict[VertexId, List[VertexId]] = {v: [] for v in self.vertices}
        for tail, head in self.edges:
            succ[tail].append(head)
        return {v: tuple(heads) for v, heads in succ.items()}

    @cached_property
    def predecessor_map(self) -> Dict[VertexId, Tuple[VertexId, ...]]:
        pred: Dict[VertexId, List[VertexId]] = {v: [] for v in self.vertices}
        for tail, head in self.edges:
            pred[head].append(tail)
        return {v: tuple(tails) for v, tails in pred.items()}

    @cached_property
    def edge_set(self) -> FrozenSet[Edge]:
        return frozenset(self.edges)

    @property
    def entries(self) -> Set[VertexId]:
        return {v for v in self.vertices if not self.predecessor_map[v]}

    @property
    def exits(self) -> Set[VertexId]:
        return {v for v in self.vertices if not self.successor_map[v]}

    @property
    def entry(self) -> VertexId:
        entries = self.entries
        if len(entries) != 1:
            raise NoUniqueEntry(entries)
        return next(iter(entries))

    @cached_property
    def condition_vertices(self) -> Tuple[VertexId, ...]:
        """Vertices with two distinct successors, in VertexId order"""
        return tuple(sorted(v for v in self.vertices if self.outdegree(v) == 2))

    def outdegree(self, vertex: VertexId) -> int:
        return len(self.successor_map[vertex])

    def indegree(self, vertex: VertexId) -> int:
        return len(self.predecessor_map[vertex])

    def has_edge(self, tail: VertexId, head: VertexId) -> bool:
        return (tail, head) in self.edge_set

    def __contains__(self, vertex) -> bool:
        return vertex in self.vertex_set

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class Decision:
    """A group of condition vertices that together form one decision"""

    members: FrozenSet[VertexId]
    entry: VertexId
    decision_id: int = 0

    def __post_init__(self):
        if not self.members:
            raise GraphError("A decision needs at least one member")
        if self.entry not in self.members:
            raise GraphError(f"Decision entry {self.entry!r} is not one of its members")

    def __contains__(self, vertex) -> bool:
        return vertex in self.members

    def __len__(self) -> int:
        return len(self.members)

    @property
    def label(self) -> str:
        return f"Decision {self.decision_id}"


@dataclass(frozen=True)
class Cfdg:
    """A Cfg plus disjoint decision subgraphs covering its condition vertices"""

    cfg: Cfg
    decisions: Tuple[Decision, ...]

    __hash__ = None

    def __post_init__(self):
        seen: Dict[VertexId, int] = {}
        for decision in self.decisions:
            for vertex in decision.members:
                if vertex not in self.cfg:
                    raise UnknownVertex(vertex)
                if vertex in seen:
                    raise GraphError(
                        f"Vertex {vertex!r} belongs to decisions {seen[vertex]} "
                        f"and {decision.decision_id}"
                    )
                seen[vertex] = decision.decision_id
        uncovered = [v for v in self.cfg.condition_vertices if v not in seen]
        if uncovered:
            raise GraphError(f"Condition vertices outside any decision: {', '.join(uncovered)}")

    @cached_property
    def _index(self) -> Dict[VertexId, Decision]:
        return {v: d for d in self.decisions for v in d.members}

    def decision_of(self, vertex: VertexId) -> Optional[Decision]:
        return self._index.get(vertex)

    def external_successors(self, decision: Decision) -> FrozenSet[VertexId]:
        return frozenset(successors_of(self.cfg, decision.members) - decision.members)


def build_cfg(
    vertices: Iterable[VertexId],
    edges: Iterable[Edge],
    labels: Optional[Mapping[VertexId, str]] = None,
    strict: bool = False,
    edge_labels: Optional[Mapping[Edge, Optional[str]]] = None,
) -> Cfg:
    """
    Validate and build a Cfg.

    Parallel edges (same tail and head) are collapsed to one edge and
    reported through a warning and Cfg.collapsed_edges. In strict mode the
    graph must also have a unique entry, at least one exit and be weakly
    connected.
    """
    ordered: List[VertexId] = []
    known: Set[VertexId] = set()
    for vertex in vertices:
        if not vertex:
            raise GraphError("Vertex ids must be non-empty")
        if vertex not in known:
            known.add(vertex)
            ordered.append(vertex)

    kept: List[Edge] = []
    kept_set: Set[Edge] = set()
    collapsed: List[Edge] = []
    for tail, head in edges:
        if tail not in known or head not in known:
            raise DanglingEdge(tail, head)
        if (tail, head) in kept_set:
            collapsed.append((tail, head))
            continue
        kept_set.add((tail, head))
        kept.append((tail, head))

    for tail, head in collapsed:
        logger.warning(f"Collapsed parallel edge {tail} -> {head}")

    heads: Dict[VertexId, Set[VertexId]] = {}
    for tail, head in kept:
        heads.setdefault(tail, set()).add(head)
    for tail, successors in heads.items():
        if len(successors) > MAX_OUTDEGREE:
            raise OutdegreeViolation(tail, successors)

    edge_labels = dict(edge_labels or {})
    cfg = Cfg(
        vertices=tuple(ordered),
        edges=tuple(kept),
        labels=dict(labels or {}),
        edge_labels={edge: edge_labels.get(edge) for edge in kept if edge in edge_labels},
        collapsed_edges=tuple(collapsed),
    )
    if strict:
        validate_strict(cfg)
    return cfg


def validate_strict(cfg: Cfg) -> None:
    """Unique entry, at least one exit, weakly connected"""
    entries = cfg.entries
    if len(entries) != 1:
        raise NoUniqueEntry(entries)
    if not cfg.exits:
        raise NoExit()
    if cfg.vertices:
        start = cfg.vertices[0]
        seen = {start}
        stack = [start]
        while stack:
            vertex = stack.pop()
            for neighbour in cfg.successor_map[vertex] + cfg.predecessor_map[vertex]:
                if neighbour not in seen:
                    seen.add(neighbour)
                    stack.append(neighbour)
        if len(seen) != len(cfg.vertices):
            raise Disconnected(cfg.vertex_set - seen)


def successors_of(cfg: Cfg, vertex_or_set: Union[VertexId, Iterable[VertexId]]) -> Set[VertexId]:
    """
    Successors of a vertex, or of a set of vertices (the union over its
    members). For a set the result may contain members of the set itself.
    """
    return _neighbours(cfg, vertex_or_set, cfg.successor_map)


def predecessors_of(cfg: Cfg, vertex_or_set: Union[VertexId, Iterable[VertexId]]) -> Set[VertexId]:
    return _neighbours(cfg, vertex_or_set, cfg.predecessor_map)


def _neighbours(cfg, vertex_or_set, table) -> Set[VertexId]:
    members = [vertex_or_set] if isinstance(vertex_or_set, str) else list(vertex_or_set)
    out: Set[VertexId] = set()
    for vertex in members:
        if vertex not in table:
            raise UnknownVertex(vertex)
        out.update(table[vertex])
    return out


def entry_and_exits(cfg: Cfg) -> Tuple[Set[VertexId], Set[VertexId]]:
    return cfg.entries, cfg.exits


def reverse_postorder(cfg: Cfg, roots: Optional[Iterable[VertexId]] = None) -> List[VertexId]:
    """
    Reverse postorder of a depth-first search from the entry vertices.
    Successors are explored in VertexId order. Vertices unreachable from the
    roots are appended as further DFS roots so that every vertex is ordered.
    """
    start = sorted(roots) if roots is not None else sorted(cfg.entries)
    start += sorted(v for v in cfg.vertices if v not in set(start))

    seen: Set[VertexId] = set()
    postorder: List[VertexId] = []
    for root in start:
        if root in seen:
            continue
        seen.add(root)
        stack = [(root, iter(sorted(cfg.successor_map[root])))]
        while stack:
            vertex, children = stack[-1]
            for child in children:
                if child not in seen:
                    seen.add(child)
                    stack.append((child, iter(sorted(cfg.successor_map[child]))))
                    break
            else:
                stack.pop()
                postorder.append(vertex)
    postorder.reverse()
    return postorder


class _Root:
    """Virtual root placed above every real root of a dominator tree"""

    def __repr__(self):
        return "<root>"


VIRTUAL_ROOT = _Root()


def dominator_tree(cfg: Cfg, roots: Iterable[VertexId]) -> Dict[VertexId, object]:
    """
    Immediate dominators below a virtual root connected to every vertex in
    `roots`. Vertices directly under the virtual root map to VIRTUAL_ROOT;
    unreachable vertices are absent.
    """
    roots = sorted(roots)
    reachable = _reachable(cfg, roots)
    order = [VIRTUAL_ROOT] + [v for v in reverse_postorder(cfg, roots) if v in reachable]
    number = {v: i for i, v in enumerate(order)}

    def preds(vertex):
        found = [p for p in cfg.predecessor_map[vertex] if p in reachable]
        if vertex in roots:
            found.append(VIRTUAL_ROOT)
        return found

    idom: Dict[object, object] = {VIRTUAL_ROOT: VIRTUAL_ROOT}

    def intersect(left, right):
        while left != right:
            while number[left] > number[right]:
                left = idom[left]
            while number[right] > number[left]:
                right = idom[right]
        return left

    changed = True
    while changed:
        changed = False
        for vertex in order[1:]:
            processed = [p for p in preds(vertex) if p in idom]
            if not processed:
                continue
            new_idom = processed[0]
            for pred in processed[1:]:
                new_idom = intersect(new_idom, pred)
            if idom.get(vertex) != new_idom:
                idom[vertex] = new_idom
                changed = True

    del idom[VIRTUAL_ROOT]
    return idom


def immediate_dominators(cfg: Cfg) -> Dict[VertexId, Optional[VertexId]]:
    """Immediate dominator of every vertex reachable from the unique entry (entry maps to None)"""
    entry = cfg.entry
    tree = dominator_tree(cfg, [entry])
    return {v: (None if d is VIRTUAL_ROOT else d) for v, d in tree.items()}


def compute_dominators(cfg: Cfg) -> Dict[VertexId, Set[VertexId]]:
    """
    dominators(v) = vertices on every entry -> v path. Vertices that cannot
    be reached from the entry have no such path, so every vertex vacuously
    dominates them.
    """
    idom = immediate_dominators(cfg)
    doms: Dict[VertexId, Set[VertexId]] = {}
    for vertex in reverse_postorder(cfg, [cfg.entry]):
        if vertex not in idom:
            doms[vertex] = set(cfg.vertices)
        elif idom[vertex] is None:
            doms[vertex] = {vertex}
        else:
            doms[vertex] = doms[idom[vertex]] | {vertex}
    return doms


def dominates(idom: Mapping[VertexId, object], dominator: VertexId, vertex: VertexId) -> bool:
    """Walk the idom chain of `vertex`; unreachable vertices are dominated by everything"""
    if vertex not in idom:
        return True
    current = vertex
    while current is not None and current is not VIRTUAL_ROOT:
        if current == dominator:
            return True
        current = idom.get(current)
    return False


def _reachable(cfg: Cfg, roots: Iterable[VertexId]) -> Set[VertexId]:
    seen = set(roots)
    stack = list(seen)
    while stack:
        for child in cfg.successor_map[stack.pop()]:
            if child not in seen:
                seen.add(child)
                stack.append(child)
    return seen
