"""
Decision inference for control-flow graphs.
Groups condition vertices into decision subgraphs (create_cfdg + merge),
verifies the structural properties every decision must have, and offers an
optional contraction of interstitial vertices between conditions.
"""

import logging
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

from core.services.graph_core import (
    Cfdg,
    Cfg,
    Decision,
    VertexId,
    build_cfg,
    dominates,
    dominator_tree,
    reverse_postorder,
    successors_of,
)

logger = logging.getLogger(__name__)

MAX_VISITS = 2


@dataclass
class MergeStats:
    vertex_visit_counts: Counter = field(default_factory=Counter)
    merges_performed: int = 0
    self_loops: List[VertexId] = field(default_factory=list)

    def record_visit(self, vertex: VertexId) -> None:
        self.vertex_visit_counts[vertex] += 1

    @property
    def max_visits(self) -> int:
        return max(self.vertex_visit_counts.values(), default=0)


class DecisionGroup:
    """
    A decision while it is being built. All members of a group share the same
    object in the DecisionMap, so merging two groups is visible through every
    member at once.
    """

    __slots__ = ("anchor", "members", "successors")

    def __init__(self, vertex: VertexId, successors):
        self.anchor = vertex
        self.members: Set[VertexId] = {vertex}
        self.successors: Set[VertexId] = set(successors)

    def absorb(self, other: "DecisionGroup") -> None:
        self.members |= other.members
        self.successors |= other.successors

    def __repr__(self):
        return f"DecisionGroup({sorted(self.members)})"


class DecisionMap:
    """
    Condition vertex -> current decision group, plus the visited flags shared
    by every merge call of one create_cfdg run.
    """

    def __init__(self, cfg: Cfg, stats: Optional[MergeStats] = None):
        self.cfg = cfg
        self.stats = stats if stats is not None else MergeStats()
        self.mapping: Dict[VertexId, DecisionGroup] = {}
        for vertex in cfg.condition_vertices:
            heads = [s for s in cfg.successor_map[vertex] if s != vertex]
            if len(heads) != len(cfg.successor_map[vertex]):
                logger.warning(f"Ignoring self-loop on condition vertex {vertex} during merging")
                self.stats.self_loops.append(vertex)
            self.mapping[vertex] = DecisionGroup(vertex, heads)
        self.visited: Dict[VertexId, bool] = {v: False for v in cfg.vertices}
        self.rank = {v: i for i, v in enumerate(reverse_postorder(cfg))}
        self.discovery: Dict[VertexId, int] = {}

    def is_condition(self, vertex: VertexId) -> bool:
        return vertex in self.mapping

    def discover(self, vertex: VertexId) -> None:
        self.discovery.setdefault(vertex, len(self.discovery))

    def ordered(self, vertices) -> List[VertexId]:
        """Successors in reverse postorder, so a condition is explored before the ones it reaches"""
        return sorted(vertices, key=lambda v: (self.rank[v], v))

    def union(self, keep: DecisionGroup, other: DecisionGroup) -> None:
        keep.absorb(other)
        for vertex in other.members:
            self.mapping[vertex] = keep

    def groups(self) -> List[DecisionGroup]:
        unique = {id(g): g for g in self.mapping.values()}
        return list(unique.values())


class _Frame:
    __slots__ = ("anchor", "pending", "cursor", "child")

    def __init__(self, anchor, pending):
        self.anchor = anchor
        self.pending = pending
        self.cursor = 0
        self.child = None


def merge(d1: DecisionGroup, dmap: DecisionMap, cfg: Cfg) -> Set[VertexId]:
    """
    Merge d1 with the decisions that follow it.

    Every unvisited successor is marked visited; a successor that is a
    condition is merged recursively first, and its decision joins d1 when
    the successors it returns share a vertex with (successors(d1) minus the
    successor itself). Returns successors(d1) for the possibly merged d1.

    The recursion is run on an explicit stack so that deep graphs do not hit
    the interpreter's recursion limit.
    """
    stats = dmap.stats
    frames = [_Frame(d1.anchor, dmap.ordered(d1.successors))]
    returned: Set[VertexId] = set()

    while frames:
        frame = frames[-1]

        if frame.child is not None:
            entered, frame.child = frame.child, None
            ours = dmap.mapping[frame.anchor]
            theirs = dmap.mapping[entered]
            if ours is not theirs and (ours.successors - {entered}) & returned:
                logger.debug(f"Merging {sorted(theirs.members)} into {sorted(ours.members)}")
                dmap.union(ours, theirs)
                stats.merges_performed += 1

        if frame.cursor < len(frame.pending):
            successor = frame.pending[frame.cursor]
            frame.cursor += 1
            if dmap.visited[successor]:
                continue
            dmap.visited[successor] = True
            stats.record_visit(successor)
            dmap.discover(successor)
            if dmap.is_condition(successor):
                frame.child = successor
                d2 = dmap.mapping[successor]
                frames.append(_Frame(successor, dmap.ordered(d2.successors)))
            continue

        frames.pop()
        returned = set(dmap.mapping[frame.anchor].successors)

    return returned


def create_cfdg(cfg: Cfg) -> Tuple[Cfdg, MergeStats]:
    """
    Infer the decision subgraphs of a Cfg.

    Condition vertices (outdegree 2) are visited in VertexId order and merge
    is started from each one that has not been visited yet. Decisions are
    numbered in the order their first member was discovered.
    """
    stats = MergeStats()
    dmap = DecisionMap(cfg, stats)

    for vertex in sorted(dmap.mapping):
        if not dmap.visited[vertex]:
            stats.record_visit(vertex)
            dmap.discover(vertex)
            merge(dmap.mapping[vertex], dmap, cfg)

    groups = sorted(
        dmap.groups(),
        key=lambda g: min(dmap.discovery.get(v, len(dmap.discovery)) for v in g.members),
    )
    decisions = tuple(
        Decision(
            members=frozenset(group.members),
            entry=_entry_of(cfg, group.members, dmap.rank),
            decision_id=number,
        )
        for number, group in enumerate(groups)
    )
    logger.info(
        f"Inferred {len(decisions)} decisions from {len(dmap.mapping)} conditions "
        f"({stats.merges_performed} merges)"
    )
    return Cfdg(cfg=cfg, decisions=decisions), stats


def entry_members(cfg: Cfg, members) -> List[VertexId]:
    """Members entered from outside the group (or that have no predecessor at all)"""
    members = set(members)
    found = []
    for vertex in members:
        preds = cfg.predecessor_map[vertex]
        if not preds or any(p not in members for p in preds):
            found.append(vertex)
    return found


def _entry_of(cfg: Cfg, members, rank) -> VertexId:
    candidates = entry_members(cfg, members) or list(members)
    return min(candidates, key=lambda v: (rank[v], v))


def normalize_interstitial(cfg: Cfg) -> Tuple[Cfg, Dict[VertexId, VertexId]]:
    """
    Contract every vertex with one predecessor and one successor that sits
    between two condition vertices, linking the conditions directly. A
    vertex whose edge goes back to a loop header (retreating in reverse
    postorder) is a loop body, not an interstitial vertex, and is kept.
    Returns the rewritten Cfg and a map removed vertex -> vertex it now
    points at. A graph without such vertices is returned unchanged.
    """
    succ = {v: list(cfg.successor_map[v]) for v in cfg.vertices}
    pred = {v: list(cfg.predecessor_map[v]) for v in cfg.vertices}
    rank = {v: i for i, v in enumerate(reverse_postorder(cfg))}
    removed: Dict[VertexId, VertexId] = {}

    def eligible(vertex):
        if len(pred[vertex]) != 1 or len(succ[vertex]) != 1:
            return False
        before, after = pred[vertex][0], succ[vertex][0]
        if not rank[before] < rank[vertex] < rank[after]:
            return False
        return len(succ[before]) == 2 and len(succ[after]) == 2

    worklist = deque(cfg.vertices)
    while worklist:
        vertex = worklist.popleft()
        if vertex in removed or not eligible(vertex):
            continue
        before, after = pred[vertex][0], succ[vertex][0]
        if after in succ[before]:
            logger.warning(f"Contracting {vertex} collapses parallel edge {before} -> {after}")
            succ[before].remove(vertex)
            pred[after].remove(vertex)
        else:
            succ[before][succ[before].index(vertex)] = after
            pred[after][pred[after].index(vertex)] = before
        removed[vertex] = after
        worklist.append(before)
        logger.debug(f"Contracted interstitial vertex {vertex} ({before} -> {after})")

    if not removed:
        return cfg, {}

    def resolve(vertex):
        while vertex in removed:
            vertex = removed[vertex]
        return vertex

    contraction = {v: resolve(target) for v, target in removed.items()}
    vertices = [v for v in cfg.vertices if v not in removed]
    edges = [(v, s) for v in vertices for s in succ[v]]
    edge_labels = {}
    for (tail, head), text in cfg.edge_labels.items():
        if tail in removed:
            continue
        edge_labels.setdefault((tail, resolve(head)), text)
    normalized = build_cfg(
        vertices,
        edges,
        labels={v: text for v, text in cfg.labels.items() if v not in removed},
        edge_labels=edge_labels,
    )
    logger.info(f"Contracted {len(contraction)} interstitial vertices")
    return normalized, contraction


def restore_interstitial(cfdg: Cfdg, original: Cfg, contraction: Dict[VertexId, VertexId]) -> Cfdg:
    """
    Map decisions found on a normalized graph back onto the original one.
    A contracted vertex joins a decision when both the condition before it
    and the condition it was folded into belong to that decision.
    """

    def origin(vertex):
        before = original.predecessor_map[vertex][0]
        while before in contraction:
            before = original.predecessor_map[before][0]
        return before

    decisions = []
    for decision in cfdg.decisions:
        extra = {
            removed
            for removed, target in contraction.items()
            if target in decision.members and origin(removed) in decision.members
        }
        decisions.append(Decision(decision.members | extra, decision.entry, decision.decision_id))
    return Cfdg(cfg=original, decisions=tuple(decisions))


@dataclass(frozen=True)
class DecisionCheck:
    """Structural checks for one decision; empty tuples mean the check passed"""

    decision: Decision
    external_successors: FrozenSet[VertexId]
    entries: Tuple[VertexId, ...]
    undominated: Tuple[VertexId, ...]
    not_sharing: Tuple[VertexId, ...]

    @property
    def two_successors(self) -> bool:
        return len(self.external_successors) == 2

    @property
    def single_entry(self) -> bool:
        return len(self.entries) == 1 and not self.undominated

    @property
    def shared_successors(self) -> bool:
        return not self.not_sharing

    @property
    def ok(self) -> bool:
        return self.two_successors and self.single_entry and self.shared_successors

    @property
    def counterexamples(self) -> Tuple[VertexId, ...]:
        extra_entries = tuple(v for v in self.entries if v != self.decision.entry)
        return tuple(sorted(set(extra_entries + self.undominated + self.not_sharing)))

    def problems(self) -> List[str]:
        label = self.decision.label
        found = []
        if not self.two_successors:
            found.append(
                f"{label}: expected 2 external successors, found "
                f"{len(self.external_successors)} ({', '.join(sorted(self.external_successors))})"
            )
        if len(self.entries) != 1:
            found.append(f"{label}: entered through {len(self.entries)} vertices ({', '.join(self.entries)})")
        if self.undominated:
            found.append(
                f"{label}: entry {self.decision.entry} does not dominate {', '.join(self.undominated)}"
            )
        if self.not_sharing:
            found.append(
                f"{label}: {', '.join(self.not_sharing)} share no successor with the rest of the decision"
            )
        return found


@dataclass(frozen=True)
class InvariantReport:
    checks: Tuple[DecisionCheck, ...]

    @property
    def ok(self) -> bool:
        return all(check.ok for check in self.checks)

    def failures(self) -> List[DecisionCheck]:
        return [check for check in self.checks if not check.ok]

    def problems(self) -> List[str]:
        return [line for check in self.checks for line in check.problems()]


def verify_decision_invariants(cfdg: Cfdg) -> InvariantReport:
    """
    Check every decision for: exactly two external successors; a single
    entry member that dominates all members; and, for decisions with more
    than one member, every member sharing a successor with the rest of the
    decision. Never raises.
    """
    cfg = cfdg.cfg
    roots = sorted(cfg.entries)
    if not roots and cfg.vertices:
        roots = [reverse_postorder(cfg)[0]]
    idom = dominator_tree(cfg, roots) if cfg.vertices else {}

    checks = []
    for decision in cfdg.decisions:
        members = decision.members
        entries = tuple(sorted(entry_members(cfg, members)))
        undominated = tuple(
            sorted(v for v in members if not dominates(idom, decision.entry, v))
        )
        not_sharing = ()
        if len(members) > 1:
            not_sharing = tuple(
                sorted(
                    v
                    for v in members
                    if not successors_of(cfg, v) & successors_of(cfg, members - {v})
                )
            )
        check = DecisionCheck(
            decision=decision,
            external_successors=cfdg.external_successors(decision),
            entries=entries,
            undominated=undominated,
            not_sharing=not_sharing,
        )
        if not check.ok:
            for line in check.problems():
                logger.warning(line)
        checks.append(check)
    return InvariantReport(checks=tuple(checks))
