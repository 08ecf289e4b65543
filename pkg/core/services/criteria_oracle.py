"""
Second, formula-level implementation of the coverage criteria.

Quantifies directly over runs as sets of edges instead of going through
observations and obligations, so it can cross-check core.services.coverage.
Only meaningful for loop-free graphs, where every run passes a decision at
most once and a run and its traversal coincide.
"""

import itertools
from typing import FrozenSet, Iterable, List, Set

from core.services.coverage import Criterion, IndependenceSemantics
from core.services.graph_core import Cfdg, Edge, VertexId
from core.services.runs_traces import LoopMode, Run


def _edges_from(run_edges: FrozenSet[Edge], tails) -> Set[Edge]:
    return {(c, x) for c, x in run_edges if c in tails}


def _heads(run_edges: FrozenSet[Edge], vertex: VertexId) -> Set[VertexId]:
    return {x for c, x in run_edges if c == vertex}


def visits_all_vertices(cfdg: Cfdg, runs: List[Run]) -> bool:
    return all(
        any(
            any(vertex in edge for edge in run.edge_set) or run.path == (vertex,)
            for run in runs
        )
        for vertex in cfdg.cfg.vertices
    )


def both_decision_outcomes(cfdg: Cfdg, runs: List[Run], loop_mode: LoopMode) -> bool:
    for decision in cfdg.decisions:
        members = decision.members
        if loop_mode == LoopMode.EDGE_SET:
            # (v1,s1),(v2,s2) in r, s1 != s2, v1,v2 in D, s1,s2 not in D
            if not any(
                len({s for v, s in r.edge_set if v in members and s not in members}) >= 2
                for r in runs
            ):
                return False
        else:
            reached = {s for r in runs for v, s in r.edge_set if v in members and s not in members}
            if reached != set(cfdg.external_successors(decision)):
                return False
    return True


def both_condition_edges(cfdg: Cfdg, runs: List[Run], loop_mode: LoopMode) -> bool:
    cfg = cfdg.cfg
    for decision in cfdg.decisions:
        for vertex in decision.members:
            if loop_mode == LoopMode.EDGE_SET:
                if not any(len(_heads(r.edge_set, vertex)) >= 2 for r in runs):
                    return False
            elif {x for r in runs for x in _heads(r.edge_set, vertex)} != set(cfg.successor_map[vertex]):
                return False
    return True


def _held_fixed(r1, r2, members, vertex, semantics) -> bool:
    others = members - {vertex}
    if semantics == IndependenceSemantics.STRICT:
        return _edges_from(r1, others) == _edges_from(r2, others)
    if semantics == IndependenceSemantics.MASKING:
        for c in others:
            h1, h2 = _heads(r1, c), _heads(r2, c)
            if h1 and h2 and h1 != h2:
                return False
    return True


def _outcome_changes(r1, r2, members, successors, same_condition) -> bool:
    if same_condition:
        return any(
            {x1, x2} == successors
            for o in members
            for x1 in _heads(r1, o)
            for x2 in _heads(r2, o)
        )
    left = {x for c, x in r1 if c in members and x not in members}
    right = {x for c, x in r2 if c in members and x not in members}
    return any({x1, x2} == successors for x1 in left for x2 in right)


def independent_pairs(
    cfdg: Cfdg,
    runs: List[Run],
    semantics: IndependenceSemantics,
    fixed: bool,
    outcome: bool,
) -> bool:
    for decision in cfdg.decisions:
        members = decision.members
        successors = set(cfdg.external_successors(decision))
        for vertex in members:
            found = False
            for run1, run2 in itertools.product(runs, repeat=2):
                r1, r2 = run1.edge_set, run2.edge_set
                s1, s2 = _heads(r1, vertex), _heads(r2, vertex)
                if not any(a != b for a in s1 for b in s2):
                    continue
                if fixed and not _held_fixed(r1, r2, members, vertex, semantics):
                    continue
                if outcome and not (
                    len(successors) == 2
                    and _outcome_changes(
                        r1, r2, members, successors, semantics == IndependenceSemantics.PAPER_LITERAL and fixed
                    )
                ):
                    continue
                found = True
                break
            if not found:
                return False
    return True


def visits_entries_and_exits(cfdg: Cfdg, runs: List[Run]) -> bool:
    cfg = cfdg.cfg
    entries = all(any(r.path[0] == v for r in runs) for v in cfg.entries)
    exits = all(any(any(h == v for _, h in r.edge_set) or r.path == (v,) for r in runs) for v in cfg.exits)
    return entries and exits


def satisfies(
    cfdg: Cfdg,
    runs: Iterable[Run],
    criterion: Criterion,
    semantics: IndependenceSemantics = IndependenceSemantics.MASKING,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
) -> bool:
    """True when the runs meet the criterion in full"""
    runs = list(runs)
    criterion = Criterion(criterion)
    if criterion == Criterion.SC:
        return visits_all_vertices(cfdg, runs)
    if criterion == Criterion.DC:
        return both_decision_outcomes(cfdg, runs, loop_mode)
    if criterion == Criterion.CC:
        return both_condition_edges(cfdg, runs, loop_mode)
    if criterion == Criterion.DCC:
        return (
            visits_all_vertices(cfdg, runs)
            and both_decision_outcomes(cfdg, runs, loop_mode)
            and both_condition_edges(cfdg, runs, loop_mode)
        )
    if criterion == Criterion.MCC:
        return independent_pairs(cfdg, runs, semantics, fixed=True, outcome=False)
    if criterion == Criterion.FPC:
        return independent_pairs(cfdg, runs, semantics, fixed=False, outcome=True)
    return (
        both_decision_outcomes(cfdg, runs, loop_mode)
        and both_condition_edges(cfdg, runs, loop_mode)
        and visits_entries_and_exits(cfdg, runs)
        and independent_pairs(cfdg, runs, semantics, fixed=True, outcome=True)
    )
