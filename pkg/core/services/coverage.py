"""
Control-flow coverage criteria over a CFDG.

Evaluates a test suite for statement (SC), decision (DC), condition (CC),
decision/condition (DCC), multiple condition (MCC), full predicate (FPC) and
modified condition/decision coverage (MCDC). Each criterion expands into
obligations that are either satisfied (with witnesses) or missing.
"""

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

from core.services.graph_core import Cfdg, Decision, VertexId
from core.services.runs_traces import LoopMode, Observation, TestSuite, observations

logger = logging.getLogger(__name__)


class Criterion(str, Enum):
    SC = "sc"
    DC = "dc"
    CC = "cc"
    DCC = "dcc"
    MCC = "mcc"
    FPC = "fpc"
    MCDC = "mcdc"


class IndependenceSemantics(str, Enum):
    # conditions evaluated in both observations must agree
    MASKING = "masking"
    # every other condition edge must be identical
    STRICT = "strict"
    # other-condition agreement read existentially; outcome taken from one exiting condition
    PAPER_LITERAL = "paper-literal"


class ObligationKind(str, Enum):
    VERTEX_VISIT = "vertex_visit"
    DECISION_OUTCOME = "decision_outcome"
    CONDITION_OUTCOME = "condition_outcome"
    INDEPENDENCE_PAIR = "independence_pair"
    ENTRY_VISIT = "entry_visit"
    EXIT_VISIT = "exit_visit"


class ObligationStatus(str, Enum):
    SATISFIED = "satisfied"
    MISSING = "missing"


Witness = Tuple[str, ...]


@dataclass(frozen=True)
class Obligation:
    kind: ObligationKind
    subject: str
    status: ObligationStatus
    witnesses: Tuple[Witness, ...] = ()
    detail: str = ""
    decision_id: Optional[int] = None

    @property
    def satisfied(self) -> bool:
        return self.status == ObligationStatus.SATISFIED

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "subject": self.subject,
            "status": self.status.value,
            "witnesses": [list(w) for w in self.witnesses],
            "detail": self.detail,
            "decision": self.decision_id,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Obligation":
        return cls(
            kind=ObligationKind(data["kind"]),
            subject=data["subject"],
            status=ObligationStatus(data["status"]),
            witnesses=tuple(tuple(w) for w in data.get("witnesses", ())),
            detail=data.get("detail", ""),
            decision_id=data.get("decision"),
        )


def _obligation(kind, subject, witnesses, missing_detail="", decision_id=None) -> Obligation:
    witnesses = tuple(witnesses)
    status = ObligationStatus.SATISFIED if witnesses else ObligationStatus.MISSING
    return Obligation(
        kind=kind,
        subject=subject,
        status=status,
        witnesses=witnesses,
        detail="" if witnesses else missing_detail,
        decision_id=decision_id,
    )


@dataclass(frozen=True)
class CoverageReport:
    criterion: Criterion
    semantics: IndependenceSemantics
    loop_mode: LoopMode
    obligations: Tuple[Obligation, ...] = field(default_factory=tuple)

    @property
    def satisfied_count(self) -> int:
        return sum(1 for o in self.obligations if o.satisfied)

    @property
    def verdict_percent(self) -> float:
        """Satisfied / total obligations; vacuously 100 when there are none"""
        if not self.obligations:
            return 100.0
        return 100.0 * self.satisfied_count / len(self.obligations)

    @property
    def complete(self) -> bool:
        return all(o.satisfied for o in self.obligations)

    def missing(self) -> List[Obligation]:
        return [o for o in self.obligations if not o.satisfied]

    def of_kind(self, kind: ObligationKind) -> List[Obligation]:
        return [o for o in self.obligations if o.kind == kind]

    def to_dict(self) -> dict:
        return {
            "criterion": self.criterion.value,
            "semantics": self.semantics.value,
            "loop_mode": self.loop_mode.value,
            "verdict_percent": round(self.verdict_percent, 2),
            "satisfied": self.satisfied_count,
            "total": len(self.obligations),
            "obligations": [o.to_dict() for o in self.obligations],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoverageReport":
        return cls(
            criterion=Criterion(data["criterion"]),
            semantics=IndependenceSemantics(data["semantics"]),
            loop_mode=LoopMode(data["loop_mode"]),
            obligations=tuple(Obligation.from_dict(o) for o in data["obligations"]),
        )


def _report(criterion, obligations, semantics=IndependenceSemantics.MASKING, loop_mode=LoopMode.TRAVERSAL):
    return CoverageReport(
        criterion=criterion,
        semantics=semantics,
        loop_mode=loop_mode,
        obligations=tuple(obligations),
    )


def _names(runs: Iterable) -> Tuple[Witness, ...]:
    return tuple((run.test_name,) for run in runs)


def _decisions(cfdg: Cfdg) -> List[Decision]:
    return sorted(cfdg.decisions, key=lambda d: d.decision_id)


def evaluate_sc(cfdg: Cfdg, suite: TestSuite) -> CoverageReport:
    """One vertex_visit obligation per vertex"""
    obligations = [
        _obligation(
            ObligationKind.VERTEX_VISIT,
            vertex,
            _names(run for run in suite if vertex in run.visited),
            missing_detail="no run visits this vertex",
        )
        for vertex in sorted(cfdg.cfg.vertices)
    ]
    return _report(Criterion.SC, obligations)


def evaluate_dc(cfdg: Cfdg, suite: TestSuite, loop_mode: LoopMode = LoopMode.TRAVERSAL) -> CoverageReport:
    """
    One decision_outcome obligation per (decision, external successor).
    In edge-set mode a single run has to reach every outcome.
    """
    obligations = []
    for decision in _decisions(cfdg):
        outcomes = cfdg.external_successors(decision)
        observed = observations(suite, decision, cfdg.cfg, loop_mode)
        for outcome in sorted(outcomes):
            if loop_mode == LoopMode.EDGE_SET:
                found = [o for o in observed if len(outcomes) > 1 and o.outcomes >= outcomes]
                detail = "no single run leaves the decision through both outcomes"
            else:
                found = [o for o in observed if outcome in o.outcomes]
                detail = f"no run leaves {decision.label} towards {outcome}"
            obligations.append(
                _obligation(
                    ObligationKind.DECISION_OUTCOME,
                    f"{decision.label} -> {outcome}",
                    ((o.name,) for o in found),
                    missing_detail=detail,
                    decision_id=decision.decision_id,
                )
            )
    return _report(Criterion.DC, obligations, loop_mode=loop_mode)


def evaluate_cc(cfdg: Cfdg, suite: TestSuite, loop_mode: LoopMode = LoopMode.TRAVERSAL) -> CoverageReport:
    """One condition_outcome obligation per outgoing edge of every condition"""
    cfg = cfdg.cfg
    obligations = []
    for decision in _decisions(cfdg):
        observed = observations(suite, decision, cfg, loop_mode)
        for vertex in sorted(decision.members):
            heads = set(cfg.successor_map[vertex])
            for head in sorted(heads):
                if loop_mode == LoopMode.EDGE_SET:
                    found = [o for o in observed if o.heads(vertex) >= heads]
                    detail = f"no single run takes both edges of {vertex}"
                else:
                    found = [o for o in observed if head in o.heads(vertex)]
                    detail = f"edge {vertex} -> {head} never taken"
                obligations.append(
                    _obligation(
                        ObligationKind.CONDITION_OUTCOME,
                        f"{vertex} -> {head}",
                        ((o.name,) for o in found),
                        missing_detail=detail,
                        decision_id=decision.decision_id,
                    )
                )
    return _report(Criterion.CC, obligations, loop_mode=loop_mode)


def evaluate_dcc(cfdg: Cfdg, suite: TestSuite, loop_mode: LoopMode = LoopMode.TRAVERSAL) -> CoverageReport:
    parts = [evaluate_sc(cfdg, suite), evaluate_dc(cfdg, suite, loop_mode), evaluate_cc(cfdg, suite, loop_mode)]
    return _compose(Criterion.DCC, parts, loop_mode=loop_mode)


# Pair predicates shared by MCC, FPC and MCDC


def varies(first: Observation, second: Observation, vertex: VertexId) -> bool:
    """The condition took different edges in the two observations"""
    left, right = first.heads(vertex), second.heads(vertex)
    return any(x != y for x in left for y in right)


def agree(
    first: Observation,
    second: Observation,
    decision: Decision,
    vertex: VertexId,
    semantics: IndependenceSemantics,
) -> bool:
    """Every other condition of the decision is held fixed, as the semantics reads it"""
    if semantics == IndependenceSemantics.PAPER_LITERAL:
        return True
    others = decision.members - {vertex}
    if semantics == IndependenceSemantics.STRICT:
        return {e for e in first.edges if e[0] in others} == {e for e in second.edges if e[0] in others}
    for other in others:
        left, right = first.heads(other), second.heads(other)
        if left and right and left != right:
            return False
    return True


def flips(
    first: Observation,
    second: Observation,
    decision: Decision,
    outcomes: frozenset,
    semantics: IndependenceSemantics = IndependenceSemantics.MASKING,
) -> bool:
    """The two observations reach the two different outcomes of the decision"""
    if len(outcomes) != 2:
        return False
    if semantics == IndependenceSemantics.PAPER_LITERAL:
        # one condition o must exit towards x1 in the first and x2 in the second
        return any(
            {x1, x2} == outcomes
            for member in decision.members
            for x1 in first.heads(member)
            for x2 in second.heads(member)
        )
    return any({x1, x2} == outcomes for x1 in first.outcomes for x2 in second.outcomes)


PairTest = Callable[[Observation, Observation, Decision, VertexId], bool]


def _pair_obligations(
    cfdg: Cfdg,
    suite: TestSuite,
    loop_mode: LoopMode,
    accept: PairTest,
    missing_detail: Callable[[Decision, VertexId], str],
) -> List[Obligation]:
    obligations = []
    for decision in _decisions(cfdg):
        observed = observations(suite, decision, cfdg.cfg, loop_mode)
        for vertex in sorted(decision.members):
            witness = None
            for first, second in itertools.combinations_with_replacement(observed, 2):
                if varies(first, second, vertex) and accept(first, second, decision, vertex):
                    witness = (first.name, second.name)
                    break
            obligations.append(
                _obligation(
                    ObligationKind.INDEPENDENCE_PAIR,
                    vertex,
                    [witness] if witness else [],
                    missing_detail=missing_detail(decision, vertex),
                    decision_id=decision.decision_id,
                )
            )
    return obligations


def evaluate_mcc(
    cfdg: Cfdg,
    suite: TestSuite,
    semantics: IndependenceSemantics = IndependenceSemantics.MASKING,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
) -> CoverageReport:
    """One independence_pair obligation per condition: vary it while the others agree"""

    def accept(first, second, decision, vertex):
        return agree(first, second, decision, vertex, semantics)

    def detail(decision, vertex):
        return f"no pair varies {vertex} while the other conditions of {decision.label} agree ({semantics.value})"

    obligations = _pair_obligations(cfdg, suite, loop_mode, accept, detail)
    return _report(Criterion.MCC, obligations, semantics, loop_mode)


def evaluate_fpc(cfdg: Cfdg, suite: TestSuite, loop_mode: LoopMode = LoopMode.TRAVERSAL) -> CoverageReport:
    """One independence_pair obligation per condition: vary it and flip the decision outcome"""

    def accept(first, second, decision, vertex):
        return flips(first, second, decision, cfdg.external_successors(decision))

    def detail(decision, vertex):
        return f"no pair varies {vertex} and reaches both outcomes of {decision.label}"

    obligations = _pair_obligations(cfdg, suite, loop_mode, accept, detail)
    return _report(Criterion.FPC, obligations, loop_mode=loop_mode)


def evaluate_mcdc(
    cfdg: Cfdg,
    suite: TestSuite,
    semantics: IndependenceSemantics = IndependenceSemantics.MASKING,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
) -> CoverageReport:
    """
    Entry and exit visits, one independence pair per condition (vary only it
    and flip the outcome, in the same pair), plus the DC and CC obligations.
    """
    cfg = cfdg.cfg
    entries = [
        _obligation(
            ObligationKind.ENTRY_VISIT,
            vertex,
            _names(run for run in suite if run.path[0] == vertex),
            missing_detail="no run starts at this entry",
        )
        for vertex in sorted(cfg.entries)
    ]
    exits = [
        _obligation(
            ObligationKind.EXIT_VISIT,
            vertex,
            _names(run for run in suite if vertex in run.visited),
            missing_detail="no run reaches this exit",
        )
        for vertex in sorted(cfg.exits)
    ]

    def accept(first, second, decision, vertex):
        return agree(first, second, decision, vertex, semantics) and flips(
            first, second, decision, cfdg.external_successors(decision), semantics
        )

    def detail(decision, vertex):
        text = f"no pair varies only {vertex} and flips the outcome of {decision.label} ({semantics.value})"
        if semantics == IndependenceSemantics.STRICT and _short_circuited_by(cfdg, decision, vertex):
            text += "; unsatisfiable: short-circuiting leaves other conditions unevaluated when it changes"
        return text

    independence = _pair_obligations(cfdg, suite, loop_mode, accept, detail)
    parts = [
        _report(Criterion.MCDC, entries + exits + independence, semantics, loop_mode),
        evaluate_dc(cfdg, suite, loop_mode),
        evaluate_cc(cfdg, suite, loop_mode),
    ]
    return _compose(Criterion.MCDC, parts, semantics, loop_mode)


def _short_circuited_by(cfdg: Cfdg, decision: Decision, vertex: VertexId) -> bool:
    """One edge of the condition leaves the decision, so the two branches evaluate different conditions"""
    heads = cfdg.cfg.successor_map[vertex]
    return any(h not in decision.members for h in heads) and any(h in decision.members for h in heads)


def _compose(
    criterion: Criterion,
    parts: Sequence[CoverageReport],
    semantics: IndependenceSemantics = IndependenceSemantics.MASKING,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
) -> CoverageReport:
    obligations = tuple(o for part in parts for o in part.obligations)
    return _report(criterion, obligations, semantics, loop_mode)


_EVALUATORS: Dict[Criterion, Callable[..., CoverageReport]] = {
    Criterion.SC: lambda cfdg, suite, semantics, loop_mode: evaluate_sc(cfdg, suite),
    Criterion.DC: lambda cfdg, suite, semantics, loop_mode: evaluate_dc(cfdg, suite, loop_mode),
    Criterion.CC: lambda cfdg, suite, semantics, loop_mode: evaluate_cc(cfdg, suite, loop_mode),
    Criterion.DCC: lambda cfdg, suite, semantics, loop_mode: evaluate_dcc(cfdg, suite, loop_mode),
    Criterion.MCC: evaluate_mcc,
    Criterion.FPC: lambda cfdg, suite, semantics, loop_mode: evaluate_fpc(cfdg, suite, loop_mode),
    Criterion.MCDC: evaluate_mcdc,
}


def evaluate(
    cfdg: Cfdg,
    suite: TestSuite,
    criterion: Criterion,
    semantics: IndependenceSemantics = IndependenceSemantics.MASKING,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
) -> CoverageReport:
    report = _EVALUATORS[Criterion(criterion)](cfdg, suite, semantics, loop_mode)
    report = _report(Criterion(criterion), report.obligations, semantics, loop_mode)
    logger.debug(
        f"{report.criterion.value}: {report.satisfied_count}/{len(report.obligations)} obligations "
        f"({report.verdict_percent:.1f}%)"
    )
    return report


def evaluate_all(
    cfdg: Cfdg,
    suite: TestSuite,
    semantics: IndependenceSemantics = IndependenceSemantics.MASKING,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
) -> List[CoverageReport]:
    return [evaluate(cfdg, suite, criterion, semantics, loop_mode) for criterion in Criterion]
