"""
Test runs and trace files.
A run is the vertex path one test walked through a Cfg; trace files hold one
run per line (`name: v1 v2 ... vk`). Runs are validated against the Cfg and
split into per-decision traversals for coverage evaluation.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import FrozenSet, Iterable, Iterator, List, Optional, Tuple

import pyparsing as pp

from core.exceptions import (
    DanglingStep,
    NotAtEntry,
    NotAtExit,
    TraceError,
    TraceSyntaxError,
)
from core.services.graph_core import Cfg, Decision, Edge, VertexId

logger = logging.getLogger(__name__)


class LoopMode(str, Enum):
    TRAVERSAL = "traversal"
    EDGE_SET = "edge-set"


@dataclass(frozen=True)
class Run:
    test_name: str
    path: Tuple[VertexId, ...]

    def __post_init__(self):
        if not self.path:
            raise TraceError(f"run {self.test_name!r} has an empty path")
        object.__setattr__(self, "path", tuple(self.path))

    @cached_property
    def edges(self) -> Tuple[Edge, ...]:
        return tuple(zip(self.path, self.path[1:]))

    @cached_property
    def edge_set(self) -> FrozenSet[Edge]:
        return frozenset(self.edges)

    @cached_property
    def visited(self) -> FrozenSet[VertexId]:
        return frozenset(self.path)


@dataclass(frozen=True)
class DecisionTraversal:
    """One contiguous pass of a run through a decision, ending at an external successor"""

    run: Run
    decision: Decision
    internal_edges: Tuple[Edge, ...]
    outcome: VertexId

    @property
    def exit_edge(self) -> Edge:
        return self.internal_edges[-1]


@dataclass(frozen=True)
class TestSuite:
    runs: Tuple[Run, ...] = ()

    def __post_init__(self):
        names = [run.test_name for run in self.runs]
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise TraceError(f"Duplicate test names in suite: {', '.join(duplicates)}")
        object.__setattr__(self, "runs", tuple(self.runs))

    def __iter__(self) -> Iterator[Run]:
        return iter(self.runs)

    def __len__(self) -> int:
        return len(self.runs)

    @property
    def names(self) -> List[str]:
        return [run.test_name for run in self.runs]


@dataclass(frozen=True)
class Observation:
    """
    What coverage sees of one decision: the decision edges taken and the
    external successors reached. One per traversal in traversal mode, one
    per run in edge-set mode.
    """

    name: str
    edges: FrozenSet[Edge]
    outcomes: FrozenSet[VertexId]
    exit_edges: FrozenSet[Edge] = field(default_factory=frozenset)

    def heads(self, vertex: VertexId) -> FrozenSet[VertexId]:
        return frozenset(h for t, h in self.edges if t == vertex)

    def evaluated(self, vertex: VertexId) -> bool:
        return any(t == vertex for t, _ in self.edges)


# Trace grammar: `name: v1 v2 ...`, `#` comments, double quotes for ids with spaces
_BARE = pp.Regex(r'[^\s"#:]+')
_QUOTED = pp.QuotedString('"', esc_char="\\")
_VERTEX = _QUOTED | pp.Regex(r'[^\s"#]+')
_LINE = (_QUOTED | _BARE)("name") + pp.Suppress(":") + pp.Group(pp.OneOrMore(_VERTEX))("path")
_LINE.ignore(pp.python_style_comment)
_LINE.parse_with_tabs()


def parse_traces(text: str, cfg: Cfg, allow_partial: bool = False) -> TestSuite:
    """Parse a trace file and validate every run against cfg"""
    runs = []
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            parsed = _LINE.parse_string(line, parse_all=True)
        except pp.ParseException as exc:
            raise TraceSyntaxError(exc.msg, number, exc.col) from exc
        run = Run(test_name=parsed["name"], path=tuple(parsed["path"]))
        validate_run(cfg, run, allow_partial=allow_partial)
        runs.append(run)
    logger.info(f"Parsed {len(runs)} runs")
    return TestSuite(runs=tuple(runs))


def validate_run(cfg: Cfg, run: Run, allow_partial: bool = False) -> None:
    """
    Entry start, exit end and an edge for every consecutive pair. Positions
    in errors are 1-based indexes into the path.
    """
    first = run.path[0]
    if first not in cfg or first not in cfg.entries:
        raise NotAtEntry(run.test_name, 1, first)
    for index, (tail, head) in enumerate(run.edges, start=2):
        if head not in cfg or not cfg.has_edge(tail, head):
            raise DanglingStep(run.test_name, index, head)
    last = run.path[-1]
    if last not in cfg.exits:
        if not allow_partial:
            raise NotAtExit(run.test_name, len(run.path), last)
        logger.warning(f"Run {run.test_name!r} stops at {last!r}, which is not an exit vertex")


def serialize_traces(suite: TestSuite) -> str:
    lines = [
        f"{_quote(run.test_name, name=True)}: {' '.join(_quote(v) for v in run.path)}"
        for run in suite
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def _quote(token: str, name: bool = False) -> str:
    special = set(' \t"#') | ({":"} if name else set())
    if token and not any(ch in special or ch.isspace() for ch in token):
        return token
    escaped = token.replace("\\", "\\\\").replace('"', '\\"')
    return f'"{escaped}"'


def decision_traversals(run: Run, decision: Decision, cfg: Cfg) -> List[DecisionTraversal]:
    """
    Split a run into its passes through a decision. A pass collects every
    edge leaving a member and ends at the first edge whose head is outside
    the decision; that head is the traversal's outcome.
    """
    traversals = []
    current: List[Edge] = []
    for tail, head in run.edges:
        if tail not in decision.members:
            continue
        current.append((tail, head))
        if head not in decision.members:
            traversals.append(
                DecisionTraversal(run=run, decision=decision, internal_edges=tuple(current), outcome=head)
            )
            current = []
    if current:
        logger.debug(f"Run {run.test_name!r} ends inside {decision.label}; dropping unfinished traversal")
    return traversals


def observations(
    suite: Iterable[Run],
    decision: Decision,
    cfg: Cfg,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
) -> List[Observation]:
    observed = []
    for run in suite:
        traversals = decision_traversals(run, decision, cfg)
        if loop_mode == LoopMode.EDGE_SET:
            if not traversals and not any(v in decision.members for v in run.path):
                continue
            edges = frozenset(e for e in run.edge_set if e[0] in decision.members)
            exits = frozenset(e for e in edges if e[1] not in decision.members)
            observed.append(
                Observation(
                    name=run.test_name,
                    edges=edges,
                    outcomes=frozenset(h for _, h in exits),
                    exit_edges=exits,
                )
            )
            continue
        for index, traversal in enumerate(traversals):
            name = run.test_name if len(traversals) == 1 else f"{run.test_name}#{index + 1}"
            observed.append(
                Observation(
                    name=name,
                    edges=frozenset(traversal.internal_edges),
                    outcomes=frozenset([traversal.outcome]),
                    exit_edges=frozenset([traversal.exit_edge]),
                )
            )
    return observed


def find_run(suite: TestSuite, name: str) -> Optional[Run]:
    for run in suite:
        if run.test_name == name:
            return run
    return None
