"""
Boolean decision expressions.
Parses expressions such as `(a && b) || !c`, lowers them to single-decision
CFGs with short-circuit branching, simulates assignments, enumerates
expression shapes and searches for minimal test suites under a criterion.
"""

import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import pyparsing as pp

from core.exceptions import (
    ExpressionError,
    ExpressionSyntaxError,
    IncompleteAssignment,
    TooManySymbols,
)
from core.services.graph_core import Cfg, VertexId, build_cfg
from core.services.runs_traces import LoopMode, Run, TestSuite

logger = logging.getLogger(__name__)

ENTRY = "entry"
EXIT = "exit"
TRUE_SINK = "T"
FALSE_SINK = "F"

MAX_ENUMERATION_SYMBOLS = 16
MAX_ORACLE_SYMBOLS = 10


class OpKind(str, Enum):
    AND = "&"
    SC_AND = "&&"
    OR = "|"
    SC_OR = "||"
    XOR = "^"

    @property
    def short_circuit(self) -> bool:
        return self in (OpKind.SC_AND, OpKind.SC_OR)


_PRECEDENCE = {OpKind.XOR: 3, OpKind.AND: 2, OpKind.SC_AND: 2, OpKind.OR: 1, OpKind.SC_OR: 1}
_DUAL = {
    OpKind.AND: OpKind.OR,
    OpKind.OR: OpKind.AND,
    OpKind.SC_AND: OpKind.SC_OR,
    OpKind.SC_OR: OpKind.SC_AND,
}


@dataclass(frozen=True)
class Cond:
    symbol: str
    negated: bool = False

    def __str__(self):
        return f"!{self.symbol}" if self.negated else self.symbol


@dataclass(frozen=True)
class Op:
    kind: OpKind
    left: "Expr"
    right: "Expr"

    def __str__(self):
        return f"{_render(self.left, self.kind, False)} {self.kind.value} {_render(self.right, self.kind, True)}"


Expr = Union[Cond, Op]


def _render(node: Expr, parent: OpKind, right_side: bool) -> str:
    text = str(node)
    if isinstance(node, Op):
        tighter = _PRECEDENCE[node.kind] > _PRECEDENCE[parent]
        if not tighter and (right_side or _PRECEDENCE[node.kind] < _PRECEDENCE[parent]):
            return f"({text})"
    return text


def negate(node: Expr) -> Expr:
    """Push a negation down to the leaves; branching order is unchanged"""
    if isinstance(node, Cond):
        return Cond(node.symbol, not node.negated)
    if node.kind == OpKind.XOR:
        return Op(OpKind.XOR, negate(node.left), node.right)
    return Op(_DUAL[node.kind], negate(node.left), negate(node.right))


def _fold(tokens) -> Expr:
    items = tokens[0]
    node = items[0]
    for index in range(1, len(items), 2):
        node = Op(OpKind(items[index]), node, items[index + 1])
    return node


def _fold_not(tokens) -> Expr:
    items = tokens[0]
    node = items[-1]
    for _ in items[:-1]:
        node = negate(node)
    return node


def make_grammar() -> pp.ParserElement:
    ident = pp.Word(pp.alphas + "_", pp.alphanums + "_")
    ident.set_parse_action(lambda t: Cond(t[0]))
    grammar = pp.infix_notation(
        ident,
        [
            (pp.Literal("!"), 1, pp.OpAssoc.RIGHT, _fold_not),
            (pp.Literal("^"), 2, pp.OpAssoc.LEFT, _fold),
            (pp.one_of("&& &"), 2, pp.OpAssoc.LEFT, _fold),
            (pp.one_of("|| |"), 2, pp.OpAssoc.LEFT, _fold),
        ],
    )
    # error positions index the text as given
    return grammar.parse_with_tabs()


_GRAMMAR = make_grammar()


def parse_expr(text: str) -> Expr:
    """Parse `!`, `^`, `&`/`&&`, `|`/`||` (tightest first, all left-associative) and parentheses"""
    if not text.strip():
        raise ExpressionSyntaxError("Empty expression", text, 0)
    try:
        return _GRAMMAR.parse_string(text, parse_all=True)[0]
    except pp.ParseException as exc:
        raise ExpressionSyntaxError(exc.msg, text, exc.loc) from exc


def symbols(expr: Expr) -> Tuple[str, ...]:
    """Distinct symbols in order of first occurrence"""
    seen: Dict[str, None] = {}
    for leaf in _leaves(expr):
        seen.setdefault(leaf.symbol, None)
    return tuple(seen)


def _leaves(node: Expr) -> Iterator[Cond]:
    if isinstance(node, Cond):
        yield node
    else:
        yield from _leaves(node.left)
        yield from _leaves(node.right)


def evaluate_expr(node: Expr, values: Mapping[str, bool]) -> bool:
    if isinstance(node, Cond):
        if node.symbol not in values:
            raise IncompleteAssignment([node.symbol])
        return values[node.symbol] != node.negated
    left = evaluate_expr(node.left, values)
    if node.kind == OpKind.SC_AND and not left:
        return False
    if node.kind == OpKind.SC_OR and left:
        return True
    right = evaluate_expr(node.right, values)
    if node.kind in (OpKind.AND, OpKind.SC_AND):
        return left and right
    if node.kind in (OpKind.OR, OpKind.SC_OR):
        return left or right
    return left != right


def condition_clusters(expr: Expr) -> List[Expr]:
    """
    Subexpressions that become one condition vertex each: the maximal
    subtrees reached from the root through short-circuit operators only.
    """
    if isinstance(expr, Op) and expr.kind.short_circuit:
        return condition_clusters(expr.left) + condition_clusters(expr.right)
    return [expr]


@dataclass(frozen=True)
class Assignment:
    symbols: Tuple[str, ...]
    bits: Tuple[bool, ...]

    @classmethod
    def from_mapping(cls, symbol_order: Sequence[str], values: Mapping[str, bool]) -> "Assignment":
        missing = [s for s in symbol_order if s not in values]
        if missing:
            raise IncompleteAssignment(missing)
        return cls(tuple(symbol_order), tuple(bool(values[s]) for s in symbol_order))

    @property
    def values(self) -> Dict[str, bool]:
        return dict(zip(self.symbols, self.bits))

    @property
    def vector(self) -> str:
        return "".join("T" if bit else "F" for bit in self.bits)

    def masked_vector(self, evaluated: FrozenSet[str]) -> str:
        return "".join(
            ("T" if bit else "F") if symbol in evaluated else "-"
            for symbol, bit in zip(self.symbols, self.bits)
        )


@dataclass(frozen=True)
class ExprCfg:
    """The CFG of one expression plus what each condition vertex tests"""

    expr: Expr
    cfg: Cfg
    conditions: Tuple[VertexId, ...]
    tests: Mapping[VertexId, Expr]
    branches: Mapping[VertexId, Tuple[VertexId, VertexId]]

    __hash__ = None

    @property
    def symbols(self) -> Tuple[str, ...]:
        return symbols(self.expr)


def expr_to_cfg(expr: Expr) -> ExprCfg:
    """
    Lower an expression to `entry -> ... -> T|F -> exit`. Short-circuit
    operators branch: for `x && y`, x false jumps straight to F; for `x || y`,
    x true jumps straight to T. Other operators are evaluated as a whole by
    one condition vertex. Condition vertices are numbered in evaluation order.
    """
    clusters = condition_clusters(expr)
    width = len(str(len(clusters) - 1))
    ids = [f"c{index:0{width}d}" for index in range(len(clusters))]
    queue = iter(ids)
    tests: Dict[VertexId, Expr] = {}
    branches: Dict[VertexId, Tuple[VertexId, VertexId]] = {}

    # Number left to right first, then wire right to left
    def number(node):
        if isinstance(node, Op) and node.kind.short_circuit:
            return (node.kind, number(node.left), number(node.right))
        vertex = next(queue)
        tests[vertex] = node
        return vertex

    def lower(numbered, on_true, on_false) -> VertexId:
        if isinstance(numbered, str):
            branches[numbered] = (on_true, on_false)
            return numbered
        kind, left, right = numbered
        right_entry = lower(right, on_true, on_false)
        if kind == OpKind.SC_AND:
            return lower(left, right_entry, on_false)
        return lower(left, on_true, right_entry)

    first = lower(number(expr), TRUE_SINK, FALSE_SINK)

    edges = [(ENTRY, first)]
    edge_labels = {}
    for vertex in ids:
        on_true, on_false = branches[vertex]
        edges += [(vertex, on_true), (vertex, on_false)]
        edge_labels[(vertex, on_true)] = "T"
        edge_labels[(vertex, on_false)] = "F"
    edges += [(TRUE_SINK, EXIT), (FALSE_SINK, EXIT)]

    labels = {ENTRY: ENTRY, TRUE_SINK: TRUE_SINK, FALSE_SINK: FALSE_SINK, EXIT: EXIT}
    labels.update({vertex: str(node) for vertex, node in tests.items()})
    cfg = build_cfg(
        [ENTRY, *ids, TRUE_SINK, FALSE_SINK, EXIT],
        edges,
        labels=labels,
        edge_labels=edge_labels,
        strict=True,
    )
    return ExprCfg(
        expr=expr,
        cfg=cfg,
        conditions=tuple(ids),
        tests=tests,
        branches=branches,
    )


def simulate(lowered: ExprCfg, assignment: Union[Assignment, Mapping[str, bool]], name: Optional[str] = None) -> Run:
    if not isinstance(assignment, Assignment):
        assignment = Assignment.from_mapping(lowered.symbols, assignment)
    values = assignment.values
    missing = [s for s in lowered.symbols if s not in values]
    if missing:
        raise IncompleteAssignment(missing)

    path = [ENTRY]
    vertex = lowered.cfg.successor_map[ENTRY][0]
    while vertex in lowered.branches:
        path.append(vertex)
        on_true, on_false = lowered.branches[vertex]
        vertex = on_true if evaluate_expr(lowered.tests[vertex], values) else on_false
    path += [vertex, EXIT]
    return Run(test_name=name or assignment.vector, path=tuple(path))


def evaluated_symbols(lowered: ExprCfg, run: Run) -> FrozenSet[str]:
    """Symbols read by the condition vertices the run passed through"""
    found = set()
    for vertex in run.path:
        if vertex in lowered.tests:
            found.update(symbols(lowered.tests[vertex]))
    return frozenset(found)


def all_assignments(symbol_order: Sequence[str]) -> Iterator[Assignment]:
    for bits in itertools.product((True, False), repeat=len(symbol_order)):
        yield Assignment(tuple(symbol_order), bits)


def enumerate_runs(lowered: ExprCfg, max_symbols: int = MAX_ENUMERATION_SYMBOLS) -> Dict[Assignment, Run]:
    count = len(lowered.symbols)
    if count > max_symbols:
        raise TooManySymbols(count, max_symbols)
    return {assignment: simulate(lowered, assignment) for assignment in all_assignments(lowered.symbols)}


def distinct_runs(lowered: ExprCfg, max_symbols: int = MAX_ENUMERATION_SYMBOLS) -> List[Run]:
    """
    One run per distinct path, named by the first assignment that produces
    it with `-` for every symbol the path never reads.
    """
    by_path: Dict[Tuple[VertexId, ...], Run] = {}
    for assignment, run in enumerate_runs(lowered, max_symbols).items():
        if run.path in by_path:
            continue
        name = assignment.masked_vector(evaluated_symbols(lowered, run))
        by_path[run.path] = Run(test_name=name, path=run.path)
    return list(by_path.values())


def parse_vector(text: str, symbol_order: Sequence[str]) -> Tuple[Assignment, FrozenSet[str]]:
    """
    `TF-` style vectors, one character per symbol in first-occurrence order.
    `1`/`0` are accepted for T/F; `-` (don't care) is read as false and
    returned in the second element.
    """
    cleaned = text.strip()
    if len(cleaned) < len(symbol_order):
        raise IncompleteAssignment(symbol_order[len(cleaned):])
    if len(cleaned) > len(symbol_order):
        raise ExpressionError(
            f"Vector {text!r} has {len(cleaned)} values but the expression has "
            f"{len(symbol_order)} symbols ({', '.join(symbol_order)})"
        )
    bits = []
    dont_care = set()
    for symbol, char in zip(symbol_order, cleaned.upper()):
        if char in "T1":
            bits.append(True)
        elif char in "F0-":
            bits.append(False)
            if char == "-":
                dont_care.add(symbol)
        else:
            raise ExpressionError(f"Vector {text!r}: expected T, F, 1, 0 or -, found {char!r}")
    return Assignment(tuple(symbol_order), tuple(bits)), frozenset(dont_care)


def enumerate_shapes(
    max_conditions: int,
    operators: Sequence[OpKind] = tuple(OpKind),
) -> Iterator[Expr]:
    """
    Every binary expression tree with 1..max_conditions leaves over the given
    operators. Leaves are the distinct symbols a, b, c, ... from left to right.
    """
    names = [chr(ord("a") + i) for i in range(max_conditions)]

    def build(start: int, count: int) -> Iterator[Expr]:
        if count == 1:
            yield Cond(names[start])
            return
        for split in range(1, count):
            for left in build(start, split):
                for right in build(start + split, count - split):
                    for kind in operators:
                        yield Op(kind, left, right)

    for count in range(1, max_conditions + 1):
        yield from build(0, count)


def minimal_suites(
    lowered: ExprCfg,
    criterion,
    semantics=None,
    loop_mode: LoopMode = LoopMode.TRAVERSAL,
    max_symbols: int = MAX_ORACLE_SYMBOLS,
) -> List[TestSuite]:
    """
    All smallest suites of distinct runs that fully satisfy the criterion.
    Empty when no suite does (some obligations can be unsatisfiable).
    """
    from core.services.coverage import IndependenceSemantics, evaluate
    from core.services.decision_inference import create_cfdg

    semantics = semantics or IndependenceSemantics.MASKING
    count = len(lowered.symbols)
    if count > max_symbols:
        raise TooManySymbols(count, max_symbols)

    cfdg, _ = create_cfdg(lowered.cfg)
    candidates = distinct_runs(lowered, max_symbols)
    logger.info(f"Searching minimal {criterion.value} suites over {len(candidates)} distinct runs")

    for size in range(1, len(candidates) + 1):
        found = []
        for combo in itertools.combinations(candidates, size):
            suite = TestSuite(runs=combo)
            if evaluate(cfdg, suite, criterion, semantics, loop_mode).complete:
                found.append(suite)
        if found:
            logger.info(f"Found {len(found)} minimal suites of size {size}")
            return found
    logger.info(f"No suite satisfies {criterion.value} under {semantics.value}")
    return []
