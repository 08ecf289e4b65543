"""
GraphViz dot reader and writer for CFG dumps.

Reads the dot emitted by GCC (-fdump-tree-*-graph), Clang (-view-cfg /
-dot-cfg) or written by hand into one Cfg per function, and writes the
original text back with every decision wrapped in a
`cluster_decision_<function>_<n>` subgraph. The writer splices into the
source text, so everything it does not touch is preserved byte for byte.
"""

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pyparsing as pp

from core.exceptions import DecisionVertexMissing, DotError, DotSyntaxError, NotADigraph
from core.services.graph_core import Cfdg, Cfg, Edge, VertexId, build_cfg

logger = logging.getLogger(__name__)

DECISION_CLUSTER_PREFIX = "cluster_decision_"
CLUSTER_PREFIX = "cluster"

dot_keywords = ["graph", "subgraph", "digraph", "node", "edge", "strict"]

id_re_alpha_nums = re.compile(r"^[_a-zA-Z\x80-\uffff][a-zA-Z0-9_\x80-\uffff]*$")
id_re_num = re.compile(r"^-?(\.[0-9]+|[0-9]+(\.[0-9]*)?)$")

_GCC_MARKER = re.compile(r"\\?<bb\\? ")
_CLANG_MARKER = re.compile(r"%[\w.]+:")


class Dialect(str, Enum):
    GCC = "gcc"
    CLANG = "clang"
    GENERIC = "generic"


def needs_quotes(s: str) -> bool:
    if s.lower() in dot_keywords:
        return True
    return not (id_re_alpha_nums.match(s) or id_re_num.match(s))


def quote_if_necessary(s: str) -> str:
    if not needs_quotes(s):
        return s
    escaped = s.replace('"', '\\"')
    return f'"{escaped}"'


def unquote(raw: str) -> str:
    """Strip quotes and line continuations; other escapes (\\l, \\n) are kept verbatim"""
    if len(raw) >= 2 and raw[0] == '"' and raw[-1] == '"':
        return raw[1:-1].replace("\\\n", "").replace("\\\r\n", "").replace('\\"', '"')
    return raw


def detect_dialect(text: str) -> Dialect:
    if _GCC_MARKER.search(text):
        return Dialect.GCC
    if _CLANG_MARKER.search(text):
        return Dialect.CLANG
    return Dialect.GENERIC


# Parse tree


class _Name:
    __slots__ = ("raw", "loc", "end")

    def __init__(self, raw, loc, end):
        self.raw = raw
        self.loc = loc
        self.end = end

    @property
    def value(self) -> str:
        return unquote(self.raw)


class _Ref:
    __slots__ = ("vertex",)

    def __init__(self, vertex):
        self.vertex = vertex


class _Attrs:
    __slots__ = ("values",)

    def __init__(self, values):
        self.values = values


class _NodeStmt:
    __slots__ = ("ref", "attrs")

    def __init__(self, ref, attrs):
        self.ref = ref
        self.attrs = attrs


class _EdgeStmt:
    __slots__ = ("points", "attrs")

    def __init__(self, points, attrs):
        self.points = points
        self.attrs = attrs


class _Defaults:
    __slots__ = ("kind", "attrs")

    def __init__(self, kind, attrs):
        self.kind = kind
        self.attrs = attrs


class _Assign:
    __slots__ = ("key", "value")

    def __init__(self, key, value):
        self.key = key
        self.value = value


class _Subgraph:
    __slots__ = ("start", "name", "stmts", "close")

    def __init__(self, start, name, stmts, close):
        self.start = start
        self.name = name
        self.stmts = stmts
        self.close = close

    @property
    def is_decision_cluster(self) -> bool:
        return self.name is not None and self.name.value.startswith(DECISION_CLUSTER_PREFIX)

    def vertices(self) -> List[VertexId]:
        found: List[VertexId] = []
        for stmt in self.stmts:
            if isinstance(stmt, _NodeStmt):
                found.append(stmt.ref.vertex)
            elif isinstance(stmt, _EdgeStmt):
                for point in stmt.points:
                    found += _point_vertices(point)
            elif isinstance(stmt, _Subgraph):
                found += stmt.vertices()
        return found


def _point_vertices(point) -> List[VertexId]:
    return point.vertices() if isinstance(point, _Subgraph) else [point.vertex]


class _Marker:
    __slots__ = ("loc",)

    def __init__(self, loc):
        self.loc = loc


def _attrs_action(tokens):
    values: Dict[str, str] = {}
    for pair in tokens:
        key = pair[0]
        values[unquote(key)] = pair[1] if len(pair) > 1 else "true"
    return _Attrs(values)


def _subgraph_action(tokens):
    items = list(tokens)
    start = items.pop(0).loc
    name = items.pop(0) if items and isinstance(items[0], _Name) else None
    close = items.pop().loc
    stmts = list(items[0]) if items else []
    return _Subgraph(start, name, stmts, close)


def make_grammar() -> pp.ParserElement:
    """Dot grammar restricted to what CFG dumps use; see graphviz.org/doc/info/lang.html"""
    unquoted = pp.Regex(r"[A-Za-z_\x80-\uffff][\w\x80-\uffff]*")
    numeral = pp.Regex(r"-?(\.\d+|\d+(\.\d*)?)")
    quoted = pp.Regex(r'"(?:\\.|[^"\\])*"', flags=re.DOTALL)
    joined = (quoted + pp.OneOrMore(pp.Suppress("+") + quoted)).set_parse_action(
        lambda t: '"' + "".join(part[1:-1] for part in t) + '"'
    )
    html = pp.original_text_for(pp.nested_expr("<", ">", content=pp.CharsNotIn("<>")))
    ident = (joined | quoted | html | numeral | unquoted).set_name("ID")

    strict_ = pp.CaselessKeyword("strict")
    graph_kind = pp.CaselessKeyword("digraph") | pp.CaselessKeyword("graph")
    subgraph_ = pp.CaselessKeyword("subgraph").set_parse_action(lambda s, loc, t: _Marker(loc))
    close = pp.Literal("}").set_parse_action(lambda s, loc, t: _Marker(loc))
    lbrace = pp.Suppress("{")
    semi = pp.Suppress(";")
    edgeop = pp.Suppress(pp.Literal("->") | pp.Literal("--"))

    # same markers as pp.original_text_for: ident alone reports loc before skipped whitespace
    name_start = pp.Empty().set_parse_action(lambda s, loc, t: loc)
    name_end = name_start.copy()
    name_end.callPreparse = False
    name = (name_start + ident + name_end).set_parse_action(lambda t: _Name(t[1], t[0], t[2]))
    port = pp.Suppress(":") + ident + pp.Optional(pp.Suppress(":") + ident)
    node_id = (ident + pp.Suppress(pp.Optional(port))).set_parse_action(lambda t: _Ref(unquote(t[0])))

    pair = pp.Group(ident + pp.Optional(pp.Suppress("=") + ident)) + pp.Suppress(pp.Optional(pp.one_of("; ,")))
    attr_list = pp.OneOrMore(pp.Suppress("[") + pp.ZeroOrMore(pair) + pp.Suppress("]")).set_parse_action(
        _attrs_action
    )

    stmt_list = pp.Forward()
    subgraph = (
        pp.Optional(subgraph_ + pp.Optional(name), default=_Marker(None))
        + lbrace
        + pp.Group(stmt_list)
        + close
    ).set_parse_action(_subgraph_action)

    edge_point = subgraph | node_id
    edge_stmt = (edge_point + pp.OneOrMore(edgeop + edge_point) + pp.Optional(attr_list)).set_parse_action(
        lambda t: _EdgeStmt(
            [p for p in t if not isinstance(p, _Attrs)],
            t[-1].values if isinstance(t[-1], _Attrs) else {},
        )
    )
    attr_stmt = (
        (pp.CaselessKeyword("graph") | pp.CaselessKeyword("node") | pp.CaselessKeyword("edge")) + attr_list
    ).set_parse_action(lambda t: _Defaults(t[0].lower(), t[1].values))
    assignment = (ident + pp.Suppress("=") + ident).set_parse_action(lambda t: _Assign(unquote(t[0]), t[1]))
    node_stmt = (node_id + pp.Optional(attr_list)).set_parse_action(
        lambda t: _NodeStmt(t[0], t[1].values if len(t) > 1 else {})
    )

    stmt = attr_stmt | edge_stmt | subgraph | assignment | node_stmt
    stmt_list <<= pp.ZeroOrMore(stmt + pp.Optional(semi))

    graph = (
        pp.Optional(strict_).suppress()
        + graph_kind("kind")
        + pp.Optional(name)("name")
        + lbrace
        + pp.Group(stmt_list)("body")
        + close("close")
    )
    graph.ignore(pp.cpp_style_comment)
    graph.ignore(pp.Regex(r"#[^\n]*"))
    # offsets index the original text, which keeps its tabs
    graph.parse_with_tabs()
    return graph


_GRAMMAR = make_grammar()


# Documents


@dataclass(frozen=True)
class DotFunction:
    name: str
    cfg: Cfg
    passthrough_attrs: Mapping[str, str] = field(default_factory=dict)
    node_attributes: Mapping[VertexId, Mapping[str, str]] = field(default_factory=dict)
    edge_attributes: Mapping[Edge, Mapping[str, str]] = field(default_factory=dict)
    invisible_edges: Tuple[Edge, ...] = ()
    scope_close: int = 0

    __hash__ = None


@dataclass(frozen=True)
class DotDocument:
    text: str
    dialect: Dialect
    functions: Tuple[DotFunction, ...]
    graph_name: str = ""
    # (start, end, raw name) of cluster subgraphs that annotation renames
    cluster_names: Tuple[Tuple[int, int, str], ...] = ()
    # (start, end) of decision clusters from an earlier annotation
    decision_spans: Tuple[Tuple[int, int], ...] = ()

    __hash__ = None


class _FunctionBuilder:
    def __init__(self, name: str, scope_close: int):
        self.name = name
        self.scope_close = scope_close
        self.vertices: Dict[VertexId, None] = {}
        self.node_attributes: Dict[VertexId, Dict[str, str]] = {}
        self.edges: List[Edge] = []
        self.edge_attributes: Dict[Edge, Dict[str, str]] = {}
        self.invisible: List[Edge] = []
        self.graph_attrs: Dict[str, str] = {}

    def add_node(self, vertex: VertexId, attrs: Mapping[str, str]) -> None:
        self.vertices.setdefault(vertex, None)
        if attrs:
            self.node_attributes.setdefault(vertex, {}).update(attrs)

    def add_edge(self, tail: VertexId, head: VertexId, attrs: Mapping[str, str]) -> None:
        self.add_node(tail, {})
        self.add_node(head, {})
        if "invis" in unquote(attrs.get("style", "")):
            logger.debug(f"Skipping invisible edge {tail} -> {head}")
            self.invisible.append((tail, head))
            return
        self.edges.append((tail, head))
        if attrs:
            self.edge_attributes.setdefault((tail, head), dict(attrs))

    def collect(self, stmts, edge_defaults: Dict[str, str], top: bool = False) -> None:
        edge_defaults = dict(edge_defaults)
        for stmt in stmts:
            if isinstance(stmt, _NodeStmt):
                self.add_node(stmt.ref.vertex, stmt.attrs)
            elif isinstance(stmt, _EdgeStmt):
                attrs = {**edge_defaults, **stmt.attrs}
                for point in stmt.points:
                    if isinstance(point, _Subgraph):
                        self.collect(point.stmts, edge_defaults)
                for left, right in zip(stmt.points, stmt.points[1:]):
                    for tail in _point_vertices(left):
                        for head in _point_vertices(right):
                            self.add_edge(tail, head, attrs)
            elif isinstance(stmt, _Subgraph):
                self.collect(stmt.stmts, edge_defaults)
            elif isinstance(stmt, _Defaults):
                if stmt.kind == "edge":
                    edge_defaults.update(stmt.attrs)
                elif top and stmt.kind == "graph":
                    self.graph_attrs.update(stmt.attrs)
            elif isinstance(stmt, _Assign) and top:
                self.graph_attrs[stmt.key] = stmt.value

    def build(self) -> DotFunction:
        labels = {
            v: unquote(attrs["label"]) for v, attrs in self.node_attributes.items() if "label" in attrs
        }
        edge_labels = {
            e: unquote(attrs["label"]) for e, attrs in self.edge_attributes.items() if "label" in attrs
        }
        cfg = build_cfg(self.vertices, self.edges, labels=labels, edge_labels=edge_labels)
        return DotFunction(
            name=self.name,
            cfg=cfg,
            passthrough_attrs=dict(self.graph_attrs),
            node_attributes=self.node_attributes,
            edge_attributes=self.edge_attributes,
            invisible_edges=tuple(self.invisible),
            scope_close=self.scope_close,
        )


def function_name(raw_name: str) -> str:
    """`cluster_main`, `_main` and `main` all name function main"""
    name = raw_name
    if name.startswith(CLUSTER_PREFIX):
        name = name[len(CLUSTER_PREFIX):]
    return name.lstrip("_") or raw_name


def _token(parsed, key):
    token = parsed[key]
    return token[0] if isinstance(token, pp.ParseResults) else token


def parse_dot(text: str, dialect: Optional[Dialect] = None) -> DotDocument:
    dialect = Dialect(dialect) if dialect else detect_dialect(text)
    try:
        parsed = _GRAMMAR.parse_string(text, parse_all=True)
    except pp.ParseException as exc:
        raise DotSyntaxError(exc.msg, exc.lineno, exc.col) from exc
    if parsed["kind"].lower() != "digraph":
        raise NotADigraph(parsed["kind"])

    graph_name = _token(parsed, "name").value if "name" in parsed else ""
    body = list(parsed["body"])
    close = _token(parsed, "close").loc

    builders: List[_FunctionBuilder] = []
    if dialect == Dialect.GCC:
        loose = []
        for stmt in body:
            if isinstance(stmt, _Subgraph) and stmt.name is not None and not stmt.is_decision_cluster:
                builder = _FunctionBuilder(function_name(stmt.name.value), stmt.close)
                builder.collect(stmt.stmts, {}, top=True)
                builders.append(builder)
            else:
                loose.append(stmt)
        outer = _FunctionBuilder(graph_name or "graph", close)
        outer.collect(loose, {}, top=True)
        if outer.vertices or not builders:
            builders.append(outer)
    else:
        builder = _FunctionBuilder(graph_name or "graph", close)
        builder.collect(body, {}, top=True)
        builders.append(builder)

    clusters, decisions = [], []
    for sub in _walk_subgraphs(body):
        if sub.is_decision_cluster:
            decisions.append((sub.start, sub.close + 1))
        elif sub.name is not None and sub.name.value.startswith(CLUSTER_PREFIX):
            clusters.append((sub.name.loc, sub.name.end, text[sub.name.loc:sub.name.end]))

    functions = tuple(b.build() for b in builders)
    logger.info(
        f"Parsed {len(functions)} function(s) from {dialect.value} dot "
        f"({sum(len(f.cfg) for f in functions)} vertices)"
    )
    return DotDocument(
        text=text,
        dialect=dialect,
        functions=functions,
        graph_name=graph_name,
        cluster_names=tuple(clusters),
        decision_spans=tuple(decisions),
    )


def _walk_subgraphs(stmts):
    for stmt in stmts:
        if isinstance(stmt, _Subgraph):
            yield stmt
            yield from _walk_subgraphs(stmt.stmts)
        elif isinstance(stmt, _EdgeStmt):
            for point in stmt.points:
                if isinstance(point, _Subgraph):
                    yield point
                    yield from _walk_subgraphs(point.stmts)


def _renamed(raw: str) -> str:
    value = unquote(raw)[len(CLUSTER_PREFIX):] or "_"
    return quote_if_necessary(value)


def _line_start(text: str, loc: int) -> Tuple[int, str, bool]:
    """Start of loc's line, its indentation, and whether only whitespace precedes loc on it"""
    start = text.rfind("\n", 0, loc) + 1
    prefix = text[start:loc]
    if prefix.strip():
        return loc, "", False
    return start, prefix, True


def _removal_span(text: str, start: int, end: int) -> Tuple[int, int]:
    line_start, _, own_line = _line_start(text, start)
    if not own_line:
        line_start = start
    while end < len(text) and text[end] in " \t;":
        end += 1
    if end < len(text) and text[end] == "\n":
        end += 1
    return line_start, end


def _quoted(value: str) -> str:
    escaped = value.replace('"', '\\"')
    return f'"{escaped}"'


def decision_cluster(function_index: int, decision, indent: str) -> str:
    members = "; ".join(quote_if_necessary(v) for v in sorted(decision.members))
    return (
        f"{indent}subgraph {DECISION_CLUSTER_PREFIX}{function_index}_{decision.decision_id} {{\n"
        f"{indent}\tlabel={_quoted(decision.label)};\n"
        f"{indent}\t{members};\n"
        f"{indent}}}\n"
    )


def emit_annotated_dot(document: DotDocument, cfdgs: Sequence[Cfdg]) -> str:
    """
    The document's text with one cluster subgraph per decision inserted
    before the closing brace of its function. Pre-existing `cluster*`
    subgraphs lose the prefix and decision clusters from an earlier run
    are replaced.
    """
    if len(cfdgs) != len(document.functions):
        raise DotError(f"Got {len(cfdgs)} decision graphs for {len(document.functions)} functions")
    text = document.text
    edits: List[Tuple[int, int, str]] = []

    for start, end in document.decision_spans:
        edits.append((*_removal_span(text, start, end), ""))
    for start, end, raw in document.cluster_names:
        edits.append((start, end, _renamed(raw)))

    for index, (function, cfdg) in enumerate(zip(document.functions, cfdgs)):
        for decision in cfdg.decisions:
            for vertex in sorted(decision.members):
                if vertex not in function.cfg:
                    raise DecisionVertexMissing(vertex, function.name)
        if not cfdg.decisions:
            continue
        at, indent, own_line = _line_start(text, function.scope_close)
        clusters = sorted(cfdg.decisions, key=lambda d: d.decision_id)
        block = "".join(decision_cluster(index, d, indent + "\t") for d in clusters)
        edits.append((at, at, block if own_line else "\n" + block))

    # from the end of the text backwards, so pending offsets stay valid
    for start, end, replacement in sorted(edits, key=lambda e: (e[0], e[1]), reverse=True):
        text = text[:start] + replacement + text[end:]
    logger.info(f"Annotated {sum(len(c.decisions) for c in cfdgs)} decision(s)")
    return text


def document_from_cfg(cfg: Cfg, name: str = "cfg") -> DotDocument:
    """A generic-dialect dot document for cfg"""
    lines = [f"digraph {quote_if_necessary(name)} {{", "\tnode [shape=box];"]
    for vertex in cfg.vertices:
        label = cfg.labels.get(vertex)
        attrs = f" [label={_quoted(label)}]" if label is not None and label != vertex else ""
        lines.append(f"\t{quote_if_necessary(vertex)}{attrs};")
    for tail, head in cfg.edges:
        label = cfg.edge_labels.get((tail, head))
        attrs = f" [label={_quoted(label)}]" if label else ""
        lines.append(f"\t{quote_if_necessary(tail)} -> {quote_if_necessary(head)}{attrs};")
    lines.append("}")
    return parse_dot("\n".join(lines) + "\n", Dialect.GENERIC)
