"""
Error hierarchy for the CFDG toolkit.
Services raise these; management commands translate them into CommandError
with the documented exit codes.
"""


class CfdgError(Exception):
    """Base class for every error raised by core.services"""


# Graph model

class GraphError(CfdgError):
    pass


class OutdegreeViolation(GraphError):
    def __init__(self, vertex, successors):
        self.vertex = vertex
        self.successors = tuple(sorted(successors))
        super().__init__(
            f"Vertex {vertex!r} has {len(self.successors)} distinct successors "
            f"({', '.join(self.successors)}); a CFG allows at most 2"
        )


class DanglingEdge(GraphError):
    def __init__(self, tail, head):
        self.tail = tail
        self.head = head
        super().__init__(f"Edge {tail!r} -> {head!r} references a vertex that does not exist")


class NoUniqueEntry(GraphError):
    def __init__(self, entries):
        self.entries = tuple(sorted(entries))
        found = ", ".join(self.entries) if self.entries else "none"
        super().__init__(f"Expected exactly one entry vertex, found {found}")


class NoExit(GraphError):
    def __init__(self):
        super().__init__("Graph has no exit vertex (no vertex with outdegree 0)")


class Disconnected(GraphError):
    def __init__(self, unreachable):
        self.unreachable = tuple(sorted(unreachable))
        super().__init__(
            f"Graph is not weakly connected; {len(self.unreachable)} vertices are cut off "
            f"(e.g. {', '.join(self.unreachable[:5])})"
        )


class UnknownVertex(GraphError):
    def __init__(self, vertex):
        self.vertex = vertex
        super().__init__(f"Unknown vertex {vertex!r}")


# Dot files

class DotError(CfdgError):
    pass


class DotSyntaxError(DotError):
    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class NotADigraph(DotError):
    def __init__(self, kind):
        super().__init__(f"Expected a 'digraph', found '{kind}'")


class DecisionVertexMissing(DotError):
    def __init__(self, vertex, function):
        self.vertex = vertex
        self.function = function
        super().__init__(f"Decision vertex {vertex!r} is not present in function {function!r}")


# Traces

class TraceError(CfdgError):
    pass


class TraceSyntaxError(TraceError):
    def __init__(self, message, line, column):
        self.line = line
        self.column = column
        super().__init__(f"line {line}, column {column}: {message}")


class RunValidationError(TraceError):
    reason = "invalid run"

    def __init__(self, run_name, position, vertex=None):
        self.run_name = run_name
        self.position = position
        self.vertex = vertex
        where = f" ({vertex!r})" if vertex is not None else ""
        super().__init__(f"run {run_name!r}: {self.reason} at position {position}{where}")


class NotAtEntry(RunValidationError):
    reason = "does not start at an entry vertex"


class NotAtExit(RunValidationError):
    reason = "does not end at an exit vertex"


class DanglingStep(RunValidationError):
    reason = "no edge leads to this vertex"


# Expressions

class ExpressionError(CfdgError):
    pass


class ExpressionSyntaxError(ExpressionError):
    def __init__(self, message, text, position):
        self.text = text
        self.position = position
        self.message = message
        super().__init__(f"{message} at position {position}\n  {text}\n  {' ' * position}^")


class IncompleteAssignment(ExpressionError):
    def __init__(self, missing):
        self.missing = tuple(missing)
        super().__init__(f"Assignment is missing a value for: {', '.join(self.missing)}")


class TooManySymbols(ExpressionError):
    def __init__(self, count, limit):
        self.count = count
        self.limit = limit
        super().__init__(f"Expression has {count} symbols; at most {limit} are supported here")
