"""
Fixtures and hypothesis strategies shared by the test modules
"""

from pathlib import Path

from hypothesis import strategies as st

from core.services.expr_harness import Cond, Op, OpKind
from core.services.graph_core import build_cfg

DATA_DIR = Path(__file__).resolve().parent / "data"

AND_THEN_VERTICES = ["x0", "a", "b", "x1", "ret"]
AND_THEN_EDGES = [("x0", "a"), ("a", "b"), ("a", "ret"), ("b", "x1"), ("b", "ret"), ("x1", "ret")]

AND_OR_VERTICES = ["x0", "a", "b", "c", "T", "F", "x1", "ret"]
AND_OR_EDGES = [
    ("x0", "a"),
    ("a", "b"),
    ("a", "c"),
    ("b", "T"),
    ("b", "c"),
    ("c", "T"),
    ("c", "F"),
    ("T", "x1"),
    ("F", "x1"),
    ("x1", "ret"),
]

GENERIC_FIXTURES = ["and_then.dot", "and_or.dot", "sequential_ifs.dot", "while_loop.dot", "or_else.dot"]
COMPILER_FIXTURES = ["gcc_while.dot", "gcc_two_functions.dot", "clang_if.dot", "clang_loop.dot"]


def fixture_path(name: str) -> str:
    return str(DATA_DIR / name)


def read_fixture(name: str) -> str:
    return (DATA_DIR / name).read_text(encoding="utf-8")


def and_then_cfg():
    return build_cfg(AND_THEN_VERTICES, AND_THEN_EDGES)


def and_or_cfg():
    return build_cfg(AND_OR_VERTICES, AND_OR_EDGES)


@st.composite
def small_cfgs(draw, max_vertices=8):
    """
    Random graphs with outdegree <= 2 whose vertices are all reachable from
    v0, the only vertex without predecessors
    """
    count = draw(st.integers(min_value=1, max_value=max_vertices))
    vertices = [f"v{i}" for i in range(count)]
    successors = {v: [] for v in vertices}
    for index in range(1, count):
        open_tails = [v for v in vertices[:index] if len(successors[v]) < 2]
        tail = draw(st.sampled_from(open_tails))
        successors[tail].append(vertices[index])
    extra = draw(
        st.lists(
            st.tuples(st.integers(0, count - 1), st.integers(1, max(count - 1, 1))),
            max_size=count,
        )
    )
    for tail_index, head_index in extra:
        if head_index >= count:
            continue
        tail, head = vertices[tail_index], vertices[head_index]
        if len(successors[tail]) < 2 and head not in successors[tail]:
            successors[tail].append(head)
    edges = [(tail, head) for tail in vertices for head in successors[tail]]
    return build_cfg(vertices, edges)


@st.composite
def expressions(draw, max_conditions=4):
    """Expression trees over all five operators with distinct symbols a, b, c, ..."""
    count = draw(st.integers(min_value=1, max_value=max_conditions))
    names = iter("abcdefgh"[:count])

    def build(size):
        if size == 1:
            return Cond(next(names), draw(st.booleans()))
        split = draw(st.integers(min_value=1, max_value=size - 1))
        kind = draw(st.sampled_from(list(OpKind)))
        left = build(split)
        return Op(kind, left, build(size - split))

    return build(count)
