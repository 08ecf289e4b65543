import networkx as nx
from django.test import SimpleTestCase

from core.exceptions import DecisionVertexMissing, DotSyntaxError, NotADigraph
from core.services.decision_inference import create_cfdg
from core.services.dot_codec import (
    Dialect,
    detect_dialect,
    document_from_cfg,
    emit_annotated_dot,
    function_name,
    parse_dot,
    quote_if_necessary,
    unquote,
)
from core.services.graph_core import Cfdg, Decision
from core.tests.support import AND_THEN_EDGES, COMPILER_FIXTURES, GENERIC_FIXTURES, and_then_cfg, read_fixture


def as_networkx(cfg):
    graph = nx.DiGraph()
    graph.add_nodes_from(cfg.vertices)
    graph.add_edges_from(cfg.edges)
    return graph


def annotate(text):
    document = parse_dot(text)
    return emit_annotated_dot(document, [create_cfdg(f.cfg)[0] for f in document.functions])


class DialectTests(SimpleTestCase):
    def test_gcc_label(self):
        self.assertEqual(detect_dialect('n [label="<bb 4>:"];'), Dialect.GCC)
        self.assertEqual(detect_dialect(read_fixture("gcc_while.dot")), Dialect.GCC)

    def test_clang_label(self):
        self.assertEqual(detect_dialect('n [label="%24:"];'), Dialect.CLANG)
        self.assertEqual(detect_dialect(read_fixture("clang_loop.dot")), Dialect.CLANG)

    def test_generic_fallback(self):
        for name in GENERIC_FIXTURES:
            self.assertEqual(detect_dialect(read_fixture(name)), Dialect.GENERIC, name)


class ParseDotTests(SimpleTestCase):
    def test_and_then(self):
        document = parse_dot(read_fixture("and_then.dot"))
        self.assertEqual(len(document.functions), 1)
        cfg = document.functions[0].cfg
        self.assertEqual(set(cfg.edges), set(AND_THEN_EDGES))
        self.assertEqual(cfg.labels["x1"], "x = 1")
        self.assertEqual(cfg.edge_labels[("a", "b")], "T")
        self.assertTrue(nx.is_isomorphic(as_networkx(cfg), as_networkx(and_then_cfg())))

    def test_gcc_function_subgraph(self):
        document = parse_dot(read_fixture("gcc_while.dot"))
        self.assertEqual(document.dialect, Dialect.GCC)
        self.assertEqual([f.name for f in document.functions], ["main"])
        function = document.functions[0]
        self.assertEqual(len(function.cfg), 7)
        self.assertEqual(len(function.cfg.edges), 8)
        self.assertEqual(function.invisible_edges, (("fn_0_basic_block_0", "fn_0_basic_block_1"),))
        self.assertEqual(function.cfg.entries, {"fn_0_basic_block_0"})
        self.assertEqual(function.cfg.exits, {"fn_0_basic_block_1"})
        back_edge = function.edge_attributes[("fn_0_basic_block_3", "fn_0_basic_block_4")]
        self.assertEqual(unquote(back_edge["style"]), "dotted,bold")
        self.assertEqual(back_edge["color"], "blue")
        self.assertIn("<bb\\ 4\\>", function.cfg.labels["fn_0_basic_block_4"])

    def test_clang_ports(self):
        document = parse_dot(read_fixture("clang_if.dot"))
        self.assertEqual(document.dialect, Dialect.CLANG)
        self.assertEqual(document.graph_name, "CFG for 'check' function")
        cfg = document.functions[0].cfg
        self.assertEqual(len(cfg), 4)
        self.assertEqual(len(cfg.condition_vertices), 2)

    def test_edge_defaults_and_comments(self):
        text = (
            "// leading comment\n"
            "digraph g {\n"
            "  /* block */ edge [color=red];\n"
            "  # hash line\n"
            "  a -> b -> c;\n"
            "  a -> c [style=invis];\n"
            "}\n"
        )
        function = parse_dot(text).functions[0]
        self.assertEqual(function.cfg.edges, (("a", "b"), ("b", "c")))
        self.assertEqual(function.edge_attributes[("a", "b")]["color"], "red")
        self.assertEqual(function.invisible_edges, (("a", "c"),))

    def test_subgraph_edge_endpoints(self):
        cfg = parse_dot("digraph g { a -> { b c }; b -> d; c -> d; }").functions[0].cfg
        self.assertEqual(cfg.successor_map["a"], ("b", "c"))

    def test_empty_digraph(self):
        document = parse_dot(read_fixture("empty.dot"))
        self.assertEqual(len(document.functions), 1)
        self.assertEqual(len(document.functions[0].cfg), 0)

    def test_undirected_graph_rejected(self):
        with self.assertRaises(NotADigraph):
            parse_dot("graph g { a -- b; }")

    def test_syntax_error_position(self):
        with self.assertRaises(DotSyntaxError) as ctx:
            parse_dot("digraph g {\n  a -> ;\n}\n")
        self.assertEqual(ctx.exception.line, 2)

    def test_quoted_ids(self):
        cfg = parse_dot(read_fixture("or_else.dot")).functions[0].cfg
        self.assertIn("then()", cfg)
        self.assertEqual(cfg.entries, {"start"})

    def test_function_name(self):
        self.assertEqual(function_name("cluster_main"), "main")
        self.assertEqual(function_name("_main"), "main")
        self.assertEqual(function_name("cluster"), "cluster")

    def test_quoting(self):
        self.assertEqual(quote_if_necessary("a1"), "a1")
        self.assertEqual(quote_if_necessary("then()"), '"then()"')
        self.assertEqual(quote_if_necessary("node"), '"node"')
        self.assertEqual(unquote('"say \\"hi\\""'), 'say "hi"')


class EmitAnnotatedDotTests(SimpleTestCase):
    def test_and_then_cluster(self):
        text = read_fixture("and_then.dot")
        document = parse_dot(text)
        cfdg, _ = create_cfdg(document.functions[0].cfg)
        annotated = emit_annotated_dot(document, [cfdg])
        self.assertEqual(annotated.count("subgraph cluster_decision_0_0 {"), 1)
        self.assertIn('label="Decision 0";', annotated)
        self.assertIn("a; b;", annotated)
        self.assertTrue(annotated.startswith(text[: text.rindex("}")]))

    def test_and_or_cluster_has_three_nodes(self):
        annotated = annotate(read_fixture("and_or.dot"))
        self.assertIn("subgraph cluster_decision_0_0 {", annotated)
        self.assertIn("a; b; c;", annotated)

    def test_round_trip_keeps_graph(self):
        for name in GENERIC_FIXTURES + COMPILER_FIXTURES + ["empty.dot"]:
            original = parse_dot(read_fixture(name))
            again = parse_dot(annotate(read_fixture(name)))
            self.assertEqual(len(again.functions), len(original.functions), name)
            for before, after in zip(original.functions, again.functions):
                self.assertEqual(set(after.cfg.vertices), set(before.cfg.vertices), name)
                self.assertEqual(set(after.cfg.edges), set(before.cfg.edges), name)
                self.assertEqual(after.cfg.labels, before.cfg.labels, name)

    def test_annotation_is_idempotent(self):
        for name in GENERIC_FIXTURES + COMPILER_FIXTURES:
            once = annotate(read_fixture(name))
            self.assertEqual(annotate(once), once, name)

    def test_gcc_clusters_renamed(self):
        annotated = annotate(read_fixture("gcc_while.dot"))
        self.assertIn("subgraph _main {", annotated)
        self.assertIn("subgraph _0_1 {", annotated)
        self.assertNotIn('"cluster_main"', annotated)
        self.assertIn("subgraph cluster_decision_0_0 {", annotated)
        self.assertIn("fn_0_basic_block_4; fn_0_basic_block_5;", annotated)
        self.assertEqual(parse_dot(annotated).functions[0].name, "main")

    def test_empty_digraph_unchanged(self):
        text = read_fixture("empty.dot")
        self.assertEqual(annotate(text), text)

    def test_missing_vertex(self):
        document = parse_dot(read_fixture("and_then.dot"))
        other = document_from_cfg(and_then_cfg()).functions[0].cfg
        ghost = Cfdg(
            other,
            (Decision(frozenset({"a", "b"}), "a"),),
        )
        broken = parse_dot("digraph g { x0 -> y; }")
        with self.assertRaises(DecisionVertexMissing):
            emit_annotated_dot(broken, [ghost])
        self.assertIn("cluster_decision", emit_annotated_dot(document, [ghost]))

    def test_document_from_cfg(self):
        document = document_from_cfg(and_then_cfg(), name="and_then")
        self.assertEqual(document.dialect, Dialect.GENERIC)
        self.assertEqual(document.graph_name, "and_then")
        self.assertEqual(set(document.functions[0].cfg.edges), set(AND_THEN_EDGES))


TAB_INDENTED_DOT = "digraph g {\n\tx0 -> a;\n\ta -> b;\n\ta -> ret;\n\tb -> x1;\n\tb -> ret;\n\tx1 -> ret;\n}\n"

SPACE_INDENTED_DOT = """digraph g {
  subgraph /* kept */ cluster_foo {
    x0 -> a;
  }
  subgraph cluster_bar /* note */ {
    ret;
  }
  a -> b;
  a -> ret;
  b -> ret;
}
"""


class SourceOffsetTests(SimpleTestCase):
    def assert_same_graph(self, text, annotated):
        before, after = parse_dot(text), parse_dot(annotated)
        self.assertEqual(len(after.functions), len(before.functions))
        for old, new in zip(before.functions, after.functions):
            self.assertEqual(old.name, new.name)
            self.assertEqual(set(new.cfg.vertices), set(old.cfg.vertices))
            self.assertEqual(set(new.cfg.edges), set(old.cfg.edges))

    def test_tab_indented_clusters_inside_graph(self):
        annotated = annotate(TAB_INDENTED_DOT)
        self.assertTrue(
            annotated.endswith(
                '\tx1 -> ret;\n\tsubgraph cluster_decision_0_0 {\n\t\tlabel="Decision 0";\n\t\ta; b;\n\t}\n}\n'
            )
        )
        self.assert_same_graph(TAB_INDENTED_DOT, annotated)

    def test_space_indented_clusters_renamed_in_place(self):
        annotated = annotate(SPACE_INDENTED_DOT)
        self.assertIn("  subgraph /* kept */ _foo {\n", annotated)
        self.assertIn("  subgraph _bar /* note */ {\n", annotated)
        self.assertNotIn("cluster_foo", annotated)
        self.assertNotIn("cluster_bar", annotated)
        self.assert_same_graph(SPACE_INDENTED_DOT, annotated)

    def test_generated_dot_round_trip(self):
        text = document_from_cfg(and_then_cfg(), name="and_then").text
        annotated = annotate(text)
        self.assertEqual(annotated.count("subgraph cluster_decision_"), 1)
        self.assert_same_graph(text, annotated)
        self.assertEqual(annotate(annotated), annotated)

    def test_gcc_functions_split(self):
        document = parse_dot(read_fixture("gcc_two_functions.dot"))
        self.assertEqual(document.dialect, Dialect.GCC)
        self.assertEqual([f.name for f in document.functions], ["helper", "main"])
        helper, main = document.functions
        self.assertEqual(len(helper.cfg), 5)
        self.assertEqual(helper.cfg.condition_vertices, ("fn_0_basic_block_2",))
        self.assertEqual(set(main.cfg.edges), {
            ("fn_1_basic_block_0", "fn_1_basic_block_2"),
            ("fn_1_basic_block_2", "fn_1_basic_block_1"),
        })
        self.assertLess(helper.scope_close, main.scope_close)

    def test_gcc_functions_annotated(self):
        text = read_fixture("gcc_two_functions.dot")
        annotated = annotate(text)
        self.assertIn("subgraph _helper {", annotated)
        self.assertIn("subgraph _main {", annotated)
        self.assertEqual(annotated.count("subgraph cluster_decision_"), 1)
        cluster = annotated.index("subgraph cluster_decision_0_0 {")
        self.assertLess(cluster, annotated.index("subgraph _main {"))
        self.assert_same_graph(text, annotated)
        self.assertEqual(annotate(annotated), annotated)
