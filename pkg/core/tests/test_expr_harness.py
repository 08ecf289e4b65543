from django.test import SimpleTestCase
from hypothesis import given, settings
from hypothesis import strategies as st

from core.exceptions import ExpressionError, ExpressionSyntaxError, IncompleteAssignment, TooManySymbols
from core.services.coverage import Criterion, IndependenceSemantics
from core.services.expr_harness import (
    Assignment,
    Cond,
    Op,
    OpKind,
    distinct_runs,
    enumerate_runs,
    enumerate_shapes,
    evaluate_expr,
    expr_to_cfg,
    minimal_suites,
    parse_expr,
    parse_vector,
    simulate,
    symbols,
)
from core.tests.support import expressions

A, B, C = Cond("a"), Cond("b"), Cond("c")


def lowered(text):
    return expr_to_cfg(parse_expr(text))


def suite_names(suites):
    return [sorted(suite.names) for suite in suites]


class ParseExprTests(SimpleTestCase):
    def test_operators(self):
        self.assertEqual(parse_expr("a && b"), Op(OpKind.SC_AND, A, B))
        self.assertEqual(parse_expr("a | b"), Op(OpKind.OR, A, B))
        self.assertEqual(parse_expr("!a"), Cond("a", negated=True))

    def test_precedence(self):
        self.assertEqual(parse_expr("a || b && c"), Op(OpKind.SC_OR, A, Op(OpKind.SC_AND, B, C)))
        self.assertEqual(parse_expr("a & b ^ c"), Op(OpKind.AND, A, Op(OpKind.XOR, B, C)))
        self.assertEqual(parse_expr("(a || b) && c"), Op(OpKind.SC_AND, Op(OpKind.SC_OR, A, B), C))

    def test_left_associative(self):
        self.assertEqual(parse_expr("a && b && c"), Op(OpKind.SC_AND, Op(OpKind.SC_AND, A, B), C))

    def test_negation_is_pushed_to_leaves(self):
        expr = parse_expr("!(a && b)")
        self.assertEqual(expr, Op(OpKind.SC_OR, Cond("a", True), Cond("b", True)))
        self.assertEqual(str(expr), "!a || !b")

    def test_syntax_errors(self):
        for text in ["a &&", "", "a b", "(a", "a && && b"]:
            with self.subTest(text=text), self.assertRaises(ExpressionSyntaxError):
                parse_expr(text)

    def test_syntax_error_position_counts_tabs_once(self):
        with self.assertRaises(ExpressionSyntaxError) as ctx:
            parse_expr("a\tb")
        self.assertEqual(ctx.exception.position, 2)
        self.assertTrue(str(ctx.exception).endswith("\n    ^"))

    def test_symbols_in_first_occurrence_order(self):
        self.assertEqual(symbols(parse_expr("c && a || c && b")), ("c", "a", "b"))

    @settings(max_examples=200, deadline=None)
    @given(expressions())
    def test_printed_form_parses_back(self, expr):
        self.assertEqual(parse_expr(str(expr)), expr)


class ExprToCfgTests(SimpleTestCase):
    def test_short_circuit_and(self):
        result = lowered("a && b")
        self.assertEqual(result.conditions, ("c0", "c1"))
        self.assertEqual(result.branches, {"c0": ("c1", "F"), "c1": ("T", "F")})
        self.assertEqual(result.cfg.entries, {"entry"})
        self.assertEqual(result.cfg.exits, {"exit"})

    def test_short_circuit_or(self):
        result = lowered("a || b")
        self.assertEqual(result.branches, {"c0": ("T", "c1"), "c1": ("T", "F")})

    def test_non_short_circuit_operators_stay_whole(self):
        self.assertEqual(lowered("a & b").conditions, ("c0",))
        mixed = lowered("(a & b) && c")
        self.assertEqual(mixed.conditions, ("c0", "c1"))
        self.assertEqual(mixed.tests["c0"], Op(OpKind.AND, A, B))
        self.assertEqual(mixed.cfg.labels["c0"], "a & b")

    def test_numbering_width(self):
        text = " && ".join(f"x{i}" for i in range(11))
        self.assertEqual(lowered(text).conditions[:2], ("c00", "c01"))

    def test_edge_labels(self):
        cfg = lowered("a").cfg
        self.assertEqual(cfg.edge_labels[("c0", "T")], "T")
        self.assertEqual(cfg.edge_labels[("c0", "F")], "F")


class SimulateTests(SimpleTestCase):
    def setUp(self):
        self.lowered = lowered("a && b")

    def test_runs(self):
        self.assertEqual(simulate(self.lowered, {"a": True, "b": True}).path, ("entry", "c0", "c1", "T", "exit"))
        self.assertEqual(simulate(self.lowered, {"a": True, "b": False}).path, ("entry", "c0", "c1", "F", "exit"))
        self.assertEqual(simulate(self.lowered, {"a": False, "b": True}).path, ("entry", "c0", "F", "exit"))

    def test_run_name_defaults_to_vector(self):
        self.assertEqual(simulate(self.lowered, {"a": True, "b": False}).test_name, "TF")
        self.assertEqual(simulate(self.lowered, {"a": True, "b": False}, name="t7").test_name, "t7")

    def test_missing_symbol(self):
        with self.assertRaises(IncompleteAssignment) as ctx:
            simulate(self.lowered, {"a": True})
        self.assertEqual(ctx.exception.missing, ("b",))

    def test_repeated_symbol_reads_one_input(self):
        result = lowered("a && !a")
        self.assertEqual(result.symbols, ("a",))
        self.assertEqual(simulate(result, {"a": True}).path[-2], "F")

    @settings(max_examples=200, deadline=None)
    @given(expressions(), st.data())
    def test_sink_matches_evaluation(self, expr, data):
        result = expr_to_cfg(expr)
        bits = data.draw(st.lists(st.booleans(), min_size=len(result.symbols), max_size=len(result.symbols)))
        values = dict(zip(result.symbols, bits))
        sink = simulate(result, values).path[-2]
        self.assertEqual(sink, "T" if evaluate_expr(expr, values) else "F")


class EnumerationTests(SimpleTestCase):
    def test_enumerate_runs(self):
        runs = enumerate_runs(lowered("(a && b) || c"))
        self.assertEqual(len(runs), 8)
        self.assertEqual(sum(1 for run in runs.values() if run.path[-2] == "T"), 5)

    def test_symbol_limit(self):
        with self.assertRaises(TooManySymbols):
            enumerate_runs(lowered("a && b && c"), max_symbols=2)

    def test_distinct_runs_mask_unread_symbols(self):
        runs = distinct_runs(lowered("a && b"))
        self.assertEqual([run.test_name for run in runs], ["TT", "TF", "F-"])
        self.assertEqual(len(distinct_runs(lowered("(a && b) || c"))), 5)

    def test_shape_counts(self):
        self.assertEqual(len(list(enumerate_shapes(1))), 1)
        self.assertEqual(len(list(enumerate_shapes(2))), 6)
        self.assertEqual(len(list(enumerate_shapes(3))), 56)
        self.assertEqual(len(list(enumerate_shapes(2, operators=[OpKind.SC_AND]))), 2)


class ParseVectorTests(SimpleTestCase):
    def test_vector(self):
        assignment, dont_care = parse_vector("t-", ("a", "b"))
        self.assertEqual(assignment, Assignment(("a", "b"), (True, False)))
        self.assertEqual(dont_care, {"b"})
        self.assertEqual(parse_vector("10", ("a", "b"))[0].vector, "TF")

    def test_missing_symbol(self):
        with self.assertRaises(IncompleteAssignment) as ctx:
            parse_vector("T", ("a", "b"))
        self.assertEqual(ctx.exception.missing, ("b",))

    def test_bad_vectors(self):
        for text in ["TFT", "TX"]:
            with self.subTest(text=text), self.assertRaises(ExpressionError):
                parse_vector(text, ("a", "b"))


class MinimalSuitesTests(SimpleTestCase):
    def test_mcdc_for_and(self):
        suites = minimal_suites(lowered("a && b"), Criterion.MCDC)
        self.assertEqual(suite_names(suites), [["F-", "TF", "TT"]])

    def test_mcdc_sizes(self):
        for text, size in [("a || b", 3), ("(a && b) || c", 4)]:
            with self.subTest(text=text):
                suites = minimal_suites(lowered(text), Criterion.MCDC)
                self.assertTrue(suites)
                self.assertEqual({len(suite) for suite in suites}, {size})

    def test_weaker_criteria(self):
        self.assertEqual(len(minimal_suites(lowered("a"), Criterion.DC)[0]), 2)
        statement = minimal_suites(lowered("a && b"), Criterion.SC)
        self.assertEqual(suite_names(statement), [["TF", "TT"], ["F-", "TT"]])

    def test_strict_semantics_is_unsatisfiable_with_short_circuit(self):
        self.assertEqual(minimal_suites(lowered("a && b"), Criterion.MCDC, IndependenceSemantics.STRICT), [])

    def test_symbol_limit(self):
        with self.assertRaises(TooManySymbols):
            minimal_suites(lowered("a && b && c"), Criterion.MCDC, max_symbols=2)
