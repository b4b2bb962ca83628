import unittest
from collections import namedtuple

import mast
from compiler import check_pass, random_plan
from config import Config
from constprop import analyse, const_prop
from evaluator import sem_minic
from library import load_minic
from linker import symbol_table
from mparser import parse_minic
from promotion import local_promotion
from sem import ro_valid, run_trace, trace_equal


def _returned(source: str) -> mast.Expression:
    folded = const_prop(local_promotion(parse_minic(source)).module).module
    fn = folded.function("f")
    assert fn is not None
    last = fn.body.statements[-1]
    assert isinstance(last, mast.ReturnStatement) and last.return_value is not None
    return last.return_value


class ConstPropTest(unittest.TestCase):
    def test_analysis(self) -> None:
        analysis = analyse(load_minic("double_key.mc"))
        self.assertEqual(analysis.tables, {"key": [42]})
        self.assertEqual(analysis.constant("key"), 42)
        self.assertFalse(analysis.escaped["double_key"])

        table = analyse(parse_minic("const int t[3] = {1, 2}; int f() { return 0; }"))
        self.assertEqual(table.tables["t"], [1, 2, 0])
        self.assertIsNone(table.constant("t"))
        self.assertEqual(table.element("t", 1), 2)
        self.assertIsNone(table.element("t", 3))

    def test_escape_analysis(self) -> None:
        Case = namedtuple("Case", ["source", "escaped"])
        tests = [
            Case("extern void g(ptr); void f() { int a; g(&a); }", True),
            Case("void f() { int a; ptr p; p = &a; }", True),
            Case("int f() { int a; *&a = 3; return *&a; }", False),
            Case("int g; extern void h(ptr); void f() { h(&g); }", False)]

        for test in tests:
            self.assertEqual(analyse(parse_minic(test.source)).escaped["f"], test.escaped, test.source)

    def test_folding(self) -> None:
        Case = namedtuple("Case", ["source", "expected"])
        tests = [
            Case("int f() { int a; a = 2; return a + 3; }", 5),
            Case("const int k = 7; int f() { return k ^ 1; }", 6),
            Case("const int t[2] = {4, 9}; int f() { return t[1] - t[0]; }", 5),
            Case("int f(int c) { int a; if (c) { a = 1; } else { a = 1; } return a; }", 1),
            Case("int f() { int a; *&a = 4; return *&a + 1; }", 5),
            Case("extern void g(ptr); int k; int f() { int a; a = 3; g(&k); return a; }", 3),
            Case("const int key = 42; extern void foo(ptr); int f() { int a; a = key; foo(&key); return a + key; }",
                 84)]

        for test in tests:
            value = _returned(test.source)
            assert isinstance(value, mast.IntegerLiteral), test.source
            self.assertEqual(value.value, test.expected)

    def test_facts_that_are_not_kept(self) -> None:
        tests = [
            "int f(int n) { int i; i = 0; while (i < n) { i = i + 1; } return i; }",
            "int f(int c) { int a; a = 1; if (c) { a = 2; } return a; }",
            "extern void g(ptr); int f() { int a; a = 3; g(&a); return a; }",
            "int g; int f() { return g; }"]

        for source in tests:
            self.assertIsInstance(_returned(source), mast.Identifier, source)

    def test_const_prop_simulates(self) -> None:
        for name, entries in [("double_key.mc", ["double_key"]), ("sum_f.mc", ["f"]), ("client.mc", ["request"])]:
            program = load_minic(name)
            se = symbol_table([program])
            plan = Config().plan(random_plan(se, entries, seed=5, size=4))
            report = check_pass(program, "const_prop", plan, se)
            self.assertTrue(report.ok, report.summary())
            self.assertEqual(report.name, "const_prop: ro ∘ c_injp")

    def test_folded_programs_have_the_same_traces(self) -> None:
        runs = 0
        for name, entry in [("double_key.mc", "double_key"), ("sum_f.mc", "f")]:
            promoted = local_promotion(load_minic(name)).module
            se = symbol_table([promoted])
            source = sem_minic(promoted, se, "source")
            folded = sem_minic(const_prop(promoted).module, se, "const_prop")
            for item in random_plan(se, [entry], seed=13, size=100):
                self.assertTrue(ro_valid(se, item.query.m), item.label)
                expected = run_trace(source, item.query, item.env, 10000)
                self.assertTrue(trace_equal(run_trace(folded, item.query, item.env, 10000), expected), item.label)
                runs += 1
        self.assertEqual(runs, 200)
