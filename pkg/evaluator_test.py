import unittest
from collections import namedtuple
from typing import Optional, Sequence

from errors import StuckError
from evaluator import Execstate, MiniCSemantics, sem_minic
from library import load_minic
from linker import symbol_table
from mem import IntVal, MemoryState, Ptr, UNDEF, Value
from mparser import parse_minic
from sem import (CQuery, CReply, FunctionEnv, SkipEnv, Signature, Typ, Trace, init_memory,
                 parse_signature, run_trace)

Case = namedtuple("Case", ["source", "expected"])


def call(lts: MiniCSemantics, name: str, args: Sequence[Value],
         m: Optional[MemoryState] = None) -> CQuery:
    symbol = lts.se.lookup(name)
    assert symbol is not None and symbol.sg is not None
    return CQuery(Ptr(symbol.block, 0), symbol.sg, tuple(args),
                  m if m is not None else init_memory(lts.se))


class EvaluatorTest(unittest.TestCase):
    def _run(self, source: str, name: str = "f", args: Sequence[Value] = ()) -> Trace:
        lts = sem_minic(parse_minic(source))
        return run_trace(lts, call(lts, name, args), SkipEnv(), 10000)

    def _result(self, source: str, args: Sequence[Value] = ()) -> Value:
        final = self._run(source, args=args).final()
        assert isinstance(final, CReply)
        return final.res

    def test_eval_integer_expression(self) -> None:
        tests = [
            Case("5", 5),
            Case("-5", -5),
            Case("5 + 5 + 5 - 10", 5),
            Case("x + 1", 8),
            Case("x ^ 42", 45),
            Case("x - -3", 10),
            Case("-x", -7),
            Case("x == 7", 1),
            Case("x == 8", 0),
            Case("x < 8", 1),
            Case("8 < x", 0),
            Case("(x < 8) + (x == 7)", 2),
            Case("g + x", 50),
            Case("a[1] + a[0]", 3),
            Case("*&x", 7)]

        for test in tests:
            source = f"""int g = 43;
                         int a[2] = {{1, 2}};
                         int f(int x) {{ return {test.source}; }}"""
            self.assertEqual(self._result(source, [IntVal(7)]), IntVal(test.expected))

    def test_integers_wrap(self) -> None:
        source = "int f(int x) { return x + 1; }"
        self.assertEqual(self._result(source, [IntVal(2 ** 63 - 1)]), IntVal(-2 ** 63))

    def test_while_and_if(self) -> None:
        source = """int f(int n) {
                      register int sum;
                      int k;
                      sum = 0;
                      k = 0;
                      while (k < n) {
                        k = k + 1;
                        if (k == 3) { } else { sum = sum + k; }
                      }
                      return sum;
                    }"""
        self.assertEqual(self._result(source, [IntVal(5)]), IntVal(12))

    def test_falling_off_the_end_returns_undef(self) -> None:
        self.assertEqual(self._result("void f() { }"), UNDEF)

    def test_stores_through_pointers(self) -> None:
        source = """int g;
                    int f() {
                      int x;
                      ptr p;
                      p = &x;
                      *p = 5;
                      p = &g;
                      *p = x + 1;
                      return x;
                    }"""
        trace = self._run(source)
        final = trace.final()
        assert isinstance(final, CReply)
        self.assertEqual(final.res, IntVal(5))
        lts = sem_minic(parse_minic(source))
        self.assertEqual(final.m.contents(lts.se.block_of("g"), 0), IntVal(6))

    def test_locals_are_freed_and_registers_take_no_memory(self) -> None:
        Case2 = namedtuple("Case2", ["source", "blocks"])
        tests = [
            Case2("int f(int x) { int y; y = x; return y; }", 2),
            Case2("int f(register int x) { register int y; y = x; return y; }", 0)]

        for test in tests:
            lts = sem_minic(parse_minic(test.source))
            q = call(lts, "f", [IntVal(1)])
            final = run_trace(lts, q, SkipEnv(), 100).final()
            assert isinstance(final, CReply)
            self.assertEqual(final.res, IntVal(1))
            self.assertEqual(final.m.next_block - q.m.next_block, test.blocks)
            for b in range(q.m.next_block, final.m.next_block):
                self.assertEqual(final.m.positions(b), [])

    def test_internal_calls(self) -> None:
        source = """int twice(int x) { return x + x; }
                    int f(int x) {
                      int y;
                      y = twice(x);
                      y = twice(y);
                      return y;
                    }"""
        trace = self._run(source, args=[IntVal(3)])
        self.assertEqual(trace.outgoing(), [])
        final = trace.final()
        assert isinstance(final, CReply)
        self.assertEqual(final.res, IntVal(12))

    def test_external_call_of_client(self) -> None:
        lts = sem_minic(load_minic("client.mc"))
        q = call(lts, "request", [IntVal(11)])
        trace = run_trace(lts, q, SkipEnv(), 1000)
        outgoing = trace.outgoing()
        self.assertEqual(len(outgoing), 1)
        oq = outgoing[0]
        assert isinstance(oq, CQuery)
        self.assertEqual(lts.se.function_name(oq.vf), "encrypt")
        self.assertEqual(oq.sg, parse_signature("(int, ptr) -> void"))
        self.assertEqual(oq.args, (IntVal(11), Ptr(lts.se.block_of("process"), 0)))
        final = trace.final()
        assert isinstance(final, CReply)
        self.assertEqual(final.res, IntVal(11))

    def test_memoized_sum(self) -> None:
        lts = sem_minic(load_minic("sum_f.mc"))

        def g(c):  # type: ignore
            n = c.args[0].value
            return IntVal(n * (n + 1) // 2), c.m

        env = FunctionEnv({"g": g})
        first = run_trace(lts, call(lts, "f", [IntVal(5)]), env, 1000)
        self.assertEqual(len(first.outgoing()), 1)
        final = first.final()
        assert isinstance(final, CReply)
        self.assertEqual(final.res, IntVal(15))
        self.assertEqual(final.m.contents(lts.se.block_of("memoized"), 40), IntVal(15))

        second = run_trace(lts, call(lts, "f", [IntVal(5)], final.m), env, 1000)
        self.assertEqual(second.outgoing(), [])
        self.assertEqual(second.final().res, IntVal(15))  # type: ignore

    def test_accepts(self) -> None:
        lts = sem_minic(parse_minic("int f(int x) { return x; }"))
        f = Ptr(lts.se.block_of("f"), 0)
        m = init_memory(lts.se)
        sg = Signature((Typ.INT,), Typ.INT)
        Case2 = namedtuple("Case2", ["query", "expected"])
        tests = [
            Case2(CQuery(f, sg, (IntVal(1),), m), True),
            Case2(CQuery(f, sg, (UNDEF,), m), True),
            Case2(CQuery(f, Signature((Typ.PTR,), Typ.INT), (IntVal(1),), m), False),
            Case2(CQuery(f, sg, (), m), False),
            Case2(CQuery(f, sg, (Ptr(1, 0),), m), False),
            Case2(CQuery(Ptr(f.block, 8), sg, (IntVal(1),), m), False),
            Case2(CQuery(IntVal(0), sg, (IntVal(1),), m), False)]

        for test in tests:
            self.assertEqual(lts.accepts(test.query), test.expected)

    def test_stuck_programs(self) -> None:
        tests = [
            "int f(ptr p) { return p == 1; }",
            "int f(ptr p) { return p + 1; }",
            "int f(ptr p) { if (p) { } return 0; }",
            "int f(int x) { return *x; }",
            "int f(ptr p) { *p = 1; return 0; }",
            "const int k = 1; int f(ptr p) { p = &k; *p = 2; return 0; }"]

        for source in tests:
            lts = sem_minic(parse_minic(source))
            symbol = lts.se.lookup("f")
            assert symbol is not None and symbol.sg is not None
            m = init_memory(lts.se)
            arg: Value = IntVal(0) if symbol.sg.params[0] == Typ.INT else \
                Ptr(lts.se.block_of("f"), 0)
            with self.assertRaises(StuckError):
                run_trace(lts, CQuery(Ptr(symbol.block, 0), symbol.sg, (arg,), m), SkipEnv(), 100)

    def test_one_statement_per_step(self) -> None:
        lts = sem_minic(parse_minic("int f(register int x) { x = x + 1; x = x + 1; return x; }"))
        s = lts.initial_state(call(lts, "f", [IntVal(0)]))
        s = lts.step(s)
        assert isinstance(s, Execstate)
        self.assertEqual(len(s.kont), 3)
        s = lts.step(s)
        assert isinstance(s, Execstate)
        self.assertEqual(len(s.kont), 2)
        self.assertEqual(s.frame.env.get("x"), IntVal(1))

    def test_symbol_table_order(self) -> None:
        se = symbol_table([parse_minic("int a; extern int h(int); int f() { return a; } int b;")])
        self.assertEqual([s.name for s in se.symbols()], ["a", "f", "b", "h"])
        self.assertEqual(se.block_of("h"), 4)
