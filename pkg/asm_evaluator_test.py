import unittest
from collections import namedtuple
from typing import Sequence

from hypothesis import given
from hypothesis import strategies as st

from asm import parse_miniasm
from asm_evaluator import MiniAsmSemantics, initial_regs, sem_miniasm
from errors import StuckError
from library import load_miniasm, load_minic
from linker import symbol_table
from mem import IntVal, Ptr, UNDEF, Value
from sem import AQuery, AReply, FunctionEnv, Reg, SkipEnv, Trace, init_memory, run_trace


def asm_call(lts: MiniAsmSemantics, name: str, args: Sequence[Value],
             rbx: Value = UNDEF) -> AQuery:
    m = init_memory(lts.se)
    m, sp = m.alloc(0, 16)
    m, ret = m.alloc(0, 0)
    rs = initial_regs(Ptr(lts.se.block_of(name), 0), Ptr(sp, 0), Ptr(ret, 0), tuple(args))
    return AQuery(rs.set(Reg.RBX, rbx), m)


class AsmEvaluatorTest(unittest.TestCase):
    def _run(self, source: str, name: str, args: Sequence[Value]) -> Trace:
        lts = sem_miniasm(parse_miniasm(source))
        return run_trace(lts, asm_call(lts, name, args), SkipEnv(), 1000)

    def _rax(self, source: str, args: Sequence[Value] = ()) -> Value:
        final = self._run(source, "f", args).final()
        assert isinstance(final, AReply)
        return final.rs[Reg.RAX]

    def test_arithmetic(self) -> None:
        Case = namedtuple("Case", ["body", "expected"])
        tests = [
            Case("Pconst 5 RAX", IntVal(5)),
            Case("Pmov RDI RAX\n  Pxori 42 RAX", IntVal(45)),
            Case("Pconst 2 RAX\n  Padd RDI RAX", IntVal(9)),
            Case("Pmov RDI RAX\n  Pconst 2 RSI\n  Psub RSI RAX", IntVal(5)),
            Case("Plea -1(RDI) RAX", IntVal(6)),
            Case("Pmov RDI RAX\n  Pxor RAX RAX", IntVal(0)),
            Case("Pmov g[1] RAX", IntVal(9)),
            Case("Pmov RDI g\n  Pmov g RAX", IntVal(7)),
            Case("Plea g[1] RAX\n  Pmov 0(RAX) RAX", IntVal(9)),
            Case("Plea g RAX\n  Pconst 8 RSI\n  Padd RSI RAX\n  Pmov 0(RAX) RAX", IntVal(9))]

        for test in tests:
            source = f""".global g 2 4 9
                         .func f(int) -> int
                           {test.body}
                           Pret
                         .end"""
            self.assertEqual(self._rax(source, [IntVal(7)]), test.expected)

    def test_conditional_jumps(self) -> None:
        Case = namedtuple("Case", ["compare", "jump", "expected"])
        tests = [
            Case("Pcmp RSI RDI", "Pje", 0),
            Case("Pcmp RSI RDI", "Pjne", 1),
            Case("Pcmp RSI RDI", "Pjl", 1),
            Case("Pcmp RDI RSI", "Pjl", 0),
            Case("Ptest RDI RDI", "Pjne", 1),
            Case("Ptest RDI RSI", "Pje", 0)]

        for test in tests:
            source = f""".func f(int, int) -> int
                           {test.compare}
                           {test.jump} yes
                           Pconst 0 RAX
                           Pret
                         yes:
                           Pconst 1 RAX
                           Pret
                         .end"""
            self.assertEqual(self._rax(source, [IntVal(3), IntVal(5)]), IntVal(test.expected))

    def test_internal_call_and_frames(self) -> None:
        source = """.func double(int) -> int
                      Pmov RDI RAX
                      Padd RDI RAX
                      Pret
                    .end
                    .func f(int) -> int
                      Pallocframe 16 8 0
                      Pcall double
                      Pmov RAX RDI
                      Pcall double
                      Pfreeframe 16 8 0
                      Pret
                    .end"""
        lts = sem_miniasm(parse_miniasm(source))
        q = asm_call(lts, "f", [IntVal(3)])
        trace = run_trace(lts, q, SkipEnv(), 100)
        self.assertEqual(trace.outgoing(), [])
        final = trace.final()
        assert isinstance(final, AReply)
        self.assertEqual(final.rs[Reg.RAX], IntVal(12))
        self.assertEqual(final.rs[Reg.RSP], q.rs[Reg.RSP])
        self.assertEqual(final.rs[Reg.PC], q.rs[Reg.RA])
        frame = q.m.next_block
        self.assertEqual(final.m.positions(frame), [])

    def test_server_calls_back_with_masked_value(self) -> None:
        se = symbol_table([load_minic("client.mc"), load_miniasm("server.ma")])
        lts = sem_miniasm(load_miniasm("server.ma"), se)
        process = Ptr(se.block_of("process"), 0)
        q = asm_call(lts, "encrypt", [IntVal(11), process], IntVal(5))
        trace = run_trace(lts, q, SkipEnv(), 100)
        outgoing = trace.outgoing()
        self.assertEqual(len(outgoing), 1)
        oq = outgoing[0]
        assert isinstance(oq, AQuery)
        self.assertEqual(oq.rs[Reg.PC], process)
        frame = q.m.next_block
        self.assertEqual(oq.rs[Reg.RDI], Ptr(frame, 8))
        self.assertEqual(oq.m.contents(frame, 8), IntVal(33))
        self.assertEqual(oq.m.contents(frame, 0), q.rs[Reg.RSP])
        final = trace.final()
        assert isinstance(final, AReply)
        self.assertEqual(final.rs[Reg.RSP], q.rs[Reg.RSP])
        self.assertEqual(final.rs[Reg.RBX], IntVal(5))

    def test_memoized_sum_in_assembly(self) -> None:
        lts = sem_miniasm(load_miniasm("sum_g.ma"))

        def f(c):  # type: ignore
            n = c.args[0].value
            return IntVal(n * (n + 1) // 2), c.m

        env = FunctionEnv({"f": f})
        for n, expected in [(0, 0), (3, 6), (10, 55)]:
            trace = run_trace(lts, asm_call(lts, "g", [IntVal(n)], IntVal(77)), env, 1000)
            final = trace.final()
            assert isinstance(final, AReply)
            self.assertEqual(final.rs[Reg.RAX], IntVal(expected))
            self.assertEqual(final.rs[Reg.RBX], IntVal(77))
            self.assertEqual(len(trace.outgoing()), 0 if n == 0 else 1)

        # The cache answers a repeated query without calling out.
        first = run_trace(lts, asm_call(lts, "g", [IntVal(4)]), env, 1000).final()
        assert isinstance(first, AReply)
        s = lts.se.block_of("s")
        self.assertEqual((first.m.contents(s, 0), first.m.contents(s, 8)), (IntVal(4), IntVal(10)))
        q = asm_call(lts, "g", [IntVal(4)])
        again = run_trace(lts, AQuery(q.rs, first.m), env, 1000)
        self.assertEqual(again.outgoing(), [])

    @given(st.integers(0, 1000), st.integers(-100, 100))
    def test_callee_save_registers_are_restored(self, n: int, saved: int) -> None:
        source = """.func h(int) -> int
                      Pallocframe 24 16 0
                      Pmov RBX 8(RSP)
                      Pmov RDI RBX
                      Padd RBX RBX
                      Pmov RBX RAX
                      Pmov 8(RSP) RBX
                      Pfreeframe 24 16 0
                      Pret
                    .end
                    .func f(int) -> int
                      Pallocframe 24 16 0
                      Pmov RBX 8(RSP)
                      Pmov RDI RBX
                      Pcall h
                      Padd RBX RAX
                      Pmov 8(RSP) RBX
                      Pfreeframe 24 16 0
                      Pret
                    .end"""
        lts = sem_miniasm(parse_miniasm(source))
        q = asm_call(lts, "f", [IntVal(n)], IntVal(saved))
        final = run_trace(lts, q, SkipEnv(), 100).final()
        assert isinstance(final, AReply)
        self.assertEqual(final.rs[Reg.RAX], IntVal(3 * n))
        self.assertEqual((final.rs[Reg.RBX], final.rs[Reg.RSP]), (IntVal(saved), q.rs[Reg.RSP]))

        server = sem_miniasm(load_miniasm("sum_g.ma"))
        q = asm_call(server, "g", [IntVal(n % 20 + 1)], IntVal(saved))
        trace = run_trace(server, q, FunctionEnv({"f": lambda c: (IntVal(0), c.m)}), 1000)
        final = trace.final()
        assert isinstance(final, AReply)
        self.assertEqual(len(trace.outgoing()), 1)
        self.assertEqual((final.rs[Reg.RBX], final.rs[Reg.RSP]), (IntVal(saved), q.rs[Reg.RSP]))

    def test_accepts(self) -> None:
        lts = sem_miniasm(load_miniasm("server.ma"))
        q = asm_call(lts, "encrypt", [IntVal(1), IntVal(2)])
        self.assertTrue(lts.accepts(q))
        self.assertFalse(lts.accepts(AQuery(q.rs.set(Reg.RA, UNDEF), q.m)))
        self.assertFalse(lts.accepts(AQuery(q.rs.set(Reg.RSP, IntVal(0)), q.m)))
        self.assertFalse(lts.accepts(AQuery(q.rs.set(Reg.PC, Ptr(lts.se.block_of("key"), 0)), q.m)))

    def test_stuck(self) -> None:
        tests = [
            ".func f(ptr) -> int\n  Pxori 1 RSP\n  Pret\n.end",
            ".func f(ptr) -> int\n  Pje out\nout:\n  Pret\n.end",
            ".func f(ptr) -> int\n  Pmov 0(RAX) RAX\n  Pret\n.end",
            ".func f(ptr) -> int\n  Pfreeframe 8 0 0\n  Pret\n.end",
            ".func f(ptr) -> int\n  Pcall RDI\n  Pret\n.end"]

        for source in tests:
            with self.assertRaises(StuckError):
                self._run(source, "f", [IntVal(1)])
