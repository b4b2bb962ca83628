import unittest
from typing import Sequence

from asm_evaluator import sem_miniasm
from compiler import check_pass, random_plan
from config import Config
from conv import atom_convention
from library import load_minic
from linker import symbol_table
from mem import IntVal, Ptr, Value
from mparser import parse_minic
from sem import AReply, CQuery, EnvStrategy, FunctionEnv, Reg, SkipEnv, init_memory, run_trace
from stacking import stack_arg_offset, stacking_codegen


def _run_compiled(source: str, args: Sequence[Value], env: EnvStrategy) -> Value:
    program = parse_minic(source)
    se = symbol_table([program])
    lts = sem_miniasm(stacking_codegen(program).module, se, "f")
    symbol = se.lookup("f")
    assert symbol is not None and symbol.sg is not None
    q = CQuery(Ptr(symbol.block, 0), symbol.sg, tuple(args), init_memory(se))
    _, aq = atom_convention("CAinjp").transport_query(q, se)
    final = run_trace(lts, aq, env, 2000).final()
    assert isinstance(final, AReply)
    return final.rs[Reg.RAX]


class StackingTest(unittest.TestCase):
    def test_frame_layout(self) -> None:
        out = stacking_codegen(parse_minic("int f(int a, int b, int c) { int x; x = a + (b + c); return x; }"))
        layout = out.matcher.layouts["f"]  # type: ignore
        self.assertEqual((layout.outgoing, layout.rbx, layout.scratch, layout.size), (0, 16, 1, 64))
        self.assertEqual(layout.slots, {"a": 24, "b": 32, "c": 40, "x": 48})
        self.assertEqual(layout.scratch_slot(0), 56)
        self.assertEqual(out.convention.string(), "wt ∘ CAinjp")

        calls = stacking_codegen(parse_minic("""extern int g(int, int, int, int);
                                                int f() { int y; y = g(1, 2, 3, 4); return y; }"""))
        self.assertEqual(calls.matcher.layouts["f"].outgoing, 2)  # type: ignore
        self.assertEqual([stack_arg_offset(k) for k in (2, 3)], [16, 24])

    def test_compiled_code_computes(self) -> None:
        source = "int f(int a, int b, int c) { int x; x = a + (b + c); return x; }"
        self.assertEqual(_run_compiled(source, [IntVal(1), IntVal(2), IntVal(3)], SkipEnv()), IntVal(6))
        loop = """int f(int n) {
                    int sum;
                    int k;
                    sum = 0;
                    k = 0;
                    while (k < n) { k = k + 1; sum = sum + k; }
                    return sum;
                  }"""
        self.assertEqual(_run_compiled(loop, [IntVal(5)], SkipEnv()), IntVal(15))

    def test_calls_pass_stack_arguments(self) -> None:
        source = """extern int g(int, int, int);
                    int f(int x) { int y; y = g(x, x + 1, x + 2); return y; }"""

        def g(c):  # type: ignore
            return IntVal(sum(a.value for a in c.args)), c.m

        self.assertEqual(_run_compiled(source, [IntVal(4)], FunctionEnv({"g": g})), IntVal(15))

    def test_addresses_of_locals_point_into_the_frame(self) -> None:
        source = "int f() { int a; ptr p; p = &a; *p = 9; return a; }"
        self.assertEqual(_run_compiled(source, [], SkipEnv()), IntVal(9))

    def test_stacking_simulates(self) -> None:
        for name, entries in [("client.mc", ["request"]), ("sum_f.mc", ["f"]), ("double_key.mc", ["double_key"])]:
            program = load_minic(name)
            se = symbol_table([program])
            plan = Config().plan(random_plan(se, entries, seed=9, size=4))
            report = check_pass(program, "stacking", plan, se)
            self.assertTrue(report.ok, report.summary())
