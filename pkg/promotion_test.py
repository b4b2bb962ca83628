import unittest

from compiler import check_pass, random_plan
from config import Config
from library import load_minic
from linker import symbol_table
from mparser import parse_minic
from promotion import local_promotion


class PromotionTest(unittest.TestCase):
    def test_unaddressed_variables_become_temporaries(self) -> None:
        program = parse_minic("""extern void g(ptr);
                                 int f(int x, int y) {
                                   int a;
                                   int b;
                                   a = x;
                                   g(&b);
                                   return a + y;
                                 }""")
        out = local_promotion(program)
        fn = out.module.function("f")
        assert fn is not None
        self.assertEqual({v.name: v.register for v in fn.variables()},
                         {"x": True, "y": True, "a": True, "b": False})
        self.assertEqual(out.convention.string(), "c_injp")
        self.assertIs(fn.body, program.function("f").body)  # type: ignore
        self.assertIn("int f(register int x, register int y) {", out.module.string())

    def test_register_variables_stay(self) -> None:
        program = parse_minic("int f(register int x) { return x; }")
        fn = local_promotion(program).module.function("f")
        assert fn is not None
        self.assertTrue(fn.params[0].register)

    def test_promotion_simulates(self) -> None:
        for name, entries, callbacks in [("client.mc", ["request"], []),
                                         ("sum_f.mc", ["f"], []),
                                         ("client_mr.mc", ["request"], [])]:
            program = load_minic(name)
            se = symbol_table([program])
            plan = Config().plan(random_plan(se, entries, seed=2, size=4, callbacks=callbacks))
            report = check_pass(program, "promotion", plan, se)
            self.assertTrue(report.ok, report.summary())
