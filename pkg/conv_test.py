import unittest
from collections import namedtuple

from conv import (ID, RBX_SENTINEL, Atom, Comp, atom_convention, compose_conv, convention_for, flatten,
                  parse_conv)
from errors import ParseError, TypeMismatch, UnsupportedConvention
from library import load_minic
from linker import symbol_table
from mem import IntVal, MemoryState, Permission, Ptr, UNDEF
from sem import AQuery, AReply, CQuery, CReply, Interface, Reg, init_memory, parse_signature


def _function_memory():
    m, f = MemoryState.empty().alloc(0, 1)
    return m.drop_perm(f, 0, 1, Permission.NONEMPTY), f


class ConvTest(unittest.TestCase):
    def test_parse_conv(self) -> None:
        Case = namedtuple("Case", ["text", "string", "source", "target"])
        tests = [
            Case("ro ∘ wt ∘ CAinjp", "ro ∘ wt ∘ CAinjp", Interface.C, Interface.ASM),
            Case("ro.wt.CAinjp", "ro ∘ wt ∘ CAinjp", Interface.C, Interface.ASM),
            Case("c_injp ∘ CL ∘ LM ∘ MA ∘ asm_inj", "c_injp ∘ CL ∘ LM ∘ MA ∘ asm_inj", Interface.C, Interface.ASM),
            Case("ltl_ext", "ltl_ext", Interface.LTL, Interface.LTL),
            Case("  c_inj .c_ext ", "c_inj ∘ c_ext", Interface.C, Interface.C)]

        for test in tests:
            expr = parse_conv(test.text)
            self.assertEqual(expr.string(), test.string)
            self.assertEqual((expr.source, expr.target), (test.source, test.target), test.text)

    def test_parse_errors(self) -> None:
        for bad in ["", "ro ∘", "ro ∘ asm_injp", "c_foo", "MA ∘ CL"]:
            with self.assertRaises(ParseError, msg=bad):
                parse_conv(bad)

    def test_composition(self) -> None:
        ro = Atom("ro")
        self.assertEqual(compose_conv(ID, ro), ro)
        self.assertEqual(compose_conv(ro, ID), ro)
        with self.assertRaises(TypeMismatch):
            compose_conv(Atom("CAinjp"), ro)
        with self.assertRaises(TypeMismatch):
            Atom("nope")
        left_nested = Comp(Comp(ro, Atom("wt")), Atom("CAinjp"))
        self.assertEqual(left_nested.string(), "(ro ∘ wt) ∘ CAinjp")
        self.assertEqual(flatten(left_nested), parse_conv("ro ∘ wt ∘ CAinjp"))
        self.assertEqual(ID.atoms(), ())

    def test_executable_conventions(self) -> None:
        for symbolic in ["CL", "LM", "MA", "ltl_injp", "mach_ext"]:
            with self.assertRaises(UnsupportedConvention):
                atom_convention(symbolic)
        with self.assertRaises(UnsupportedConvention):
            convention_for(parse_conv("c_injp ∘ c_inj"))
        self.assertEqual(convention_for(ID).name, "id")
        self.assertEqual(convention_for(parse_conv("asm_ext")).target, Interface.ASM)

    def test_kmr_convention(self) -> None:
        m, f = _function_memory()
        m, b = m.alloc(0, 8)
        sg = parse_signature("(int, ptr) -> int")
        q1 = CQuery(Ptr(f, 0), sg, (IntVal(1), Ptr(b, 0)), m)
        conv = convention_for(parse_conv("c_injp"))
        w, q2 = conv.transport_query(q1, symbol_table([]))
        self.assertEqual(q2, q1)
        self.assertTrue(conv.match_query(w, q1, q2).ok)
        bad = CQuery(Ptr(f, 0), sg, (IntVal(2), Ptr(b, 0)), m)
        self.assertEqual(conv.match_query(w, q1, bad).clauses(), ["args"])

        r1 = CReply(Ptr(b, 0), m.store(b, 0, IntVal(3)))
        r2, j = conv.transport_reply(w, r1, q2)
        assert isinstance(r2, CReply)
        self.assertEqual((r2.res, r2.m.load(b, 0)), (Ptr(b, 0), IntVal(3)))
        self.assertTrue(conv.match_reply(w, r1, r2, j).ok)
        self.assertIn("result", conv.match_reply(w, r1, CReply(IntVal(0), r1.m), j).clauses())

    def test_wt_convention(self) -> None:
        m, f = _function_memory()
        sg = parse_signature("(int) -> int")
        conv = atom_convention("wt")
        Case = namedtuple("Case", ["args", "clauses"])
        tests = [
            Case((IntVal(1),), []),
            Case((UNDEF,), []),
            Case((Ptr(f, 0),), ["type"]),
            Case((IntVal(1), IntVal(2)), ["arity"])]

        for test in tests:
            q = CQuery(Ptr(f, 0), sg, test.args, m)
            w, _ = conv.transport_query(q, symbol_table([]))
            self.assertEqual(conv.match_query(w, q, q).clauses(), test.clauses, test.args)

        w, q = conv.transport_query(CQuery(Ptr(f, 0), sg, (IntVal(1),), m), symbol_table([]))
        self.assertEqual(conv.match_reply(w, CReply(Ptr(f, 0), m), CReply(Ptr(f, 0), m), None).clauses(),
                         ["type"])

    def test_ro_convention(self) -> None:
        se = symbol_table([load_minic("double_key.mc")])
        m = init_memory(se)
        fn = se.lookup("double_key")
        assert fn is not None and fn.sg is not None
        conv = atom_convention("ro")
        q = CQuery(Ptr(fn.block, 0), fn.sg, (), m)
        w, q2 = conv.transport_query(q, se)
        self.assertTrue(conv.match_query(w, q, q2).ok)

        changed = CQuery(q.vf, q.sg, (), m.set_contents(se.block_of("key"), 0, IntVal(1)))
        w, _ = conv.transport_query(changed, se)
        self.assertEqual(conv.match_query(w, changed, changed).clauses(), ["ro-value"])

        w, _ = conv.transport_query(q, se)
        self.assertTrue(conv.match_reply(w, CReply(IntVal(84), m), CReply(IntVal(84), m), None).ok)
        self.assertEqual(conv.match_reply(w, CReply(IntVal(84), m), CReply(IntVal(85), m), None).clauses(),
                         ["equal"])

    def test_cainjp_places_arguments(self) -> None:
        m, f = _function_memory()
        sg = parse_signature("(int, int, int) -> int")
        q1 = CQuery(Ptr(f, 0), sg, (IntVal(1), IntVal(2), IntVal(3)), m)
        conv = atom_convention("CAinjp")
        w, q2 = conv.transport_query(q1, symbol_table([]))
        rs = q2.rs
        self.assertEqual((rs[Reg.RDI], rs[Reg.RSI], rs[Reg.PC], rs[Reg.RBX]),
                         (IntVal(1), IntVal(2), Ptr(f, 0), RBX_SENTINEL))
        sp = rs[Reg.RSP]
        assert isinstance(sp, Ptr)
        self.assertEqual(q2.m.load(sp.block, 16), IntVal(3))
        self.assertTrue(conv.match_query(w, q1, q2).ok)
        moved = AQuery(rs.set(Reg.RSP, Ptr(sp.block, 8)), q2.m)
        self.assertIn("args", conv.match_query(w, q1, moved).clauses())

        r2, j = conv.transport_reply(w, CReply(IntVal(5), m), q2)
        assert isinstance(r2, AReply)
        self.assertEqual((r2.rs[Reg.RAX], r2.rs[Reg.PC]), (IntVal(5), rs[Reg.RA]))
        self.assertTrue(conv.match_reply(w, CReply(IntVal(5), m), r2, j).ok)
        clobbered = AReply(r2.rs.set(Reg.RBX, IntVal(0)), r2.m)
        self.assertEqual(conv.match_reply(w, CReply(IntVal(5), m), clobbered, j).clauses(), ["callee-save"])

    def test_composite_prefixes_parts(self) -> None:
        se = symbol_table([load_minic("double_key.mc")])
        m = init_memory(se)
        fn = se.lookup("double_key")
        assert fn is not None and fn.sg is not None
        conv = convention_for(parse_conv("ro ∘ wt ∘ CAinjp"))
        q1 = CQuery(Ptr(fn.block, 0), fn.sg, (), m)
        w, q2 = conv.transport_query(q1, se)
        self.assertEqual(len(w), 3)
        self.assertTrue(conv.match_query(w, q1, q2).ok)
        self.assertEqual(conv.injection(w), w[2].injp.j)

        r2, j = conv.transport_reply(w, CReply(IntVal(84), m), q2)
        self.assertTrue(conv.match_reply(w, CReply(IntVal(84), m), r2, j).ok)
        bad = AReply(r2.rs.set(Reg.RAX, IntVal(0)), r2.m)
        self.assertEqual(conv.match_reply(w, CReply(IntVal(84), m), bad, j).clauses(), ["CAinjp:result"])

    def test_composition_is_associative_for_matching(self) -> None:
        se = symbol_table([load_minic("double_key.mc")])
        m = init_memory(se)
        fn = se.lookup("double_key")
        assert fn is not None and fn.sg is not None
        q1 = CQuery(Ptr(fn.block, 0), fn.sg, (), m)
        ro, wt, ca = Atom("ro"), Atom("wt"), Atom("CAinjp")
        left = convention_for(Comp(Comp(ro, wt), ca))
        right = convention_for(Comp(ro, Comp(wt, ca)))
        self.assertEqual(left.name, right.name)

        w_left, q2_left = left.transport_query(q1, se)
        w_right, q2_right = right.transport_query(q1, se)
        self.assertEqual(q2_left, q2_right)
        assert isinstance(q2_left, AQuery)
        shifted = AQuery(q2_left.rs.set(Reg.RSP, IntVal(0)), q2_left.m)
        for q2 in (q2_left, shifted):
            self.assertEqual(left.match_query(w_left, q1, q2).clauses(), right.match_query(w_right, q1, q2).clauses())

        r1 = CReply(IntVal(84), m)
        r2, j = left.transport_reply(w_left, r1, q2_left)
        self.assertEqual(right.transport_reply(w_right, r1, q2_right), (r2, j))
        assert isinstance(r2, AReply)
        for reply in (r2, AReply(r2.rs.set(Reg.RAX, IntVal(0)), r2.m)):
            self.assertEqual(left.match_reply(w_left, r1, reply, j).clauses(),
                             right.match_reply(w_right, r1, reply, j).clauses())
