import unittest
from collections import namedtuple

from errors import FuelExhausted, LinkError, ParseError, QueryRejected
from evaluator import sem_minic
from asm_evaluator import sem_miniasm
from library import load_miniasm, load_minic
from linker import symbol_table
from mem import IntVal, Permission, Ptr, UNDEF, unchanged_on_check
from sem import (AQuery, AReply, CQuery, CReply, ExternalCall, FunctionEnv, LinkedLTS, Reg, RegSet, Signature,
                 SkipEnv, Typ, WriterEnv, get_args, init_memory, link_sem, make_reply, observe_globals,
                 parse_signature, ro_valid_report, run_trace, trace_equal, value_has_type)
from specs import build_spec, default_symbols


def _request(lts, n: int) -> CQuery:  # type: ignore
    symbol = lts.se.lookup("request")
    return CQuery(Ptr(symbol.block, 0), symbol.sg, (IntVal(n),), init_memory(lts.se))


class SemTest(unittest.TestCase):
    def test_parse_signature(self) -> None:
        Case = namedtuple("Case", ["text", "expected"])
        tests = [
            Case("() -> void", Signature((), Typ.VOID)),
            Case("(int) -> int", Signature((Typ.INT,), Typ.INT)),
            Case("(int, ptr) -> void", Signature((Typ.INT, Typ.PTR), Typ.VOID)),
            Case(" ( ptr ) ->ptr", Signature((Typ.PTR,), Typ.PTR))]

        for test in tests:
            self.assertEqual(parse_signature(test.text), test.expected)
            self.assertEqual(parse_signature(test.expected.string()), test.expected)

        for bad in ["int -> int", "(int)", "(float) -> int", "(int) -> int -> int"]:
            with self.assertRaises(ParseError):
                parse_signature(bad)

    def test_value_has_type(self) -> None:
        Case = namedtuple("Case", ["value", "typ", "expected"])
        tests = [
            Case(IntVal(1), Typ.INT, True),
            Case(IntVal(1), Typ.PTR, False),
            Case(Ptr(1, 0), Typ.PTR, True),
            Case(Ptr(1, 0), Typ.INT, False),
            Case(UNDEF, Typ.INT, True),
            Case(IntVal(1), Typ.VOID, True)]

        for test in tests:
            self.assertEqual(value_has_type(test.value, test.typ), test.expected, test)

    def test_registers(self) -> None:
        rs = RegSet({Reg.RAX: IntVal(1), Reg.RBX: UNDEF})
        self.assertEqual(rs[Reg.RBX], UNDEF)
        rs2 = rs.set(Reg.RDI, IntVal(2))
        self.assertEqual(rs[Reg.RDI], UNDEF)
        self.assertEqual(rs2[Reg.RDI], IntVal(2))
        self.assertEqual(RegSet({Reg.RAX: IntVal(1)}), rs)

    def test_stack_arguments(self) -> None:
        se = symbol_table([load_minic("client.mc")])
        m, sp = init_memory(se).alloc(0, 32)
        m = m.store(sp, 16, IntVal(30))
        sg = parse_signature("(int, int, int) -> int")
        rs = RegSet({Reg.RDI: IntVal(10), Reg.RSI: IntVal(20), Reg.RSP: Ptr(sp, 0)})
        self.assertEqual(get_args(sg, rs, m), [IntVal(10), IntVal(20), IntVal(30)])
        self.assertIsNone(get_args(sg, rs.set(Reg.RSP, IntVal(0)), m))
        self.assertIsNone(get_args(sg, rs.set(Reg.RSP, Ptr(sp, 24)), m))

    def test_init_memory_and_read_only_globals(self) -> None:
        se = symbol_table([load_minic("double_key.mc")])
        m = init_memory(se)
        key = se.block_of("key")
        self.assertEqual(m.load(key, 0), IntVal(42))
        self.assertEqual(m.perm(key, 0), (Permission.READABLE, Permission.READABLE))
        self.assertEqual(m.perm(se.block_of("foo"), 0), (Permission.NONEMPTY, Permission.NONEMPTY))
        self.assertTrue(ro_valid_report(se, m).ok)
        Case = namedtuple("Case", ["memory", "clause"])
        tests = [
            Case(m.set_contents(key, 0, IntVal(41)), "ro-value"),
            Case(m.set_perm(key, 0, (Permission.WRITABLE, Permission.WRITABLE)), "ro-perm")]

        for test in tests:
            self.assertEqual(ro_valid_report(se, test.memory).clauses(), [test.clause])

    def test_trace_of_an_open_module(self) -> None:
        lts = sem_minic(load_minic("client.mc"))
        trace = run_trace(lts, _request(lts, 11), SkipEnv(), 1000)
        self.assertEqual([e["ev"] for e in trace.to_json_lines()], ["iq", "oq", "or", "ir"])
        self.assertEqual(len(trace.replies()), 1)
        self.assertGreater(trace.steps, 0)

    def test_run_trace_errors(self) -> None:
        lts = sem_minic(load_minic("client.mc"))
        with self.assertRaises(FuelExhausted) as ctx:
            run_trace(lts, _request(lts, 1), SkipEnv(), 0)
        self.assertEqual(len(ctx.exception.trace.events), 1)
        encrypt = lts.se.lookup("encrypt")
        assert encrypt is not None and encrypt.sg is not None
        q = CQuery(Ptr(encrypt.block, 0), encrypt.sg, (IntVal(1), Ptr(lts.se.block_of("process"), 0)),
                   init_memory(lts.se))
        with self.assertRaises(QueryRejected):
            run_trace(lts, q, SkipEnv(), 1000)

    def test_semantic_linking_with_the_server_spec(self) -> None:
        se = default_symbols("L_S")
        linked = link_sem(sem_minic(load_minic("client.mc"), se, "client"), build_spec("L_S", se))
        self.assertEqual(linked.defined_symbols(), frozenset({"request", "process", "result", "encrypt", "key"}))
        trace = run_trace(linked, _request(linked, 11), SkipEnv(), 1000)
        self.assertEqual(trace.outgoing(), [])
        final = trace.final()
        assert isinstance(final, CReply)
        self.assertEqual(final.res, IntVal(11))
        self.assertEqual(final.m.contents(se.block_of("result"), 0), IntVal(33))

    def test_semantic_linking_is_associative(self) -> None:
        se = symbol_table([load_minic("client.mc"), load_miniasm("server.ma"), load_minic("sum_f.mc")])
        client = sem_minic(load_minic("client.mc"), se, "client")
        server = build_spec("L_S", se)
        sums = sem_minic(load_minic("sum_f.mc"), se, "sum_f")
        flat = LinkedLTS([client, server, sums])
        nested = [link_sem(link_sem(client, server), sums), link_sem(client, link_sem(server, sums))]
        defined = client.defined_symbols() | server.defined_symbols() | sums.defined_symbols()
        self.assertEqual(flat.defined_symbols(), defined)

        f = se.lookup("f")
        assert f is not None
        queries = [_request(flat, n) for n in (0, 11, 42)]
        queries.append(CQuery(Ptr(f.block, 0), f.sg, (IntVal(3),), init_memory(se)))
        for linked in nested:
            self.assertEqual(linked.defined_symbols(), defined)
            for q in queries:
                expected = run_trace(flat, q, SkipEnv(), 1000)
                self.assertTrue(trace_equal(run_trace(linked, q, SkipEnv(), 1000), expected), linked.name)
        with self.assertRaises(LinkError):
            link_sem(link_sem(client, server), link_sem(sums, client))

    def test_linking_errors(self) -> None:
        se = default_symbols("L_S")
        client = sem_minic(load_minic("client.mc"), se, "client")
        with self.assertRaises(LinkError):
            link_sem(client, sem_minic(load_minic("client.mc"), se, "again"))
        with self.assertRaises(LinkError):
            link_sem(client, sem_miniasm(load_miniasm("server.ma"), se, "server"))

    def test_environments(self) -> None:
        se = symbol_table([load_minic("client.mc")])
        m = init_memory(se)
        encrypt = se.lookup("encrypt")
        assert encrypt is not None
        call = ExternalCall("encrypt", Ptr(encrypt.block, 0), encrypt.sg, (IntVal(1), Ptr(se.block_of("process"), 0)),
                            m, se, 0)
        self.assertEqual(SkipEnv().respond(call), (UNDEF, m))

        res, m2 = WriterEnv(5, writes=4).respond(call)
        self.assertEqual(res, UNDEF)
        self.assertEqual(WriterEnv(5, writes=4).respond(call), (res, m2))
        result = se.block_of("result")
        self.assertTrue(unchanged_on_check(lambda b, o: b != result, m, m2))

        env = FunctionEnv({"encrypt": lambda c: (IntVal(7), c.m)})
        self.assertEqual(env.respond(call), (IntVal(7), m))
        self.assertEqual(FunctionEnv({}).respond(call), (UNDEF, m))

    def test_asm_replies_return_to_the_caller(self) -> None:
        m = init_memory(symbol_table([load_minic("client.mc")]))
        rs = RegSet({Reg.RDI: IntVal(1), Reg.RSI: IntVal(2), Reg.RA: Ptr(9, 0), Reg.RBX: IntVal(3)})
        r = make_reply(AQuery(rs, m), IntVal(5), m)
        assert isinstance(r, AReply)
        self.assertEqual(r.rs[Reg.RAX], IntVal(5))
        self.assertEqual(r.rs[Reg.PC], Ptr(9, 0))
        self.assertEqual((r.rs[Reg.RDI], r.rs[Reg.RSI]), (UNDEF, UNDEF))
        self.assertEqual(r.rs[Reg.RBX], IntVal(3))

    def test_trace_equality(self) -> None:
        lts = sem_minic(load_minic("client.mc"))
        env = FunctionEnv({"encrypt": lambda c: (UNDEF, c.m)})
        t1 = run_trace(lts, _request(lts, 11), env, 1000)
        t2 = run_trace(lts, _request(lts, 11), env, 1000)
        t3 = run_trace(lts, _request(lts, 12), env, 1000)
        projection = observe_globals(lts.se, ["result"])
        self.assertTrue(trace_equal(t1, t2))
        self.assertTrue(trace_equal(t1, t2, projection))
        self.assertFalse(trace_equal(t1, t3, projection))
        self.assertEqual(projection(init_memory(lts.se)), (("result", (IntVal(0),)),))
