import unittest
from collections import namedtuple

from errors import QueryRejected, UnknownSpec
from mem import IntVal, Ptr, UNDEF
from scenarios import c_query, copy_result, read_global, triangle, with_cell
from sem import CQuery, CReply, FunctionEnv, SkipEnv, init_memory, run_trace
from specs import SPECS, build_spec, default_symbols


def _final(trace) -> CReply:  # type: ignore
    reply = trace.final()
    assert isinstance(reply, CReply)
    return reply


class SpecsTest(unittest.TestCase):
    def test_registry(self) -> None:
        self.assertEqual(sorted(SPECS), ["L_A", "L_C", "L_CA", "L_CS", "L_CS'", "L_S"])
        with self.assertRaises(UnknownSpec):
            build_spec("L_X")
        with self.assertRaises(UnknownSpec):
            default_symbols("L_X")
        self.assertEqual(build_spec("L_S").defined_symbols(), frozenset({"encrypt", "key"}))

    def test_server_calls_back_with_the_encrypted_value(self) -> None:
        spec = build_spec("L_S")
        se = spec.se
        q = c_query(se, "encrypt", [IntVal(11), Ptr(se.block_of("process"), 0)], init_memory(se))
        trace = run_trace(spec, q, FunctionEnv({"process": copy_result(se)}), 100)
        outgoing = trace.outgoing()
        self.assertEqual(len(outgoing), 1)
        call = outgoing[0]
        assert isinstance(call, CQuery)
        self.assertEqual(call.vf, Ptr(se.block_of("process"), 0))
        p = call.args[0]
        assert isinstance(p, Ptr)
        self.assertEqual(call.m.load(p.block, p.offset), IntVal(33))
        reply = _final(trace)
        self.assertEqual(reply.res, UNDEF)
        self.assertEqual(read_global(se, reply.m, "result"), IntVal(33))

    def test_sum_asm_spec_caches_the_last_answer(self) -> None:
        spec = build_spec("L_A")
        se = spec.se
        env = FunctionEnv({"f": triangle})
        first = run_trace(spec, c_query(se, "g", [IntVal(4)], init_memory(se)), env, 100)
        reply = _final(first)
        self.assertEqual([read_global(se, reply.m, "s", k) for k in (0, 1)], [IntVal(4), IntVal(10)])
        second = run_trace(spec, c_query(se, "g", [IntVal(4)], reply.m), env, 100)
        self.assertEqual(second.outgoing(), [])
        self.assertEqual(_final(second).res, IntVal(10))

    def test_client_server(self) -> None:
        spec = build_spec("L_CS")
        se = spec.se
        m0 = init_memory(se)
        reply = _final(run_trace(spec, c_query(se, "request", [IntVal(11)], m0), SkipEnv(), 100))
        self.assertEqual(reply.res, IntVal(11))
        self.assertEqual(read_global(se, reply.m, "result"), IntVal(33))

        direct = c_query(se, "encrypt", [IntVal(3), Ptr(se.block_of("process"), 0)], m0)
        trace = run_trace(spec, direct, SkipEnv(), 100)
        self.assertEqual(trace.outgoing(), [])
        self.assertEqual(_final(trace).res, UNDEF)
        self.assertEqual(read_global(se, _final(trace).m, "result"), IntVal(3 ^ 42))

        m, p = with_cell(m0, IntVal(7))
        reply = _final(run_trace(spec, c_query(se, "process", [p], m), SkipEnv(), 100))
        self.assertEqual(read_global(se, reply.m, "result"), IntVal(7))

    def test_mutual_sum(self) -> None:
        spec = build_spec("L_CA")
        se = spec.se
        trace = run_trace(spec, c_query(se, "f", [IntVal(4)], init_memory(se)), SkipEnv(), 100)
        reply = _final(trace)
        self.assertEqual(reply.res, IntVal(10))
        self.assertEqual(trace.outgoing(), [])
        self.assertEqual([read_global(se, reply.m, "s", k) for k in (0, 1)], [IntVal(3), IntVal(6)])
        self.assertEqual(read_global(se, reply.m, "memoized", 4), IntVal(10))

    def test_halves_call_out(self) -> None:
        Case = namedtuple("Case", ["spec", "entry", "arg", "calls", "result"])
        tests = [
            Case("L_C", "f", 3, 1, 6),
            Case("L_C", "f", 0, 0, 0),
            Case("L_A", "g", 4, 1, 10),
            Case("L_A", "g", 0, 0, 0)]

        for test in tests:
            spec = build_spec(test.spec)
            q = c_query(spec.se, test.entry, [IntVal(test.arg)], init_memory(spec.se))
            env = FunctionEnv({"f": triangle, "g": triangle})
            trace = run_trace(spec, q, env, 100)
            self.assertEqual(len(trace.outgoing()), test.calls, test)
            self.assertEqual(_final(trace).res, IntVal(test.result), test)

    def test_queries_outside_the_entries(self) -> None:
        spec = build_spec("L_S")
        se = spec.se
        m0 = init_memory(se)
        Case = namedtuple("Case", ["name", "args"])
        tests = [
            Case("request", [IntVal(1)]),
            Case("encrypt", [IntVal(1), IntVal(2)])]

        for test in tests:
            q = c_query(se, test.name, test.args, m0)
            self.assertFalse(spec.accepts(q), test.name)
            with self.assertRaises(QueryRejected):
                run_trace(spec, q, SkipEnv(), 10)
