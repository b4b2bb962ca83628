import unittest
from collections import namedtuple

from hypothesis import given
from hypothesis import strategies as st

from errors import MemoryPermissionError
from mem import (IntVal, MemoryState, Permission, PermKind, Ptr, UNDEF, mem_acc_check, mem_acc_violations,
                 unchanged_on_check, unchanged_on_witness, wrap_int)


class MemTest(unittest.TestCase):
    def test_alloc_numbers_blocks_in_order(self) -> None:
        m = MemoryState.empty()
        m, b1 = m.alloc(0, 8)
        m, b2 = m.alloc(-8, 16)
        self.assertEqual((b1, b2), (1, 2))
        self.assertEqual(m.next_block, 3)
        self.assertEqual(m.bounds(2), (-8, 16))
        self.assertTrue(m.valid_block(2))
        self.assertFalse(m.valid_block(3))
        self.assertTrue(m.perm_at(b1, 7, PermKind.CUR, Permission.FREEABLE))
        self.assertFalse(m.perm_at(b1, 8, PermKind.CUR, Permission.NONEMPTY))

    def test_states_are_immutable(self) -> None:
        m0, b = MemoryState.empty().alloc(0, 8)
        m1 = m0.store(b, 0, IntVal(5))
        self.assertEqual(m0.contents(b, 0), UNDEF)
        self.assertEqual(m1.load(b, 0), IntVal(5))
        self.assertNotEqual(m0, m1)

    def test_permission_errors(self) -> None:
        m, b = MemoryState.empty().alloc(0, 8)
        ro = m.drop_perm(b, 0, 8, Permission.READABLE)
        gone = m.free(b, 0, 8)
        Case = namedtuple("Case", ["operation", "needed"])
        tests = [
            Case(lambda: ro.store(b, 0, IntVal(1)), "Writable"),
            Case(lambda: gone.load(b, 0), "Readable"),
            Case(lambda: gone.free(b, 0, 8), "Freeable"),
            Case(lambda: ro.drop_perm(b, 0, 1, Permission.NONEMPTY), "Freeable"),
            Case(lambda: m.load(b, 8), "Readable"),
            Case(lambda: m.store(9, 0, IntVal(1)), "Writable")]

        for test in tests:
            with self.assertRaises(MemoryPermissionError) as ctx:
                test.operation()
            self.assertEqual(ctx.exception.needed, test.needed)

    def test_read_only_cells_still_load(self) -> None:
        m, b = MemoryState.empty().alloc(0, 8)
        m = m.store(b, 0, IntVal(42)).drop_perm(b, 0, 8, Permission.READABLE)
        self.assertEqual(m.load(b, 0), IntVal(42))
        self.assertEqual(m.perm(b, 0), (Permission.READABLE, Permission.READABLE))

    def test_free_removes_values(self) -> None:
        m, b = MemoryState.empty().alloc(0, 16)
        m = m.store(b, 8, Ptr(b, 0)).free(b, 0, 16)
        self.assertEqual(m.positions(b), [])
        self.assertEqual(m.contents(b, 8), UNDEF)
        self.assertTrue(m.valid_block(b))

    def test_mem_acc(self) -> None:
        m, b = MemoryState.empty().alloc(0, 8)
        m = m.store(b, 0, IntVal(1))
        ro = m.drop_perm(b, 0, 8, Permission.READABLE)
        Case = namedtuple("Case", ["before", "after", "clauses"])
        tests = [
            Case(m, m.store(b, 0, IntVal(2)), []),
            Case(m, m.alloc(0, 8)[0], []),
            Case(m, m.free(b, 0, 8), []),
            Case(m.alloc(0, 8)[0], m, ["valid"]),
            Case(ro, ro.set_contents(b, 0, IntVal(2)), ["ro-acc"]),
            Case(ro, ro.set_perm(b, 0, (Permission.WRITABLE, Permission.WRITABLE)), ["max-perm-dec"])]

        for test in tests:
            clauses = [v[0] for v in mem_acc_violations(test.before, test.after)]
            self.assertEqual(clauses, test.clauses)
            self.assertEqual(mem_acc_check(test.before, test.after), not test.clauses)

    def test_unchanged_on(self) -> None:
        m, b = MemoryState.empty().alloc(0, 16)
        m2 = m.store(b, 8, IntVal(3))
        self.assertEqual(unchanged_on_witness(lambda b_, o: True, m, m2), (b, 8))
        self.assertTrue(unchanged_on_check(lambda b_, o: o == 0, m, m2))

    def test_set_perm_rejects_cur_above_max(self) -> None:
        m, b = MemoryState.empty().alloc(0, 8)
        with self.assertRaises(ValueError):
            m.set_perm(b, 0, (Permission.READABLE, Permission.WRITABLE))

    def test_json_keeps_the_state(self) -> None:
        m, b = MemoryState.empty().alloc(0, 16)
        m = m.store(b, 0, IntVal(-3)).store(b, 8, Ptr(b, 0)).drop_perm(b, 0, 8, Permission.READABLE)
        self.assertEqual(MemoryState.from_json(m.to_json()), m)

    def test_string(self) -> None:
        m, b = MemoryState.empty().alloc(0, 1)
        m = m.store(b, 0, IntVal(7))
        self.assertEqual(m.string(), "next_block 2\n  b1 [0,1) 0:7/FF")

    @given(st.integers())
    def test_int_values_wrap_to_64_bits(self, n: int) -> None:
        v = IntVal(n).value
        self.assertTrue(-(1 << 63) <= v < (1 << 63))
        self.assertEqual(wrap_int(v), v)
        self.assertEqual((v - n) % (1 << 64), 0)

    @given(st.lists(st.tuples(st.integers(0, 7), st.integers(-100, 100)), max_size=20))
    def test_last_store_wins(self, writes: list) -> None:
        m, b = MemoryState.empty().alloc(0, 8)
        expected = {}
        for o, v in writes:
            m = m.store(b, o, IntVal(v))
            expected[o] = v
        for o in range(8):
            self.assertEqual(m.load(b, o), IntVal(expected[o]) if o in expected else UNDEF)

    def test_single_cell_permission_gating(self) -> None:
        m0, b = MemoryState.empty().alloc(0, 1)
        for max_perm in Permission:
            for cur in Permission:
                if cur > max_perm:
                    continue
                m = m0.set_perm(b, 0, (max_perm, cur))
                Case = namedtuple("Case", ["name", "operation", "allowed"])
                tests = [
                    Case("load", lambda: m.load(b, 0), cur >= Permission.READABLE),
                    Case("store", lambda: m.store(b, 0, IntVal(1)), cur >= Permission.WRITABLE),
                    Case("free", lambda: m.free(b, 0, 1), cur == Permission.FREEABLE),
                    Case("drop_perm", lambda: m.drop_perm(b, 0, 1, Permission.READABLE),
                         cur == Permission.FREEABLE)]

                for test in tests:
                    if test.allowed:
                        test.operation()
                    else:
                        with self.assertRaises(MemoryPermissionError, msg=(test.name, max_perm, cur)):
                            test.operation()

    @given(st.lists(st.tuples(st.sampled_from(["store", "drop", "free", "alloc"]), st.integers(0, 7),
                              st.sampled_from(list(Permission))), max_size=12))
    def test_operations_are_accessible(self, ops: list) -> None:
        m, b = MemoryState.empty().alloc(0, 8)
        m = m.store(b, 3, IntVal(3))
        states = [m]
        for kind, o, p in ops:
            try:
                if kind == "store":
                    m = m.store(b, o, IntVal(o))
                elif kind == "drop":
                    m = m.drop_perm(b, o, o + 1, p)
                elif kind == "free":
                    m = m.free(b, o, o + 1)
                else:
                    m = m.alloc(0, o)[0]
            except MemoryPermissionError:
                continue
            states.append(m)

        for prev, nxt in zip(states, states[1:]):
            self.assertTrue(mem_acc_check(prev, nxt))
        for state in states:
            self.assertTrue(mem_acc_check(state, state))
            self.assertTrue(mem_acc_check(states[0], state))
            for o in state.positions(b):
                pair = state.perm(b, o)
                if pair is not None:
                    self.assertLessEqual(pair[1], pair[0])

    @given(st.lists(st.tuples(st.integers(0, 7), st.integers(-5, 5)), max_size=6),
           st.integers(0, 8), st.integers(0, 8))
    def test_unchanged_on_is_monotone(self, writes: list, wide: int, narrow: int) -> None:
        m, b = MemoryState.empty().alloc(0, 8)
        m2 = m
        for o, v in writes:
            m2 = m2.store(b, o, IntVal(v))
        narrow = min(narrow, wide)
        if unchanged_on_check(lambda b_, o: o < wide, m, m2):
            self.assertTrue(unchanged_on_check(lambda b_, o: o < narrow, m, m2))
        self.assertTrue(unchanged_on_check(lambda b_, o: False, m, m2))
