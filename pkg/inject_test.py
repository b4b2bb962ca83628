import unittest
from collections import namedtuple

from hypothesis import given
from hypothesis import strategies as st

from errors import PreconditionError
from inject import (Meminj, PositionClass, Side, classify_position, compose_all, compose_inj, inj_sep_check,
                    mem_inj_check, out_of_reach, reach_closure, value_inject_check, value_roots,
                    value_transport)
from mem import IntVal, MemoryState, Permission, Ptr, UNDEF


def _pair():
    """A source block of 8 cells mapped at delta 8 into a 24-cell target block."""
    m1, b1 = MemoryState.empty().alloc(0, 8)
    m2, b2 = MemoryState.empty().alloc(0, 24)
    m1 = m1.store(b1, 0, IntVal(5))
    m2 = m2.store(b2, 8, IntVal(5))
    return Meminj({b1: (b2, 8)}), m1, m2


class InjectTest(unittest.TestCase):
    def test_values(self) -> None:
        j = Meminj({1: (2, 8)})
        Case = namedtuple("Case", ["v1", "v2", "expected"])
        tests = [
            Case(UNDEF, IntVal(3), True),
            Case(IntVal(3), IntVal(3), True),
            Case(IntVal(3), IntVal(4), False),
            Case(Ptr(1, 4), Ptr(2, 12), True),
            Case(Ptr(1, 4), Ptr(2, 4), False),
            Case(Ptr(3, 0), Ptr(3, 0), False),
            Case(IntVal(0), UNDEF, False)]

        for test in tests:
            self.assertEqual(value_inject_check(j, test.v1, test.v2), test.expected, test)

        self.assertEqual(value_transport(j, Ptr(1, 4)), Ptr(2, 12))
        self.assertIsNone(value_transport(j, Ptr(3, 0)))
        self.assertEqual(value_transport(j, IntVal(9)), IntVal(9))

    def test_extend_refuses_remapping(self) -> None:
        j = Meminj({1: (2, 0)})
        self.assertEqual(j.extend(1, 2, 0), j)
        self.assertEqual(j.extend(3, 2, 8)(3), (2, 8))
        with self.assertRaises(PreconditionError):
            j.extend(1, 2, 8)
        with self.assertRaises(PreconditionError):
            j.union(Meminj({1: (3, 0)}))

    def test_preimages_and_subset(self) -> None:
        j = Meminj({1: (5, 0), 2: (5, 16), 3: (6, 0)})
        self.assertEqual(j.preimages(5), [(1, 0), (2, 16)])
        self.assertEqual(j.preimages(7), [])
        self.assertTrue(j.restrict(lambda b: b != 3).subset(j))
        self.assertFalse(j.subset(j.restrict(lambda b: b != 3)))
        self.assertEqual(j.string(), "{b1->(b5,0), b2->(b5,16), b3->(b6,0)}")
        self.assertEqual(Meminj.from_json(j.to_json()), j)

    def test_compose(self) -> None:
        j12 = Meminj({1: (2, 4), 3: (4, 0)})
        j23 = Meminj({2: (7, 8)})
        self.assertEqual(compose_inj(j12, j23), Meminj({1: (7, 12)}))
        self.assertEqual(compose_all([]), Meminj())
        self.assertEqual(compose_all([j12, j23, Meminj.identity([7])]), Meminj({1: (7, 12)}))

    def test_mem_inj_holds(self) -> None:
        j, m1, m2 = _pair()
        self.assertTrue(mem_inj_check(j, m1, m2).ok)

    def test_mem_inj_clauses(self) -> None:
        j, m1, m2 = _pair()
        m2_other, b3 = m2.alloc(0, 8)
        Case = namedtuple("Case", ["j", "m1", "m2", "clause"])
        tests = [
            Case(j, m1, m2.drop_perm(1, 8, 16, Permission.READABLE), "1"),
            Case(j, m1, m2.store(1, 8, IntVal(6)), "2"),
            Case(j.extend(4, 1, 0), m1, m2, "3"),
            Case(Meminj({1: (9, 0)}), m1, m2, "4"),
            Case(Meminj({1: (1, 8), 2: (1, 12)}), m1.alloc(0, 8)[0], m2, "5"),
            Case(j, m1.drop_perm(1, 0, 8, Permission.READABLE), m2, "6")]

        for test in tests:
            report = mem_inj_check(test.j, test.m1, test.m2)
            self.assertIn(test.clause, report.clauses(), report.summary())
        self.assertEqual(b3, 2)
        self.assertTrue(mem_inj_check(j, m1, m2_other).ok)

    def test_out_of_reach(self) -> None:
        j, m1, m2 = _pair()
        Case = namedtuple("Case", ["offset", "expected"])
        tests = [Case(0, True), Case(7, True), Case(8, False), Case(15, False), Case(16, True)]

        for test in tests:
            self.assertEqual(out_of_reach(j, m1, 1, test.offset), test.expected, test)
        self.assertEqual(classify_position(j, m1, Side.TARGET, 1, 0), PositionClass.OUT_OF_REACH)
        self.assertEqual(classify_position(j, m1, Side.TARGET, 1, 8), PositionClass.IN_REACH)
        self.assertEqual(classify_position(j, m1, Side.SOURCE, 1, 0), PositionClass.MAPPED_PUBLIC)
        self.assertEqual(classify_position(j, m1, Side.SOURCE, 2, 0), PositionClass.UNMAPPED)
        # Freeing the source block puts its image out of reach again.
        self.assertTrue(out_of_reach(j, m1.free(1, 0, 8), 1, 8))

    def test_inj_sep(self) -> None:
        j, m1, m2 = _pair()
        m1b, fresh1 = m1.alloc(0, 8)
        m2b, fresh2 = m2.alloc(0, 8)
        self.assertTrue(inj_sep_check(j, j.extend(fresh1, fresh2, 0), m1, m2))
        self.assertFalse(inj_sep_check(j, j.extend(fresh1, 1, 0), m1, m2))
        self.assertEqual((m1b.next_block, m2b.next_block), (3, 3))

    def test_reach_closure(self) -> None:
        m = MemoryState.empty()
        m, a = m.alloc(0, 8)
        m, b = m.alloc(0, 8)
        m, c = m.alloc(0, 8)
        m, d = m.alloc(0, 8)
        m = m.store(a, 0, Ptr(b, 0)).store(b, 0, Ptr(c, 0))
        self.assertEqual(reach_closure(None, m, [(a, 0)]), {a, b, c})
        self.assertEqual(reach_closure(None, m, [(d, 0)]), {d})
        self.assertEqual(reach_closure(None, m, value_roots(m, [IntVal(1), Ptr(b, 4)])), {b, c})
        # Unreadable cells do not propagate.
        hidden = m.set_perm(a, 0, (Permission.NONEMPTY, Permission.NONEMPTY))
        self.assertEqual(reach_closure(None, hidden, [(a, 0)]), {a})
        cyclic = m.store(c, 0, Ptr(a, 0))
        self.assertEqual(reach_closure(Meminj({a: (a, 0)}), cyclic, [(b, 0)]), {a, b, c})
        self.assertEqual(reach_closure(Meminj(), cyclic, [(b, 0)]), reach_closure(None, cyclic, [(b, 0)]))

    @given(st.dictionaries(st.integers(1, 6), st.tuples(st.integers(1, 6), st.integers(-16, 16)), max_size=5),
           st.dictionaries(st.integers(1, 6), st.tuples(st.integers(1, 6), st.integers(-16, 16)), max_size=5),
           st.integers(1, 6), st.integers(-32, 32))
    def test_composition_transports_pointers(self, m12: dict, m23: dict, b: int, o: int) -> None:
        j12, j23 = Meminj(m12), Meminj(m23)
        mid = value_transport(j12, Ptr(b, o))
        direct = value_transport(compose_inj(j12, j23), Ptr(b, o))
        if mid is None:
            self.assertIsNone(direct)
        else:
            self.assertEqual(direct, value_transport(j23, mid))
