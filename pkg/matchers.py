"""State matchers shared by the compiler passes and the bundled scenarios.

A matcher relates one source state to one target state under an injection,
and may extend the injection with mappings for blocks allocated since the
last match.
"""
import logging
from typing import Any, List, Optional, Tuple

from asm_evaluator import AsmState
from evaluator import Callstate, Execstate, Frame, Returnstate, Stack
from inject import Meminj, mem_inj_check, value_inject_check
from mem import IntVal, MemoryState, Ptr, Value
from report import CheckReport
from sem import AQuery, CQuery, Query, Reg, get_args
from simulation import MatchContext, MatchResult, StateMatcher
import specs

LOGGER = logging.getLogger("refine.matchers")


def extend_checked(report: CheckReport, j: Meminj, b1: int, b2: int, delta: int,
            clause: str, what: str) -> Meminj:
    image = j(b1)
    if image is None:
        return j.extend(b1, b2, delta)
    if image != (b2, delta):
        report.fail(clause, f"{what} is mapped to {image}, expected {(b2, delta)}", [b1])
    return j


class IdentityMatcher(StateMatcher):
    """Self-simulation: both sides run the same program from the same query."""

    name = "identity"
    lockstep = True

    def match(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> MatchResult:
        report = CheckReport(self.name)
        report.check(s1 == s2, "state", "states differ")
        m = getattr(s1, "m", None)
        return MatchResult(report, Meminj.identity_on(m) if m is not None else j)


class MiniCMatcher(StateMatcher):
    """Lockstep relation between two MiniC programs with the same statements.

    Frames are related variable by variable. A variable held in a block on
    both sides maps block to block; a variable whose source block became a
    target temporary keeps its source block unmapped and its value related
    to the temporary.
    """

    name = "minic"
    lockstep = True

    def match(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> MatchResult:
        report = CheckReport(self.name)
        if type(s1) is not type(s2):
            report.fail("state", f"{type(s1).__name__} against {type(s2).__name__}")
            return MatchResult(report, j)
        if isinstance(s1, Callstate):
            report.check(s1.sg == s2.sg, "sig", "call signatures differ")
            report.check(value_inject_check(j, s1.vf, s2.vf), "vf", "callees not related")
            if report.check(len(s1.args) == len(s2.args), "args", "argument counts differ"):
                for k, (a1, a2) in enumerate(zip(s1.args, s2.args)):
                    report.check(value_inject_check(j, a1, a2), "args", f"argument {k} not related", k)
        elif isinstance(s1, Execstate):
            j = self._frame(report, j, s1.frame, s2.frame, s1.m, s2.m)
            self._kont(report, s1.kont, s2.kont)
        elif isinstance(s1, Returnstate):
            report.check(value_inject_check(j, s1.v, s2.v), "result", "returned values not related")
        j = self._stack(report, j, s1.stack, s2.stack, s1.m, s2.m)
        if report.ok:
            report.merge(mem_inj_check(j, s1.m, s2.m), "mem-inj:")
            self.extra(report, ctx, j, s1, s2)
        return MatchResult(report, j)

    def extra(self, report: CheckReport, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> None:
        pass

    def _kont(self, report: CheckReport, k1: Tuple[Any, ...], k2: Tuple[Any, ...]) -> None:
        if not report.check(len(k1) == len(k2), "kont", "continuations differ in length",
                            [len(k1), len(k2)]):
            return
        for a, b in zip(k1, k2):
            if type(a) is not type(b):
                report.fail("kont", f"{type(a).__name__} against {type(b).__name__}")
                return

    def _stack(self, report: CheckReport, j: Meminj, st1: Stack, st2: Stack,
               m1: MemoryState, m2: MemoryState) -> Meminj:
        if not report.check(len(st1) == len(st2), "stack", "call stacks differ in depth",
                            [len(st1), len(st2)]):
            return j
        for c1, c2 in zip(st1, st2):
            report.check(c1.dest == c2.dest, "stack", "suspended calls assign different variables")
            self._kont(report, c1.kont, c2.kont)
            j = self._frame(report, j, c1.frame, c2.frame, m1, m2)
        return j

    def _frame(self, report: CheckReport, j: Meminj, f1: Frame, f2: Frame,
               m1: MemoryState, m2: MemoryState) -> Meminj:
        if not report.check(f1.function.name == f2.function.name, "frame",
                            "frames of different functions",
                            [f1.function.name, f2.function.name]):
            return j
        for var in f1.function.variables():
            name = var.name
            b1, b2 = f1.env.block(name), f2.env.block(name)
            if b1 is not None and b2 is not None:
                j = extend_checked(report, j, b1, b2, 0, "frame", f"block of {name}")
            elif b1 is not None and f2.env.has_temp(name):
                report.check(j(b1) is None, "promoted", f"{name} became a temporary but its block is mapped",
                             [b1])
                report.check(value_inject_check(j, m1.contents(b1, 0), f2.env.get(name)),  # type: ignore
                             "promoted", f"{name} differs from its temporary")
            elif f1.env.has_temp(name) and f2.env.has_temp(name):
                report.check(value_inject_check(j, f1.env.get(name), f2.env.get(name)),  # type: ignore
                             "temp", f"temporary {name} not related")
            else:
                report.fail("frame", f"{name} is stored differently")
        return j


def _call_args(q: Query, sg: Any) -> Optional[List[Value]]:
    if isinstance(q, CQuery):
        return list(q.args)
    return get_args(sg, q.rs, q.m)


class BoundaryMatcher(StateMatcher):
    """Compares memories only where both sides are at a boundary.

    At an outgoing call, pointer arguments into blocks the source allocated
    since the incoming call are mapped onto the matching target arguments.
    """

    name = "boundary"

    def match(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> MatchResult:
        report = CheckReport(self.name)
        q1 = ctx.source.at_external(s1)
        q2 = ctx.target.at_external(s2)
        if isinstance(q1, CQuery) and q2 is not None:
            args2 = _call_args(q2, q1.sg)
            if args2 is not None and len(args2) == len(q1.args):
                for a1, a2 in zip(q1.args, args2):
                    if isinstance(a1, Ptr) and isinstance(a2, Ptr) and j(a1.block) is None:
                        j = j.extend(a1.block, a2.block, a2.offset - a1.offset)
        report.merge(mem_inj_check(j, _memory(s1), _memory(s2)), "mem-inj:")
        return MatchResult(report, j)


def _memory(s: Any) -> MemoryState:
    # Linked states carry their memory in the active component's state.
    inner = getattr(s, "state", s)
    return inner.m


class SumAsmMatcher(StateMatcher):
    """Relates the assembly summation spec to sum_g.ma.

    Between entry and return g keeps i in RBX and owns one private frame
    holding the caller's RSP, RBX and RA at offsets 0, 8 and 16.
    """

    name = "sum-asm"

    def match(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> MatchResult:
        report = CheckReport(self.name)
        assert isinstance(s2, AsmState)
        if isinstance(s1, (specs.SumAsmSpec.Callf, specs.SumAsmSpec.Returnf)):
            self._frame(report, ctx, j, s1.i, s2)
        if isinstance(s1, specs.SumAsmSpec.Returnf):
            report.check(value_inject_check(j, s1.r, s2.rs[Reg.RAX]), "result",
                         "RAX does not hold the result of f")
        report.merge(mem_inj_check(j, s1.m, s2.m), "mem-inj:")
        return MatchResult(report, j)

    def _frame(self, report: CheckReport, ctx: MatchContext, j: Meminj, i: IntVal,
               s2: AsmState) -> None:
        q = ctx.query_tgt
        assert isinstance(q, AQuery)
        report.check(s2.rs[Reg.RBX] == i, "rbx", "RBX does not hold i")
        sp = s2.rs[Reg.RSP]
        if not report.check(isinstance(sp, Ptr) and sp.offset == 0, "sp", "RSP is not a frame"):
            return
        assert isinstance(sp, Ptr)
        report.check(not j.preimages(sp.block), "frame", "the frame is visible to the source", [sp.block])
        saved = [(0, q.rs[Reg.RSP], "RSP"), (8, q.rs[Reg.RBX], "RBX"), (16, q.rs[Reg.RA], "RA")]
        for offset, expected, reg in saved:
            report.check(s2.m.contents(sp.block, offset) == expected, "frame",
                         f"the frame does not hold the caller's {reg}", [sp.block, offset])
