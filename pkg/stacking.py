"""Code generation from MiniC to MiniAsm with explicit stack frames.

Every function gets one frame:

    0                link to the caller's RSP
    8                return address
    16 + 8k          outgoing stack arguments
    ...              saved RBX
    ...              one slot per parameter and local
    ...              scratch slots for intermediate values

Expressions are evaluated into RAX. Nothing is kept in registers across
statements, so calls only need RBX saved and restored.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Union

import mast
from asm import (AsmDecl, AsmExtern, AsmFunction, AsmGlobal, AsmProgram, ImmOp, Instr, LabelOp,
                 MemOp, Op, Operand, RegOp, SymOp, assemble, instr)
from conv import chain
from errors import CompileError
from evaluator import Callstate, Frame, Returnstate, frames
from inject import Meminj, mem_inj_check, value_inject_check
from matchers import extend_checked
from mem import MemoryState, Ptr, Value
from report import CheckReport
from sem import ARG_REGS, WORD, AQuery, Reg
from simulation import MatchContext, MatchResult, PassOutput, StateMatcher

LOGGER = logging.getLogger("refine.stacking")

LINK_OFFSET = 0
RA_OFFSET = WORD
RETURN_LABEL = "ret"

RAX, RSI, RBX = RegOp(Reg.RAX), RegOp(Reg.RSI), RegOp(Reg.RBX)


@dataclass
class FrameLayout:
    function: str
    size: int
    outgoing: int
    rbx: int
    slots: Dict[str, int] = field(default_factory=dict)
    scratch_base: int = 0
    scratch: int = 0

    def scratch_slot(self, depth: int) -> int:
        assert depth < self.scratch, f"{self.function}: scratch slot {depth} out of range"
        return self.scratch_base + WORD * depth

    def to_json(self) -> Dict[str, Any]:
        return {"function": self.function, "size": self.size, "outgoing": self.outgoing,
                "rbx": self.rbx, "slots": dict(self.slots), "scratch": self.scratch}


def stack_arg_offset(k: int) -> int:
    # Position of argument k >= len(ARG_REGS) relative to the caller's RSP.
    return 2 * WORD + WORD * (k - len(ARG_REGS))


def _need(expr: mast.Expression) -> int:
    """Scratch slots needed to evaluate expr."""
    if isinstance(expr, mast.Deref):
        return _need(expr.operand)
    if isinstance(expr, mast.IndexExpression):
        return _need(expr.index)
    if isinstance(expr, mast.InfixExpression):
        return max(_need(expr.right), 1 + _need(expr.left))
    return 0


def _call_need(call: mast.CallExpression, direct: bool) -> int:
    need = 0
    for k, arg in enumerate(call.arguments):
        need = max(need, k + max(_need(arg), 1))
    if not direct:
        n = len(call.arguments)
        need = max(need, n + max(_need(call.function), 1))
    return need


class _FunctionGen:
    def __init__(self, fn: mast.FunctionDecl, program: mast.Program) -> None:
        self.fn = fn
        self.program = program
        self.locals = {v.name: v for v in fn.variables()}
        self.callables = {f.name for f in program.functions()} | {e.name for e in program.externs()}
        self.globals = {g.name: g for g in program.globals()}
        self.items: List[Union[Instr, str]] = []
        self.counter = 0
        self.layout = self._layout()

    def _direct(self, call: mast.CallExpression) -> Optional[str]:
        f = call.function
        if isinstance(f, mast.Identifier) and f.value not in self.locals and f.value in self.callables:
            return f.value
        return None

    def _layout(self) -> FrameLayout:
        outgoing, scratch = 0, 0
        for stmt in mast.walk_statements(self.fn.body):
            if isinstance(stmt, mast.CallStatement):
                outgoing = max(outgoing, len(stmt.call.arguments) - len(ARG_REGS))
                scratch = max(scratch, _call_need(stmt.call, self._direct(stmt.call) is not None))
            elif isinstance(stmt, mast.StoreStatement):
                scratch = max(scratch, _need(stmt.value), 1 + _need(stmt.address))
            elif isinstance(stmt, mast.IndexAssignStatement):
                scratch = max(scratch, _need(stmt.value), 1 + _need(stmt.index))
            else:
                scratch = max([scratch] + [_need(e) for e in stmt.expressions()])
        rbx = 2 * WORD + WORD * outgoing
        slots = {v.name: rbx + WORD * (k + 1) for k, v in enumerate(self.fn.variables())}
        scratch_base = rbx + WORD * (len(slots) + 1)
        return FrameLayout(self.fn.name, scratch_base + WORD * scratch, outgoing, rbx, slots,
                           scratch_base, scratch)

    def emit(self, op: Op, *args: Operand) -> None:
        self.items.append(instr(op, *args))

    def label(self) -> str:
        name = f"l{self.counter}"
        self.counter += 1
        return name

    def slot(self, name: str) -> MemOp:
        return MemOp(Reg.RSP, self.layout.slots[name])

    def scratch(self, depth: int) -> MemOp:
        return MemOp(Reg.RSP, self.layout.scratch_slot(depth))

    def generate(self) -> AsmFunction:
        size = ImmOp(self.layout.size)
        frame_args = (size, ImmOp(RA_OFFSET), ImmOp(LINK_OFFSET))
        self.emit(Op.PALLOCFRAME, *frame_args)
        self.emit(Op.PMOV, RBX, MemOp(Reg.RSP, self.layout.rbx))
        for k, param in enumerate(self.fn.params):
            if k < len(ARG_REGS):
                self.emit(Op.PMOV, RegOp(ARG_REGS[k]), self.slot(param.name))
            else:
                self.emit(Op.PMOV, MemOp(Reg.RSP, LINK_OFFSET), RAX)
                self.emit(Op.PMOV, MemOp(Reg.RAX, stack_arg_offset(k)), RAX)
                self.emit(Op.PMOV, RAX, self.slot(param.name))
        self.block(self.fn.body)
        self.items.append(RETURN_LABEL)
        self.emit(Op.PMOV, MemOp(Reg.RSP, self.layout.rbx), RBX)
        self.emit(Op.PFREEFRAME, *frame_args)
        self.emit(Op.PRET)
        return assemble(self.fn.name, self.fn.sg, self.items)

    def block(self, block: mast.BlockStatement) -> None:
        for stmt in block.statements:
            self.statement(stmt)

    def store_to(self, name: str) -> None:
        if name in self.locals:
            self.emit(Op.PMOV, RAX, self.slot(name))
        elif name in self.globals:
            self.emit(Op.PMOV, RAX, SymOp(name))
        else:
            raise CompileError(f"{self.fn.name}: cannot assign to {name}")

    def statement(self, stmt: mast.Statement) -> None:
        if isinstance(stmt, mast.AssignStatement):
            self.expression(stmt.value, 0)
            self.store_to(stmt.name.value)
        elif isinstance(stmt, mast.StoreStatement):
            self.expression(stmt.value, 0)
            self.emit(Op.PMOV, RAX, self.scratch(0))
            self.expression(stmt.address, 1)
            self.emit(Op.PMOV, self.scratch(0), RSI)
            self.emit(Op.PMOV, RSI, MemOp(Reg.RAX, 0))
        elif isinstance(stmt, mast.IndexAssignStatement):
            self.expression(stmt.value, 0)
            self.emit(Op.PMOV, RAX, self.scratch(0))
            self.element_address(stmt.array.value, stmt.index, 1)
            self.emit(Op.PMOV, self.scratch(0), RAX)
            self.emit(Op.PMOV, RAX, MemOp(Reg.RSI, 0))
        elif isinstance(stmt, mast.IfStatement):
            otherwise = self.label()
            self.expression(stmt.condition, 0)
            self.emit(Op.PTEST, RAX, RAX)
            self.emit(Op.PJE, LabelOp(otherwise))
            self.block(stmt.consequence)
            if stmt.alternative is not None:
                end = self.label()
                self.emit(Op.PJMP, LabelOp(end))
                self.items.append(otherwise)
                self.block(stmt.alternative)
                self.items.append(end)
            else:
                self.items.append(otherwise)
        elif isinstance(stmt, mast.WhileStatement):
            head, end = self.label(), self.label()
            self.items.append(head)
            self.expression(stmt.condition, 0)
            self.emit(Op.PTEST, RAX, RAX)
            self.emit(Op.PJE, LabelOp(end))
            self.block(stmt.body)
            self.emit(Op.PJMP, LabelOp(head))
            self.items.append(end)
        elif isinstance(stmt, mast.ReturnStatement):
            if stmt.return_value is not None:
                self.expression(stmt.return_value, 0)
            self.emit(Op.PJMP, LabelOp(RETURN_LABEL))
        elif isinstance(stmt, mast.CallStatement):
            self.call(stmt)
        else:
            raise CompileError(f"cannot compile {stmt.string()}")

    def call(self, stmt: mast.CallStatement) -> None:
        call = stmt.call
        n = len(call.arguments)
        for k, arg in enumerate(call.arguments):
            self.expression(arg, k)
            self.emit(Op.PMOV, RAX, self.scratch(k))
        direct = self._direct(call)
        if direct is None:
            self.expression(call.function, n)
            self.emit(Op.PMOV, RAX, self.scratch(n))
        for k in range(len(ARG_REGS), n):
            self.emit(Op.PMOV, self.scratch(k), RAX)
            self.emit(Op.PMOV, RAX, MemOp(Reg.RSP, stack_arg_offset(k)))
        for k, reg in enumerate(ARG_REGS[:n]):
            self.emit(Op.PMOV, self.scratch(k), RegOp(reg))
        if direct is not None:
            self.emit(Op.PCALL, SymOp(direct))
        else:
            self.emit(Op.PMOV, self.scratch(n), RAX)
            self.emit(Op.PCALL, RAX)
        if stmt.dest is not None:
            self.store_to(stmt.dest.value)

    def element_address(self, array: str, index: mast.Expression, depth: int) -> None:
        # Leaves the address of array[index] in RSI.
        if array not in self.globals:
            raise CompileError(f"{self.fn.name}: {array} is not a global array")
        self.expression(index, depth)
        for _ in range(3):
            self.emit(Op.PADD, RAX, RAX)
        self.emit(Op.PLEA, SymOp(array), RSI)
        self.emit(Op.PADD, RAX, RSI)

    def expression(self, expr: mast.Expression, depth: int) -> None:
        if isinstance(expr, mast.IntegerLiteral):
            self.emit(Op.PCONST, ImmOp(expr.value), RAX)
        elif isinstance(expr, mast.Identifier):
            self.identifier(expr.value)
        elif isinstance(expr, mast.AddrOf):
            name = expr.name.value
            var = self.locals.get(name)
            if var is not None:
                if var.register:
                    raise CompileError(f"{self.fn.name}: register variable {name} has no address")
                self.emit(Op.PLEA, self.slot(name), RAX)
            elif name in self.globals or name in self.callables:
                self.emit(Op.PLEA, SymOp(name), RAX)
            else:
                raise CompileError(f"{self.fn.name}: unknown identifier {name}")
        elif isinstance(expr, mast.Deref):
            self.expression(expr.operand, depth)
            self.emit(Op.PMOV, MemOp(Reg.RAX, 0), RAX)
        elif isinstance(expr, mast.IndexExpression):
            self.element_address(expr.array.value, expr.index, depth)
            self.emit(Op.PMOV, MemOp(Reg.RSI, 0), RAX)
        elif isinstance(expr, mast.InfixExpression):
            self.infix(expr, depth)
        else:
            raise CompileError(f"{self.fn.name}: cannot compile {expr.string()}")

    def identifier(self, name: str) -> None:
        if name in self.locals:
            self.emit(Op.PMOV, self.slot(name), RAX)
            return
        g = self.globals.get(name)
        if g is not None:
            if g.cells > 1:
                self.emit(Op.PLEA, SymOp(name), RAX)
            else:
                self.emit(Op.PMOV, SymOp(name), RAX)
            return
        if name in self.callables:
            self.emit(Op.PLEA, SymOp(name), RAX)
            return
        raise CompileError(f"{self.fn.name}: unknown identifier {name}")

    def infix(self, expr: mast.InfixExpression, depth: int) -> None:
        self.expression(expr.right, depth)
        self.emit(Op.PMOV, RAX, self.scratch(depth))
        self.expression(expr.left, depth + 1)
        self.emit(Op.PMOV, self.scratch(depth), RSI)
        arithmetic = {"+": Op.PADD, "-": Op.PSUB, "^": Op.PXOR}
        jumps = {"==": Op.PJE, "<": Op.PJL}
        if expr.operator in arithmetic:
            self.emit(arithmetic[expr.operator], RSI, RAX)
        elif expr.operator in jumps:
            yes, end = self.label(), self.label()
            self.emit(Op.PCMP, RSI, RAX)
            self.emit(jumps[expr.operator], LabelOp(yes))
            self.emit(Op.PCONST, ImmOp(0), RAX)
            self.emit(Op.PJMP, LabelOp(end))
            self.items.append(yes)
            self.emit(Op.PCONST, ImmOp(1), RAX)
            self.items.append(end)
        else:
            raise CompileError(f"{self.fn.name}: unknown operator {expr.operator}")


class StackingMatcher(StateMatcher):
    """Relates MiniC states to MiniAsm states at calls and returns.

    The target frames are found by following the link slots from RSP; each
    holds the variables of one source frame, innermost first. Variables in
    memory blocks map into their slots; temporaries are related to the
    slot contents.
    """

    name = "stacking"

    def __init__(self, layouts: Dict[str, FrameLayout]) -> None:
        self.layouts = layouts

    def match(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> MatchResult:
        report = CheckReport(self.name)
        q = ctx.query_tgt
        assert isinstance(q, AQuery)
        if isinstance(s1, Callstate):
            report.check(value_inject_check(j, s1.vf, s2.rs[Reg.PC]), "pc", "PC not related to the callee")
        if isinstance(s1, Returnstate):
            report.check(value_inject_check(j, s1.v, s2.rs[Reg.RAX]), "result", "RAX not related to the result")
        if s1.stack:
            j = self._walk(report, j, frames(s1), s2.rs[Reg.RSP], s2.m, q)
        else:
            report.check(s2.rs[Reg.RSP] == q.rs[Reg.RSP], "sp", "RSP is not the caller's stack pointer")
        if report.ok:
            report.merge(mem_inj_check(j, s1.m, s2.m), "mem-inj:")
        return MatchResult(report, j)

    def _walk(self, report: CheckReport, j: Meminj, chain_: List[Frame], sp: Value,
              m: MemoryState, q: AQuery) -> Meminj:
        ra: Optional[Value] = None
        for frame in chain_:
            layout = self.layouts.get(frame.function.name)
            if layout is None:
                report.fail("frame", f"no layout for {frame.function.name}")
                return j
            if not isinstance(sp, Ptr) or sp.offset != 0:
                report.fail("sp", f"{frame.function.name} has no frame at {sp.string()}")
                return j
            fb = sp.block
            report.check(m.contents(fb, layout.rbx) == q.rs[Reg.RBX], "callee-save",
                         f"{frame.function.name} did not save the caller's RBX", [fb, layout.rbx])
            for var in frame.function.variables():
                slot = layout.slots[var.name]
                b1 = frame.env.block(var.name)
                if b1 is not None:
                    j = extend_checked(report, j, b1, fb, slot, "frame", f"block of {var.name}")
                    continue
                value = frame.env.get(var.name)
                if value is not None:
                    report.check(value_inject_check(j, value, m.contents(fb, slot)), "slot",
                                 f"{var.name} differs from its slot", [fb, slot])
            ra = m.contents(fb, RA_OFFSET)
            sp = m.contents(fb, LINK_OFFSET)
        report.check(sp == q.rs[Reg.RSP], "sp", "the frame chain does not end at the caller's RSP")
        report.check(ra == q.rs[Reg.RA], "ra", "the outermost frame does not return to the caller")
        return j


def _global(g: mast.GlobalDecl) -> AsmGlobal:
    init = list(g.init)
    if g.const:
        # Constant directives carry every cell.
        init = (init + [0] * g.cells)[:g.cells]
    return AsmGlobal(g.name, g.cells, init, g.const)


def stacking_codegen(program: mast.Program) -> PassOutput:
    declarations: List[AsmDecl] = []
    layouts: Dict[str, FrameLayout] = {}
    for d in program.declarations:
        if isinstance(d, mast.GlobalDecl):
            declarations.append(_global(d))
        elif isinstance(d, mast.ExternDecl):
            declarations.append(AsmExtern(d.name, d.sg))
        elif isinstance(d, mast.FunctionDecl):
            gen = _FunctionGen(d, program)
            declarations.append(gen.generate())
            layouts[d.name] = gen.layout
            LOGGER.debug("%s: frame of %d bytes", d.name, gen.layout.size)
    return PassOutput("stacking", AsmProgram(declarations), chain(["wt", "CAinjp"]),
                      StackingMatcher(layouts))
