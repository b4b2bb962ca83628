"""MiniAsm semantics, open at the assembly interface.

The program counter is Ptr(function block, instruction index). Jumping to
offset 0 of a function this program does not define is an external call;
reaching the return address the incoming query supplied is the end.
"""
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

from asm import (AsmFunction, AsmProgram, ImmOp, Instr, LabelOp, MemOp, Op, Operand, RegOp,
                 SymOp)
from errors import LinkError, MemoryPermissionError
from linker import symbol_table
from mem import IntVal, MemoryState, Ptr, Undef, Value
from sem import (WORD, AQuery, AReply, Interface, OpenLTS, Query, Reg, RegSet, Reply,
                 SymbolKind, SymbolTable)

LOGGER = logging.getLogger("refine.asm_evaluator")

Flags = Optional[Tuple[Value, Value]]


@dataclass(frozen=True)
class AsmState:
    rs: RegSet
    m: MemoryState
    entry_ra: Value
    flags: Flags = None


class Stuck(Exception):
    pass


class MiniAsmSemantics(OpenLTS):
    incoming = Interface.ASM
    outgoing = Interface.ASM

    def __init__(self, program: AsmProgram, se: SymbolTable, name: str = "miniasm") -> None:
        super().__init__(se)
        self.program = program
        self.name = name
        self._functions: Dict[int, AsmFunction] = {}
        for fn in program.functions():
            symbol = se.lookup(fn.name)
            if symbol is None or symbol.kind != SymbolKind.FUNC:
                raise LinkError(f"{fn.name} is missing from the symbol table")
            self._functions[symbol.block] = fn

    def defined_symbols(self) -> FrozenSet[str]:
        return frozenset(f.name for f in self.program.functions()) | \
               frozenset(g.name for g in self.program.globals())

    def _defines(self, v: Value) -> bool:
        return isinstance(v, Ptr) and v.offset == 0 and v.block in self._functions

    def accepts(self, q: Query) -> bool:
        if not isinstance(q, AQuery):
            return False
        return self._defines(q.rs[Reg.PC]) and isinstance(q.rs[Reg.RSP], Ptr) and \
            not isinstance(q.rs[Reg.RA], Undef)

    def initial_state(self, q: Query) -> AsmState:
        assert isinstance(q, AQuery)
        return AsmState(q.rs, q.m, q.rs[Reg.RA])

    def final_reply(self, s: object) -> Optional[AReply]:
        if isinstance(s, AsmState) and s.rs[Reg.PC] == s.entry_ra:
            return AReply(s.rs, s.m)
        return None

    def at_external(self, s: object) -> Optional[AQuery]:
        if not isinstance(s, AsmState) or self.final_reply(s) is not None:
            return None
        pc = s.rs[Reg.PC]
        if isinstance(pc, Ptr) and pc.offset == 0 and pc.block not in self._functions and \
                self.se.function_name(pc) is not None:
            return AQuery(s.rs, s.m)
        return None

    def resume(self, s: object, r: Reply) -> Optional[AsmState]:
        if self.at_external(s) is None or not isinstance(r, AReply):
            return None
        assert isinstance(s, AsmState)
        return AsmState(r.rs, r.m, s.entry_ra)

    def step(self, s: object) -> Optional[AsmState]:
        if not isinstance(s, AsmState) or self.final_reply(s) is not None:
            return None
        pc = s.rs[Reg.PC]
        if not isinstance(pc, Ptr) or pc.block not in self._functions:
            return None
        fn = self._functions[pc.block]
        if not 0 <= pc.offset < len(fn.code):
            return None
        try:
            return self._exec(fn, fn.code[pc.offset], s)
        except (Stuck, MemoryPermissionError) as ex:
            LOGGER.debug("%s stuck at %s[%d]: %s", self.name, fn.name, pc.offset, ex)
            return None

    def _address(self, operand: Operand, rs: RegSet) -> Tuple[int, int]:
        if isinstance(operand, MemOp):
            base = rs[operand.base]
            if not isinstance(base, Ptr):
                raise Stuck(f"{operand.string()} is not an address")
            return base.block, base.offset + operand.ofs
        if isinstance(operand, SymOp):
            symbol = self.se.lookup(operand.name)
            if symbol is None:
                raise Stuck(f"unknown symbol {operand.name}")
            return symbol.block, WORD * operand.index
        raise Stuck(f"{operand.string()} is not a memory operand")

    def _read(self, operand: Operand, s: AsmState) -> Value:
        if isinstance(operand, RegOp):
            return s.rs[operand.reg]
        if isinstance(operand, ImmOp):
            return IntVal(operand.value)
        b, o = self._address(operand, s.rs)
        return s.m.load(b, o)

    def _int(self, v: Value) -> int:
        if not isinstance(v, IntVal):
            raise Stuck(f"{v.string()} is not an integer")
        return v.value

    def _exec(self, fn: AsmFunction, ins: Instr, s: AsmState) -> AsmState:
        rs, m, flags = s.rs, s.m, s.flags
        pc = rs[Reg.PC]
        assert isinstance(pc, Ptr)
        next_pc: Value = Ptr(pc.block, pc.offset + 1)
        args = ins.args

        if ins.op == Op.PMOV:
            value = self._read(args[0], s)
            dst = args[1]
            if isinstance(dst, RegOp):
                rs = rs.set(dst.reg, value)
            else:
                b, o = self._address(dst, rs)
                m = m.store(b, o, value)
        elif ins.op == Op.PCONST:
            rs = rs.set(self._reg(args[1]), IntVal(self._imm(args[0])))
        elif ins.op in (Op.PXOR, Op.PXORI):
            dst = self._reg(args[1])
            rs = rs.set(dst, IntVal(self._int(rs[dst]) ^ self._int(self._read(args[0], s))))
        elif ins.op == Op.PADD:
            dst = self._reg(args[1])
            rs = rs.set(dst, self._add(rs[dst], self._read(args[0], s)))
        elif ins.op == Op.PSUB:
            dst = self._reg(args[1])
            left, right = rs[dst], self._read(args[0], s)
            if isinstance(left, Ptr):
                rs = rs.set(dst, Ptr(left.block, left.offset - self._int(right)))
            else:
                rs = rs.set(dst, IntVal(self._int(left) - self._int(right)))
        elif ins.op == Op.PLEA:
            rs = rs.set(self._reg(args[1]), self._lea(args[0], rs))
        elif ins.op == Op.PTEST:
            flags = (self._test(self._read(args[0], s), self._read(args[1], s)), IntVal(0))
        elif ins.op == Op.PCMP:
            flags = (self._read(args[1], s), self._read(args[0], s))
        elif ins.op in (Op.PJE, Op.PJNE, Op.PJL):
            if self._condition(ins.op, flags):
                next_pc = self._label(fn, pc, args[0])
        elif ins.op == Op.PJMP:
            next_pc = self._label(fn, pc, args[0])
        elif ins.op == Op.PCALL:
            target = args[0]
            if isinstance(target, RegOp):
                callee = rs[target.reg]
            else:
                assert isinstance(target, SymOp)
                symbol = self.se.lookup(target.name)
                if symbol is None or symbol.kind != SymbolKind.FUNC:
                    raise Stuck(f"Pcall to {target.name}")
                callee = Ptr(symbol.block, 0)
            if self.se.function_name(callee) is None:
                raise Stuck(f"Pcall to {callee.string()}")
            rs = rs.set(Reg.RA, next_pc)
            next_pc = callee
        elif ins.op == Op.PRET:
            if isinstance(rs[Reg.RA], Undef):
                raise Stuck("Pret without a return address")
            next_pc = rs[Reg.RA]
        elif ins.op == Op.PALLOCFRAME:
            size, ra, link = (self._imm(a) for a in args)
            m, b = m.alloc(0, size)
            m = m.store(b, link, rs[Reg.RSP])
            m = m.store(b, ra, rs[Reg.RA])
            rs = rs.set(Reg.RSP, Ptr(b, 0))
        elif ins.op == Op.PFREEFRAME:
            size, ra, link = (self._imm(a) for a in args)
            sp = rs[Reg.RSP]
            if not isinstance(sp, Ptr) or sp.offset != 0:
                raise Stuck(f"Pfreeframe with RSP {sp.string()}")
            rs = rs.set(Reg.RA, m.load(sp.block, ra)).set(Reg.RSP, m.load(sp.block, link))
            m = m.free(sp.block, 0, size)
        else:
            raise NotImplementedError(ins.op.value)

        return AsmState(rs.set(Reg.PC, next_pc), m, s.entry_ra, flags)

    def _reg(self, operand: Operand) -> Reg:
        assert isinstance(operand, RegOp)
        return operand.reg

    def _imm(self, operand: Operand) -> int:
        assert isinstance(operand, ImmOp)
        return operand.value

    def _add(self, left: Value, right: Value) -> Value:
        if isinstance(left, Ptr) and isinstance(right, IntVal):
            return Ptr(left.block, left.offset + right.value)
        if isinstance(left, IntVal) and isinstance(right, Ptr):
            return Ptr(right.block, right.offset + left.value)
        return IntVal(self._int(left) + self._int(right))

    def _lea(self, operand: Operand, rs: RegSet) -> Value:
        # On an integer base, lea is plain addition.
        if isinstance(operand, MemOp) and isinstance(rs[operand.base], IntVal):
            return IntVal(self._int(rs[operand.base]) + operand.ofs)
        b, o = self._address(operand, rs)
        return Ptr(b, o)

    def _test(self, a: Value, b: Value) -> Value:
        if isinstance(a, IntVal) and isinstance(b, IntVal):
            return IntVal(a.value & b.value)
        if isinstance(a, Ptr) and a == b:
            return IntVal(1)
        raise Stuck(f"Ptest {a.string()} {b.string()}")

    def _condition(self, op: Op, flags: Flags) -> bool:
        if flags is None:
            raise Stuck(f"{op.value} without flags")
        a, b = flags
        if op == Op.PJL:
            return self._int(a) < self._int(b)
        if not (isinstance(a, IntVal) and isinstance(b, IntVal) or
                isinstance(a, Ptr) and isinstance(b, Ptr)):
            raise Stuck(f"{op.value} on {a.string()} and {b.string()}")
        return (a == b) == (op == Op.PJE)

    def _label(self, fn: AsmFunction, pc: Ptr, operand: Operand) -> Ptr:
        assert isinstance(operand, LabelOp)
        return Ptr(pc.block, fn.labels[operand.name])


def sem_miniasm(program: AsmProgram, se: Optional[SymbolTable] = None,
                name: str = "miniasm") -> MiniAsmSemantics:
    if se is None:
        se = symbol_table([program])
    return MiniAsmSemantics(program, se, name)


def initial_regs(pc: Value, sp: Value, ra: Value, args: Tuple[Value, ...] = ()) -> RegSet:
    rs = RegSet().set(Reg.PC, pc).set(Reg.RSP, sp).set(Reg.RA, ra)
    for reg, v in zip((Reg.RDI, Reg.RSI), args):
        rs = rs.set(reg, v)
    return rs

