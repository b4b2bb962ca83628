"""Small-step semantics of MiniC, open at the C interface.

One step executes one statement. Calls go through a Callstate: a callee the
program defines is entered directly; any other function pointer makes the
Callstate an external call whose reply resumes as a Returnstate.
"""
import logging
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Tuple

import mast
from environment import Environment
from errors import MemoryPermissionError
from linker import symbol_table
from mem import IntVal, MemoryState, Ptr, UNDEF, Value
from sem import (WORD, CQuery, CReply, Interface, OpenLTS, Query, Reply, Signature,
                 SymbolKind, SymbolTable, value_has_type)

LOGGER = logging.getLogger("refine.evaluator")


@dataclass(frozen=True)
class Frame:
    function: mast.FunctionDecl
    env: Environment


@dataclass(frozen=True)
class Suspended:
    """A caller waiting for its callee; dest receives the returned value."""
    frame: Frame
    kont: Tuple[mast.Statement, ...]
    dest: Optional[str]


Stack = Tuple[Suspended, ...]


@dataclass(frozen=True)
class Callstate:
    vf: Value
    args: Tuple[Value, ...]
    sg: Signature
    m: MemoryState
    stack: Stack = ()


@dataclass(frozen=True)
class Execstate:
    frame: Frame
    kont: Tuple[mast.Statement, ...]
    m: MemoryState
    stack: Stack = ()


@dataclass(frozen=True)
class Returnstate:
    v: Value
    m: MemoryState
    stack: Stack = ()


class Stuck(Exception):
    # Internal: unwinds a statement that cannot execute.
    pass


class MiniCSemantics(OpenLTS):
    incoming = Interface.C
    outgoing = Interface.C

    def __init__(self, program: mast.Program, se: SymbolTable, name: str = "minic") -> None:
        super().__init__(se)
        self.program = program
        self.name = name
        self._functions: Dict[str, mast.FunctionDecl] = {f.name: f for f in program.functions()}

    def defined_symbols(self) -> FrozenSet[str]:
        return frozenset(self._functions) | frozenset(g.name for g in self.program.globals())

    def accepts(self, q: Query) -> bool:
        if not isinstance(q, CQuery):
            return False
        fn = self._callee(q.vf)
        if fn is None or fn.sg != q.sg or len(q.args) != len(fn.params):
            return False
        return all(value_has_type(v, p.type_) for v, p in zip(q.args, fn.params))

    def initial_state(self, q: Query) -> Callstate:
        assert isinstance(q, CQuery)
        return Callstate(q.vf, tuple(q.args), q.sg, q.m)

    def at_external(self, s: object) -> Optional[CQuery]:
        if isinstance(s, Callstate) and self._callee(s.vf) is None:
            return CQuery(s.vf, s.sg, s.args, s.m)
        return None

    def resume(self, s: object, r: Reply) -> Optional[Returnstate]:
        if self.at_external(s) is None or not isinstance(r, CReply):
            return None
        assert isinstance(s, Callstate)
        return Returnstate(r.res, r.m, s.stack)

    def final_reply(self, s: object) -> Optional[CReply]:
        if isinstance(s, Returnstate) and not s.stack:
            return CReply(s.v, s.m)
        return None

    def step(self, s: object) -> Optional[object]:
        try:
            if isinstance(s, Callstate):
                return self._enter(s)
            if isinstance(s, Execstate):
                return self._exec(s)
            if isinstance(s, Returnstate):
                return self._return_to_caller(s)
        except (Stuck, MemoryPermissionError) as ex:
            LOGGER.debug("%s stuck: %s", self.name, ex)
        return None

    def _callee(self, vf: Value) -> Optional[mast.FunctionDecl]:
        name = self.se.function_name(vf)
        return self._functions.get(name) if name is not None else None

    def _enter(self, s: Callstate) -> Optional[Execstate]:
        fn = self._callee(s.vf)
        if fn is None:
            return None
        m = s.m
        env = Environment()
        for param, arg in zip(fn.params, s.args):
            if param.register:
                env = env.set(param.name, arg)
            else:
                m, b = m.alloc(0, WORD)
                m = m.store(b, 0, arg)
                env = env.bind(param.name, b)
        for local in fn.locals:
            if local.register:
                env = env.set(local.name, UNDEF)
            else:
                m, b = m.alloc(0, WORD)
                env = env.bind(local.name, b)
        return Execstate(Frame(fn, env), tuple(fn.body.statements), m, s.stack)

    def _free_frame(self, frame: Frame, m: MemoryState) -> MemoryState:
        for b in frame.env.blocks().values():
            m = m.free(b, 0, WORD)
        return m

    def _return_to_caller(self, s: Returnstate) -> Optional[Execstate]:
        if not s.stack:
            return None
        caller, rest = s.stack[-1], s.stack[:-1]
        frame, m = caller.frame, s.m
        if caller.dest is not None:
            frame, m = self._assign(frame, caller.dest, s.v, m)
        return Execstate(frame, caller.kont, m, rest)

    def _exec(self, s: Execstate) -> object:
        frame, m = s.frame, s.m
        if not s.kont:
            # Falling off the end of a function returns nothing.
            return Returnstate(UNDEF, self._free_frame(frame, m), s.stack)
        stmt, rest = s.kont[0], s.kont[1:]

        if isinstance(stmt, mast.AssignStatement):
            value = self._eval(stmt.value, frame, m)
            frame, m = self._assign(frame, stmt.name.value, value, m)
            return Execstate(frame, rest, m, s.stack)
        if isinstance(stmt, mast.StoreStatement):
            address = self._eval(stmt.address, frame, m)
            value = self._eval(stmt.value, frame, m)
            if not isinstance(address, Ptr):
                raise Stuck(f"store through {address.string()}")
            return Execstate(frame, rest, m.store(address.block, address.offset, value), s.stack)
        if isinstance(stmt, mast.IndexAssignStatement):
            b, o = self._element(stmt.array.value, stmt.index, frame, m)
            value = self._eval(stmt.value, frame, m)
            return Execstate(frame, rest, m.store(b, o, value), s.stack)
        if isinstance(stmt, mast.IfStatement):
            if self._truthy(self._eval(stmt.condition, frame, m)):
                branch = stmt.consequence.statements
            else:
                branch = stmt.alternative.statements if stmt.alternative is not None else []
            return Execstate(frame, tuple(branch) + rest, m, s.stack)
        if isinstance(stmt, mast.WhileStatement):
            if self._truthy(self._eval(stmt.condition, frame, m)):
                return Execstate(frame, tuple(stmt.body.statements) + (stmt,) + rest, m, s.stack)
            return Execstate(frame, rest, m, s.stack)
        if isinstance(stmt, mast.ReturnStatement):
            value = UNDEF if stmt.return_value is None else self._eval(stmt.return_value, frame, m)
            return Returnstate(value, self._free_frame(frame, m), s.stack)
        if isinstance(stmt, mast.CallStatement):
            return self._call(stmt, rest, s)

        raise NotImplementedError(type(stmt).__name__)

    def _call(self, stmt: mast.CallStatement, rest: Tuple[mast.Statement, ...],
              s: Execstate) -> Callstate:
        vf = self._eval(stmt.call.function, s.frame, s.m)
        name = self.se.function_name(vf)
        symbol = self.se.lookup(name) if name is not None else None
        if symbol is None or symbol.sg is None:
            raise Stuck(f"call through {vf.string()}")
        args = tuple(self._eval(a, s.frame, s.m) for a in stmt.call.arguments)
        if len(args) != len(symbol.sg.params):
            raise Stuck(f"{name} expects {len(symbol.sg.params)} arguments")
        dest = stmt.dest.value if stmt.dest is not None else None
        caller = Suspended(s.frame, rest, dest)
        return Callstate(vf, args, symbol.sg, s.m, s.stack + (caller,))

    def _assign(self, frame: Frame, name: str, value: Value,
                m: MemoryState) -> Tuple[Frame, MemoryState]:
        if frame.env.has_temp(name):
            return Frame(frame.function, frame.env.set(name, value)), m
        b = frame.env.block(name)
        if b is None:
            b = self._global_block(name)
        return frame, m.store(b, 0, value)

    def _global_block(self, name: str) -> int:
        symbol = self.se.lookup(name)
        if symbol is None or symbol.kind != SymbolKind.VAR:
            raise Stuck(f"{name} is not a variable")
        return symbol.block

    def _element(self, array: str, index: mast.Expression, frame: Frame,
                 m: MemoryState) -> Tuple[int, int]:
        i = self._eval(index, frame, m)
        if not isinstance(i, IntVal):
            raise Stuck(f"index {i.string()} into {array}")
        return self._global_block(array), WORD * i.value

    def _truthy(self, value: Value) -> bool:
        if not isinstance(value, IntVal):
            raise Stuck(f"condition {value.string()}")
        return value.value != 0

    def _eval(self, node: mast.Expression, frame: Frame, m: MemoryState) -> Value:
        if isinstance(node, mast.IntegerLiteral):
            return IntVal(node.value)
        if isinstance(node, mast.Identifier):
            return self._eval_identifier(node.value, frame, m)
        if isinstance(node, mast.AddrOf):
            b = frame.env.block(node.name.value)
            if b is None:
                if frame.env.has_temp(node.name.value):
                    raise Stuck(f"{node.name.value} has no address")
                b = self._global_block(node.name.value)
            return Ptr(b, 0)
        if isinstance(node, mast.Deref):
            address = self._eval(node.operand, frame, m)
            if not isinstance(address, Ptr):
                raise Stuck(f"load through {address.string()}")
            return m.load(address.block, address.offset)
        if isinstance(node, mast.IndexExpression):
            b, o = self._element(node.array.value, node.index, frame, m)
            return m.load(b, o)
        if isinstance(node, mast.InfixExpression):
            left = self._eval(node.left, frame, m)
            right = self._eval(node.right, frame, m)
            return self._eval_infix_expression(node.operator, left, right)

        raise Stuck(f"cannot evaluate {node.string()}")

    def _eval_identifier(self, name: str, frame: Frame, m: MemoryState) -> Value:
        # Register variables shadow memory-resident ones, which shadow globals.
        value = frame.env.get(name)
        if value is not None:
            return value
        b = frame.env.block(name)
        if b is not None:
            return m.load(b, 0)
        symbol = self.se.lookup(name)
        if symbol is None:
            raise Stuck(f"unknown identifier {name}")
        if symbol.kind == SymbolKind.FUNC or symbol.size > 1:
            return Ptr(symbol.block, 0)
        return m.load(symbol.block, 0)

    def _eval_infix_expression(self, operator: str, left: Value, right: Value) -> Value:
        if operator == "==":
            if isinstance(left, IntVal) and isinstance(right, IntVal) or \
               isinstance(left, Ptr) and isinstance(right, Ptr):
                return IntVal(1 if left == right else 0)
            raise Stuck(f"comparing {left.string()} with {right.string()}")
        if not isinstance(left, IntVal) or not isinstance(right, IntVal):
            raise Stuck(f"{left.string()} {operator} {right.string()}")
        if operator == "+":
            return IntVal(left.value + right.value)
        if operator == "-":
            return IntVal(left.value - right.value)
        if operator == "^":
            return IntVal(left.value ^ right.value)
        if operator == "<":
            return IntVal(1 if left.value < right.value else 0)
        raise Stuck(f"unknown operator {operator}")


def sem_minic(program: mast.Program, se: Optional[SymbolTable] = None,
              name: str = "minic") -> MiniCSemantics:
    if se is None:
        se = symbol_table([program])
    return MiniCSemantics(program, se, name)


def frames(s: object) -> List[Frame]:
    """Active frame first, then the suspended callers innermost-first."""
    out: List[Frame] = []
    if isinstance(s, Execstate):
        out.append(s.frame)
    stack: Stack = getattr(s, "stack", ())
    out.extend(c.frame for c in reversed(stack))
    return out
