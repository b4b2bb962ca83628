"""Language interfaces, open transition systems, semantic linking and traces."""
import logging
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum, unique
from typing import Any, Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple, Union

from errors import FuelExhausted, LinkError, ParseError, QueryRejected, StuckError
from inject import block_roots, reach_closure, value_roots
from mem import (IntVal, MemoryState, Permission, PermKind, Ptr, UNDEF, Undef, Value,
                 value_to_json)
from report import CheckReport

LOGGER = logging.getLogger("refine.sem")

WORD = 8


@unique
class Interface(Enum):
    C = "C"
    LTL = "LTL"
    MACH = "Mach"
    ASM = "Asm"


@unique
class Typ(Enum):
    INT = "int"
    PTR = "ptr"
    VOID = "void"


@dataclass(frozen=True)
class Signature:
    params: Tuple[Typ, ...]
    result: Typ

    def string(self) -> str:
        return "(" + ", ".join(t.value for t in self.params) + ") -> " + self.result.value


def parse_signature(text: str) -> Signature:
    try:
        params_text, result_text = text.split("->")
        params_text = params_text.strip()
        if not (params_text.startswith("(") and params_text.endswith(")")):
            raise ValueError(text)
        inner = params_text[1:-1].strip()
        params = tuple(Typ(p.strip()) for p in inner.split(",")) if inner else ()
        return Signature(params, Typ(result_text.strip()))
    except ValueError as ex:
        raise ParseError(f"malformed signature {text!r}") from ex


def value_has_type(v: Value, t: Typ) -> bool:
    if isinstance(v, Undef) or t == Typ.VOID:
        return True
    return isinstance(v, IntVal) if t == Typ.INT else isinstance(v, Ptr)


@dataclass(frozen=True)
class CQuery:
    vf: Value
    sg: Signature
    args: Tuple[Value, ...]
    m: MemoryState

    def to_json(self) -> Dict[str, Any]:
        return {"vf": value_to_json(self.vf), "sg": self.sg.string(),
                "args": [value_to_json(v) for v in self.args]}


@dataclass(frozen=True)
class CReply:
    res: Value
    m: MemoryState

    def to_json(self) -> Dict[str, Any]:
        return {"res": value_to_json(self.res)}


@unique
class Reg(Enum):
    RDI = "RDI"
    RSI = "RSI"
    RAX = "RAX"
    RBX = "RBX"
    RSP = "RSP"
    PC = "PC"
    RA = "RA"


CALLEE_SAVE = (Reg.RBX, Reg.RSP)
ARG_REGS = (Reg.RDI, Reg.RSI)


class RegSet:
    """A total map from registers to values; unset registers read as Undef."""

    def __init__(self, values: Optional[Dict[Reg, Value]] = None) -> None:
        self._values = {r: v for r, v in (values or {}).items() if not isinstance(v, Undef)}

    def __getitem__(self, r: Reg) -> Value:
        return self._values.get(r, UNDEF)

    def set(self, r: Reg, v: Value) -> "RegSet":
        values = dict(self._values)
        values[r] = v
        return RegSet(values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegSet):
            return NotImplemented
        return self._values == other._values

    def __hash__(self) -> int:
        return hash(frozenset(self._values.items()))

    def items(self) -> List[Tuple[Reg, Value]]:
        return [(r, self[r]) for r in Reg]

    def to_json(self) -> Dict[str, Any]:
        return {r.value: value_to_json(v) for r, v in self.items()}


@dataclass(frozen=True)
class AQuery:
    rs: RegSet
    m: MemoryState

    def to_json(self) -> Dict[str, Any]:
        return {"rs": self.rs.to_json()}


@dataclass(frozen=True)
class AReply:
    rs: RegSet
    m: MemoryState

    def to_json(self) -> Dict[str, Any]:
        return {"rs": self.rs.to_json()}


Query = Union[CQuery, AQuery]
Reply = Union[CReply, AReply]


def outgoing_arg_positions(sg: Signature, rs: RegSet) -> List[Tuple[int, int]]:
    sp = rs[Reg.RSP]
    extra = max(0, len(sg.params) - len(ARG_REGS))
    if not isinstance(sp, Ptr):
        return []
    return [(sp.block, sp.offset + 2 * WORD + WORD * k) for k in range(extra)]


def get_args(sg: Signature, rs: RegSet, m: MemoryState) -> Optional[List[Value]]:
    """Arguments per the two-register calling convention, or None if unreadable."""
    args: List[Value] = [rs[r] for r in ARG_REGS[:len(sg.params)]]
    extra = len(sg.params) - len(args)
    if extra == 0:
        return args
    if not isinstance(rs[Reg.RSP], Ptr):
        return None
    for b, o in outgoing_arg_positions(sg, rs):
        if not m.perm_at(b, o, PermKind.CUR, Permission.READABLE):
            return None
        args.append(m.contents(b, o))
    return args


@unique
class SymbolKind(Enum):
    FUNC = "func"
    VAR = "var"


@dataclass(frozen=True)
class Symbol:
    name: str
    block: int
    kind: SymbolKind
    read_only: bool = False
    init: Tuple[Value, ...] = ()
    size: int = 1
    sg: Optional[Signature] = None


class SymbolTable:
    """Global symbols with their blocks; shared by every module of a link."""

    def __init__(self, symbols: Iterable[Symbol] = ()) -> None:
        self._by_name: Dict[str, Symbol] = {}
        self._by_block: Dict[int, Symbol] = {}
        for s in symbols:
            self._add(s)

    def _add(self, s: Symbol) -> None:
        if s.name in self._by_name or s.block in self._by_block:
            raise LinkError(f"symbol {s.name} declared twice")
        self._by_name[s.name] = s
        self._by_block[s.block] = s

    @staticmethod
    def build(entries: Sequence[Tuple[str, SymbolKind, bool, Tuple[Value, ...], int, Optional[Signature]]]) -> "SymbolTable":
        table = SymbolTable()
        for index, (name, kind, read_only, init, size, sg) in enumerate(entries):
            table._add(Symbol(name, index + 1, kind, read_only, init, size, sg))
        return table

    def lookup(self, name: str) -> Optional[Symbol]:
        return self._by_name.get(name)

    def block_of(self, name: str) -> int:
        s = self._by_name.get(name)
        if s is None:
            raise KeyError(name)
        return s.block

    def by_block(self, b: int) -> Optional[Symbol]:
        return self._by_block.get(b)

    def symbols(self) -> List[Symbol]:
        return [self._by_block[b] for b in sorted(self._by_block)]

    def function_name(self, v: Value) -> Optional[str]:
        if isinstance(v, Ptr) and v.offset == 0:
            s = self._by_block.get(v.block)
            if s is not None and s.kind == SymbolKind.FUNC:
                return s.name
        return None

    def global_roots(self, m: MemoryState) -> List[Tuple[int, int]]:
        return block_roots(m, [s.block for s in self.symbols() if s.kind == SymbolKind.VAR])

    def __len__(self) -> int:
        return len(self._by_name)


def init_memory(se: SymbolTable) -> MemoryState:
    m = MemoryState.empty()
    for s in se.symbols():
        if s.kind == SymbolKind.FUNC:
            m, b = m.alloc(0, 1)
            m = m.drop_perm(b, 0, 1, Permission.NONEMPTY)
        else:
            m, b = m.alloc(0, WORD * s.size)
            for k, v in enumerate(s.init):
                m = m.store(b, WORD * k, v)
            perm = Permission.READABLE if s.read_only else Permission.WRITABLE
            m = m.drop_perm(b, 0, WORD * s.size, perm)
        assert b == s.block, "symbol blocks must be allocated in order"
    return m


def ro_valid_report(se: SymbolTable, m: MemoryState) -> CheckReport:
    report = CheckReport("ro-valid")
    for s in se.symbols():
        if s.kind != SymbolKind.VAR or not s.read_only:
            continue
        for k in range(s.size):
            o = WORD * k
            expected = s.init[k] if k < len(s.init) else UNDEF
            if not m.perm_at(s.block, o, PermKind.CUR, Permission.READABLE) or \
                    m.perm_at(s.block, o, PermKind.MAX, Permission.WRITABLE):
                report.fail("ro-perm", f"{s.name}[{k}] is not read-only data", [s.block, o])
            elif m.contents(s.block, o) != expected:
                report.fail("ro-value", f"{s.name}[{k}] differs from its initial value", [s.block, o])
    return report


def ro_valid(se: SymbolTable, m: MemoryState) -> bool:
    return ro_valid_report(se, m).ok


@unique
class Mode(Enum):
    INTERNAL = "internal"
    EXTERNAL = "external"
    FINAL = "final"


class OpenLTS(ABC):
    """An open transition system: D, I, step, X, Y and F as methods."""

    name = "lts"
    incoming = Interface.C
    outgoing = Interface.C

    def __init__(self, se: SymbolTable) -> None:
        self.se = se

    @abstractmethod
    def accepts(self, q: Query) -> bool:
        raise NotImplementedError

    @abstractmethod
    def initial_state(self, q: Query) -> Any:
        raise NotImplementedError

    @abstractmethod
    def step(self, s: Any) -> Optional[Any]:
        # None when no transition applies.
        raise NotImplementedError

    @abstractmethod
    def at_external(self, s: Any) -> Optional[Query]:
        raise NotImplementedError

    @abstractmethod
    def resume(self, s: Any, r: Reply) -> Optional[Any]:
        raise NotImplementedError

    @abstractmethod
    def final_reply(self, s: Any) -> Optional[Reply]:
        raise NotImplementedError

    @abstractmethod
    def defined_symbols(self) -> FrozenSet[str]:
        raise NotImplementedError

    def mode(self, s: Any) -> Mode:
        if self.final_reply(s) is not None:
            return Mode.FINAL
        if self.at_external(s) is not None:
            return Mode.EXTERNAL
        return Mode.INTERNAL

    def query_function(self, q: Query) -> Optional[str]:
        if isinstance(q, CQuery):
            return self.se.function_name(q.vf)
        return self.se.function_name(q.rs[Reg.PC])


@dataclass(frozen=True)
class LinkedState:
    active: int
    state: Any
    stack: Tuple[Tuple[int, Any], ...] = ()


class LinkedLTS(OpenLTS):
    """Semantic linking of components sharing one interface and symbol table."""

    def __init__(self, components: Sequence[OpenLTS]) -> None:
        super().__init__(components[0].se)
        self.components = list(components)
        self.incoming = components[0].incoming
        self.outgoing = components[0].outgoing
        self.name = " + ".join(c.name for c in components)
        seen: Dict[str, str] = {}
        for c in components:
            if c.incoming != self.incoming:
                raise LinkError(f"{c.name} is not open at the {self.incoming.value} interface")
            for symbol in c.defined_symbols():
                if symbol in seen:
                    raise LinkError(f"{symbol} is defined by both {seen[symbol]} and {c.name}")
                seen[symbol] = c.name

    def _acceptor(self, q: Query, exclude: int = -1) -> Optional[int]:
        for i, c in enumerate(self.components):
            if i != exclude and c.accepts(q):
                return i
        return None

    def accepts(self, q: Query) -> bool:
        return self._acceptor(q) is not None

    def initial_state(self, q: Query) -> LinkedState:
        i = self._acceptor(q)
        if i is None:
            raise QueryRejected("no component accepts the query")
        return LinkedState(i, self.components[i].initial_state(q))

    def step(self, s: LinkedState) -> Optional[LinkedState]:
        component = self.components[s.active]
        reply = component.final_reply(s.state)
        if reply is not None:
            if not s.stack:
                return None
            (caller, suspended), rest = s.stack[-1], s.stack[:-1]
            resumed = self.components[caller].resume(suspended, reply)
            return LinkedState(caller, resumed, rest) if resumed is not None else None
        q = component.at_external(s.state)
        if q is not None:
            callee = self._acceptor(q, s.active)
            if callee is None:
                return None
            started = self.components[callee].initial_state(q)
            return LinkedState(callee, started, s.stack + ((s.active, s.state),))
        nxt = component.step(s.state)
        return LinkedState(s.active, nxt, s.stack) if nxt is not None else None

    def at_external(self, s: LinkedState) -> Optional[Query]:
        q = self.components[s.active].at_external(s.state)
        if q is None or self._acceptor(q, s.active) is not None:
            return None
        return q

    def resume(self, s: LinkedState, r: Reply) -> Optional[LinkedState]:
        resumed = self.components[s.active].resume(s.state, r)
        return LinkedState(s.active, resumed, s.stack) if resumed is not None else None

    def final_reply(self, s: LinkedState) -> Optional[Reply]:
        if s.stack:
            return None
        return self.components[s.active].final_reply(s.state)

    def defined_symbols(self) -> FrozenSet[str]:
        out: FrozenSet[str] = frozenset()
        for c in self.components:
            out = out | c.defined_symbols()
        return out


def link_sem(l1: OpenLTS, l2: OpenLTS) -> LinkedLTS:
    return LinkedLTS([l1, l2])


@dataclass(frozen=True)
class ExternalCall:
    """What an environment sees when a program calls out."""
    name: Optional[str]
    vf: Value
    sg: Optional[Signature]
    args: Tuple[Value, ...]
    m: MemoryState
    se: SymbolTable
    index: int
    public: Optional[FrozenSet[int]] = None


class EnvStrategy(ABC):
    name = "env"

    @abstractmethod
    def respond(self, call: ExternalCall) -> Tuple[Value, MemoryState]:
        raise NotImplementedError


class SkipEnv(EnvStrategy):
    name = "skip"

    def respond(self, call: ExternalCall) -> Tuple[Value, MemoryState]:
        if call.sg is not None and call.sg.result == Typ.INT:
            return IntVal(0), call.m
        return UNDEF, call.m


class WriterEnv(EnvStrategy):
    """Writes seeded values into memory the callee could legitimately reach.

    mode "reachable" writes cells reachable from the arguments and the
    writable globals; mode "public" writes any writable cell of a public
    block. With alloc set, it also allocates a block and links it in.
    """
    name = "writer"

    def __init__(self, seed: int, mode: str = "reachable", alloc: bool = False, writes: int = 3) -> None:
        self.seed = seed
        self.mode = mode
        self.alloc = alloc
        self.writes = writes

    def _candidates(self, call: ExternalCall, m: MemoryState) -> List[Tuple[int, int]]:
        functions = {s.block for s in call.se.symbols() if s.kind == SymbolKind.FUNC}
        if self.mode == "public":
            blocks = set(m.block_ids())
        else:
            roots = value_roots(m, call.args) + call.se.global_roots(m)
            blocks = reach_closure(None, m, roots)
        if call.public is not None:
            blocks &= set(call.public)
        return [(b, o) for b in sorted(blocks - functions) for o in m.positions(b)
                if m.perm_at(b, o, PermKind.CUR, Permission.WRITABLE)]

    def respond(self, call: ExternalCall) -> Tuple[Value, MemoryState]:
        rng = random.Random(self.seed * 1000003 + call.index)
        m = call.m
        cells = self._candidates(call, m)
        reached = sorted({b for b, _ in cells})
        if self.alloc and cells and rng.random() < 0.5:
            m, b = m.alloc(0, WORD)
            m = m.store(b, 0, IntVal(rng.randint(0, 99)))
            host = rng.choice(cells)
            m = m.store(host[0], host[1], Ptr(b, 0))
            reached.append(b)
        for _ in range(min(self.writes, len(cells))):
            b, o = rng.choice(cells)
            if reached and rng.random() < 0.2:
                v: Value = Ptr(rng.choice(reached), 0)
            else:
                v = IntVal(rng.randint(-20, 99))
            m = m.store(b, o, v)
        result: Value = UNDEF
        if call.sg is not None and call.sg.result == Typ.INT:
            result = IntVal(rng.randint(0, 99))
        elif call.sg is not None and call.sg.result == Typ.PTR and reached:
            result = Ptr(rng.choice(reached), 0)
        return result, m


Handler = Callable[[ExternalCall], Tuple[Value, MemoryState]]


class FunctionEnv(EnvStrategy):
    """Answers calls to named functions with Python handlers."""
    name = "functions"

    def __init__(self, handlers: Dict[str, Handler], fallback: Optional[EnvStrategy] = None) -> None:
        self.handlers = handlers
        self.fallback = fallback or SkipEnv()

    def respond(self, call: ExternalCall) -> Tuple[Value, MemoryState]:
        handler = self.handlers.get(call.name or "")
        if handler is None:
            return self.fallback.respond(call)
        return handler(call)


def external_call(q: Query, se: SymbolTable, index: int,
                  public: Optional[FrozenSet[int]] = None) -> ExternalCall:
    if isinstance(q, CQuery):
        return ExternalCall(se.function_name(q.vf), q.vf, q.sg, q.args, q.m, se, index, public)
    name = se.function_name(q.rs[Reg.PC])
    symbol = se.lookup(name) if name is not None else None
    sg = symbol.sg if symbol is not None else None
    args: Tuple[Value, ...] = ()
    if sg is not None:
        found = get_args(sg, q.rs, q.m)
        args = tuple(found) if found is not None else ()
    return ExternalCall(name, q.rs[Reg.PC], sg, args, q.m, se, index, public)


def make_reply(q: Query, res: Value, m: MemoryState) -> Reply:
    if isinstance(q, CQuery):
        return CReply(res, m)
    rs = q.rs.set(Reg.RAX, res).set(Reg.PC, q.rs[Reg.RA])
    for r in ARG_REGS:
        rs = rs.set(r, UNDEF)
    return AReply(rs, m)


def env_reply(env: EnvStrategy, q: Query, se: SymbolTable, index: int,
              public: Optional[FrozenSet[int]] = None) -> Reply:
    res, m = env.respond(external_call(q, se, index, public))
    return make_reply(q, res, m)


@dataclass(frozen=True)
class Event:
    kind: str  # "iq", "oq", "or" or "ir"
    payload: Any

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"ev": self.kind}
        out.update(self.payload.to_json())
        return out

    def observe(self, projection: Callable[[MemoryState], Any]) -> Tuple[Any, ...]:
        p = self.payload
        if isinstance(p, CQuery):
            return (self.kind, p.vf, p.sg, p.args, projection(p.m))
        if isinstance(p, CReply):
            return (self.kind, p.res, projection(p.m))
        return (self.kind, p.rs, projection(p.m))


@dataclass
class Trace:
    events: List[Event] = field(default_factory=list)
    steps: int = 0

    def replies(self) -> List[Reply]:
        return [e.payload for e in self.events if e.kind == "ir"]

    def final(self) -> Optional[Reply]:
        return self.events[-1].payload if self.events and self.events[-1].kind == "ir" else None

    def outgoing(self) -> List[Query]:
        return [e.payload for e in self.events if e.kind == "oq"]

    def to_json_lines(self) -> List[Dict[str, Any]]:
        return [e.to_json() for e in self.events]


def run_trace(lts: OpenLTS, q: Query, env: EnvStrategy, fuel: int) -> Trace:
    if not lts.accepts(q):
        raise QueryRejected(f"{lts.name} does not accept the query")
    trace = Trace([Event("iq", q)])
    s = lts.initial_state(q)
    calls = 0
    while True:
        reply = lts.final_reply(s)
        if reply is not None:
            trace.events.append(Event("ir", reply))
            LOGGER.debug("%s finished after %d steps", lts.name, trace.steps)
            return trace
        oq = lts.at_external(s)
        if oq is not None:
            trace.events.append(Event("oq", oq))
            r = env_reply(env, oq, lts.se, calls)
            calls += 1
            trace.events.append(Event("or", r))
            resumed = lts.resume(s, r)
            if resumed is None:
                raise StuckError("reply not accepted", s, trace)
            s = resumed
            continue
        if fuel <= 0:
            raise FuelExhausted(f"{lts.name} ran out of fuel", trace)
        nxt = lts.step(s)
        if nxt is None:
            raise StuckError(f"{lts.name} is stuck", s, trace)
        s = nxt
        fuel -= 1
        trace.steps += 1


def observe_globals(se: SymbolTable, names: Sequence[str]) -> Callable[[MemoryState], Any]:
    """Projection onto the cells of the named global variables."""
    def projection(m: MemoryState) -> Any:
        out = []
        for name in names:
            s = se.lookup(name)
            if s is None:
                continue
            out.append((name, tuple(m.contents(s.block, WORD * k) for k in range(s.size))))
        return tuple(out)
    return projection


def trace_equal(t1: Trace, t2: Trace,
                projection: Optional[Callable[[MemoryState], Any]] = None) -> bool:
    proj = projection if projection is not None else (lambda m: m.to_json())
    if len(t1.events) != len(t2.events):
        return False
    return all(a.observe(proj) == b.observe(proj) for a, b in zip(t1.events, t2.events))
