"""Hand-written specification LTSs for the bundled examples.

Each spec is an open LTS at the C interface whose steps are big steps over
the memory: L_S for the encryption server, L_CS and L_CS' for the client
linked with it, and L_A, L_C and L_CA for the mutual summation.
"""
import logging
from abc import abstractmethod
from dataclasses import dataclass
from typing import Any, Callable, Dict, FrozenSet, Optional, Tuple

from errors import MemoryPermissionError, QueryRejected, UnknownSpec
from library import load_module
from linker import symbol_table
from mem import IntVal, MemoryState, Ptr, UNDEF, Value
from sem import (WORD, CQuery, CReply, OpenLTS, Query, Reply, Signature, SymbolKind, SymbolTable,
                 Typ, parse_signature)

LOGGER = logging.getLogger("refine.specs")


class Stuck(Exception):
    pass


def _strict(v: Value, t: Typ) -> bool:
    if t == Typ.INT:
        return isinstance(v, IntVal)
    if t == Typ.PTR:
        return isinstance(v, Ptr)
    return True


def _int(v: Value) -> int:
    if not isinstance(v, IntVal):
        raise Stuck(f"{v.string()} is not an integer")
    return v.value


class SpecLTS(OpenLTS):
    # Entry points, name to signature.
    entries: Dict[str, str] = {}
    # Globals the spec stands for besides its functions.
    owns: Tuple[str, ...] = ()

    def __init__(self, se: SymbolTable, name: str) -> None:
        super().__init__(se)
        self.name = name
        self.signatures = {n: parse_signature(t) for n, t in self.entries.items()}

    def defined_symbols(self) -> FrozenSet[str]:
        return frozenset(self.entries) | frozenset(self.owns)

    def _entry(self, q: Query) -> Optional[str]:
        if not isinstance(q, CQuery):
            return None
        name = self.se.function_name(q.vf)
        sg = self.signatures.get(name or "")
        if sg is None or q.sg != sg or len(q.args) != len(sg.params):
            return None
        if not all(_strict(v, t) for v, t in zip(q.args, sg.params)):
            return None
        return name

    def accepts(self, q: Query) -> bool:
        return self._entry(q) is not None

    def initial_state(self, q: Query) -> Any:
        name = self._entry(q)
        if name is None:
            raise QueryRejected(f"{self.name} does not accept the query")
        assert isinstance(q, CQuery)
        return self._start(name, q)

    @abstractmethod
    def _start(self, name: str, q: CQuery) -> Any:
        raise NotImplementedError

    def step(self, s: Any) -> Optional[Any]:
        try:
            return self._step(s)
        except (Stuck, MemoryPermissionError) as ex:
            LOGGER.debug("%s stuck in %s: %s", self.name, type(s).__name__, ex)
            return None

    @abstractmethod
    def _step(self, s: Any) -> Optional[Any]:
        raise NotImplementedError

    def at_external(self, s: Any) -> Optional[Query]:
        return None

    def resume(self, s: Any, r: Reply) -> Optional[Any]:
        return None

    def function(self, name: str) -> Ptr:
        return Ptr(self.se.block_of(name), 0)

    def sig(self, name: str, default: str) -> Signature:
        symbol = self.se.lookup(name)
        if symbol is not None and symbol.sg is not None:
            return symbol.sg
        return parse_signature(default)

    def _cell(self, name: str, k: int = 0) -> Tuple[int, int]:
        symbol = self.se.lookup(name)
        if symbol is None or symbol.kind != SymbolKind.VAR:
            raise Stuck(f"{name} is not a global variable")
        return symbol.block, WORD * k

    def read(self, m: MemoryState, name: str, k: int = 0) -> Value:
        b, o = self._cell(name, k)
        return m.load(b, o)

    def write(self, m: MemoryState, name: str, k: int, v: Value) -> MemoryState:
        b, o = self._cell(name, k)
        return m.store(b, o, v)


class ServerSpec(SpecLTS):
    """encrypt(i, p): stores i ^ key in a fresh block and calls p with it."""

    entries = {"encrypt": "(int, ptr) -> void"}
    owns = ("key",)

    @dataclass(frozen=True)
    class Calle:
        i: IntVal
        vf: Value
        m: MemoryState

    @dataclass(frozen=True)
    class Callp:
        sp: int
        vf: Value
        m: MemoryState

    @dataclass(frozen=True)
    class Retp:
        sp: int
        m: MemoryState

    @dataclass(frozen=True)
    class Rete:
        m: MemoryState

    def _start(self, name: str, q: CQuery) -> Any:
        i = q.args[0]
        assert isinstance(i, IntVal)
        return self.Calle(i, q.args[1], q.m)

    def _step(self, s: Any) -> Optional[Any]:
        if isinstance(s, self.Calle):
            m, sp = s.m.alloc(0, WORD)
            m = m.store(sp, 0, IntVal(s.i.value ^ _int(self.read(s.m, "key"))))
            return self.Callp(sp, s.vf, m)
        if isinstance(s, self.Retp):
            return self.Rete(s.m.free(s.sp, 0, WORD))
        return None

    def at_external(self, s: Any) -> Optional[CQuery]:
        if isinstance(s, self.Callp) and self.se.function_name(s.vf) is not None:
            return CQuery(s.vf, parse_signature("(ptr) -> void"), (Ptr(s.sp, 0),), s.m)
        return None

    def resume(self, s: Any, r: Reply) -> Optional[Any]:
        if self.at_external(s) is None or not isinstance(r, CReply):
            return None
        return self.Retp(s.sp, r.m)

    def final_reply(self, s: Any) -> Optional[CReply]:
        return CReply(UNDEF, s.m) if isinstance(s, self.Rete) else None


class ClientServerSpec(SpecLTS):
    """The client linked with the server: request, encrypt and process.

    flag records whether encrypt was reached from request or called by the
    environment; only a call from request returns i.
    """

    entries = {"request": "(int) -> int", "encrypt": "(int, ptr) -> void", "process": "(ptr) -> void"}
    owns = ("key", "result")

    @dataclass(frozen=True)
    class Callr:
        i: IntVal
        m: MemoryState

    @dataclass(frozen=True)
    class Calle:
        flag: bool
        i: IntVal
        vf: Value
        m: MemoryState

    @dataclass(frozen=True)
    class Callp:
        flag: bool
        ret: Optional[IntVal]
        sp: int
        m: MemoryState

    @dataclass(frozen=True)
    class Return:
        ret: Optional[IntVal]
        m: MemoryState

    def _start(self, name: str, q: CQuery) -> Any:
        if name == "request":
            return self.Callr(q.args[0], q.m)  # type: ignore
        if name == "encrypt":
            return self.Calle(False, q.args[0], q.args[1], q.m)  # type: ignore
        p = q.args[0]
        assert isinstance(p, Ptr)
        if p.offset != 0:
            raise QueryRejected("process expects a pointer to the start of a block")
        return self.Callp(False, None, p.block, q.m)

    def accepts(self, q: Query) -> bool:
        if not super().accepts(q):
            return False
        assert isinstance(q, CQuery)
        if self._entry(q) == "process":
            p = q.args[0]
            return isinstance(p, Ptr) and p.offset == 0
        return True

    def _step(self, s: Any) -> Optional[Any]:
        if isinstance(s, self.Callr):
            return self.Calle(True, s.i, self.function("process"), s.m)
        if isinstance(s, self.Calle):
            if s.vf != self.function("process"):
                raise Stuck("the client only encrypts for process")
            m, sp = s.m.alloc(0, WORD)
            m = m.store(sp, 0, IntVal(s.i.value ^ _int(self.read(s.m, "key"))))
            return self.Callp(True, s.i if s.flag else None, sp, m)
        if isinstance(s, self.Callp):
            m = self.write(s.m, "result", 0, s.m.load(s.sp, 0))
            if s.flag:
                m = m.free(s.sp, 0, WORD)
            return self.Return(s.ret, m)
        return None

    def final_reply(self, s: Any) -> Optional[CReply]:
        if not isinstance(s, self.Return):
            return None
        return CReply(s.ret if s.ret is not None else UNDEF, s.m)


class MultiRequestSpec(SpecLTS):
    """The multi-request client linked with the server.

    Every encryption allocates a block that stays alive until the last
    request, which frees all of them.
    """

    entries = {"request": "(ptr) -> void", "encrypt": "(int, ptr) -> void"}
    owns = ("key", "input", "result", "i")

    @dataclass(frozen=True)
    class Callr:
        sp: int
        sps: Tuple[int, ...]
        m: MemoryState

    @dataclass(frozen=True)
    class Calle:
        i: IntVal
        sps: Tuple[int, ...]
        vf: Value
        m: MemoryState

    @dataclass(frozen=True)
    class Return:
        m: MemoryState

    def accepts(self, q: Query) -> bool:
        if not super().accepts(q):
            return False
        assert isinstance(q, CQuery)
        if self._entry(q) == "request":
            p = q.args[0]
            return isinstance(p, Ptr) and p.offset == 0
        return True

    def _start(self, name: str, q: CQuery) -> Any:
        if name == "request":
            p = q.args[0]
            assert isinstance(p, Ptr)
            return self.Callr(p.block, (), q.m)
        return self.Calle(q.args[0], (), q.args[1], q.m)  # type: ignore

    def requests(self) -> int:
        symbol = self.se.lookup("input")
        return symbol.size if symbol is not None else 0

    def _step(self, s: Any) -> Optional[Any]:
        if isinstance(s, self.Callr):
            n = _int(self.read(s.m, "i"))
            m = s.m
            if n != 0:
                m = self.write(m, "result", n - 1, m.load(s.sp, 0))
            if n >= self.requests():
                for sp in s.sps:
                    m = m.free(sp, 0, WORD)
                return self.Return(m)
            m = self.write(m, "i", 0, IntVal(n + 1))
            return self.Calle(self.read(m, "input", n), s.sps, self.function("request"), m)  # type: ignore
        if isinstance(s, self.Calle):
            if s.vf != self.function("request"):
                raise Stuck("the client only encrypts for request")
            m, sp = s.m.alloc(0, WORD)
            m = m.store(sp, 0, IntVal(_int(s.i) ^ _int(self.read(s.m, "key"))))
            return self.Callr(sp, (sp,) + s.sps, m)
        return None

    def final_reply(self, s: Any) -> Optional[CReply]:
        return CReply(UNDEF, s.m) if isinstance(s, self.Return) else None


class SumAsmSpec(SpecLTS):
    """g(i) = i + f(i - 1), answering from s when i is the last argument."""

    entries = {"g": "(int) -> int"}
    owns = ("s",)

    @dataclass(frozen=True)
    class Callg:
        i: IntVal
        m: MemoryState

    @dataclass(frozen=True)
    class Callf:
        vf: Value
        i: IntVal
        m: MemoryState

    @dataclass(frozen=True)
    class Returnf:
        i: IntVal
        r: Value
        m: MemoryState

    @dataclass(frozen=True)
    class Returng:
        r: Value
        m: MemoryState

    def _start(self, name: str, q: CQuery) -> Any:
        return self.Callg(q.args[0], q.m)  # type: ignore

    def _step(self, s: Any) -> Optional[Any]:
        if isinstance(s, self.Callg):
            if s.i.value == 0:
                return self.Returng(IntVal(0), s.m)
            if s.i.value == _int(self.read(s.m, "s", 0)):
                return self.Returng(self.read(s.m, "s", 1), s.m)
            return self.Callf(self.function("f"), s.i, s.m)
        if isinstance(s, self.Returnf):
            total = IntVal(s.i.value + _int(s.r))
            m = self.write(s.m, "s", 0, s.i)
            m = self.write(m, "s", 1, total)
            return self.Returng(total, m)
        return None

    def at_external(self, s: Any) -> Optional[CQuery]:
        if isinstance(s, self.Callf):
            return CQuery(s.vf, self.sig("f", "(int) -> int"), (IntVal(s.i.value - 1),), s.m)
        return None

    def resume(self, s: Any, r: Reply) -> Optional[Any]:
        if not isinstance(s, self.Callf) or not isinstance(r, CReply):
            return None
        return self.Returnf(s.i, r.res, r.m)

    def final_reply(self, s: Any) -> Optional[CReply]:
        return CReply(s.r, s.m) if isinstance(s, self.Returng) else None


class SumCSpec(SpecLTS):
    """f(i) = i + g(i - 1), remembered in memoized[i]."""

    entries = {"f": "(int) -> int"}
    owns = ("memoized",)

    @dataclass(frozen=True)
    class Callf:
        i: IntVal
        m: MemoryState

    @dataclass(frozen=True)
    class Callg:
        vf: Value
        i: IntVal
        m: MemoryState

    @dataclass(frozen=True)
    class Returng:
        i: IntVal
        total: Value
        m: MemoryState

    @dataclass(frozen=True)
    class Returnf:
        total: Value
        m: MemoryState

    def _start(self, name: str, q: CQuery) -> Any:
        return self.Callf(q.args[0], q.m)  # type: ignore

    def _step(self, s: Any) -> Optional[Any]:
        if isinstance(s, self.Callf):
            if s.i.value == 0:
                return self.Returnf(IntVal(0), s.m)
            cached = _int(self.read(s.m, "memoized", s.i.value))
            if cached != 0:
                return self.Returnf(IntVal(cached), s.m)
            return self.Callg(self.function("g"), s.i, s.m)
        if isinstance(s, self.Returng):
            total = IntVal(_int(s.total) + s.i.value)
            return self.Returnf(total, self.write(s.m, "memoized", s.i.value, total))
        return None

    def at_external(self, s: Any) -> Optional[CQuery]:
        if isinstance(s, self.Callg):
            return CQuery(s.vf, self.sig("g", "(int) -> int"), (IntVal(s.i.value - 1),), s.m)
        return None

    def resume(self, s: Any, r: Reply) -> Optional[Any]:
        if not isinstance(s, self.Callg) or not isinstance(r, CReply):
            return None
        return self.Returng(s.i, r.res, r.m)

    def final_reply(self, s: Any) -> Optional[CReply]:
        return CReply(s.total, s.m) if isinstance(s, self.Returnf) else None


class SumSpec(SpecLTS):
    """f and g together in one big step: the sum up to i, with both caches
    updated the way the mutual recursion updates them."""

    entries = {"f": "(int) -> int", "g": "(int) -> int"}
    owns = ("memoized", "s")

    @dataclass(frozen=True)
    class Callf:
        i: IntVal
        m: MemoryState

    @dataclass(frozen=True)
    class Callg:
        i: IntVal
        m: MemoryState

    @dataclass(frozen=True)
    class Return:
        r: Value
        m: MemoryState

    def _start(self, name: str, q: CQuery) -> Any:
        state = self.Callf if name == "f" else self.Callg
        return state(q.args[0], q.m)  # type: ignore

    def _f(self, i: int, m: MemoryState) -> Tuple[Value, MemoryState]:
        if i == 0:
            return IntVal(0), m
        cached = _int(self.read(m, "memoized", i))
        if cached != 0:
            return IntVal(cached), m
        r, m = self._g(i - 1, m)
        total = IntVal(_int(r) + i)
        return total, self.write(m, "memoized", i, total)

    def _g(self, i: int, m: MemoryState) -> Tuple[Value, MemoryState]:
        if i == 0:
            return IntVal(0), m
        if i == _int(self.read(m, "s", 0)):
            return self.read(m, "s", 1), m
        r, m = self._f(i - 1, m)
        total = IntVal(_int(r) + i)
        m = self.write(m, "s", 0, IntVal(i))
        return total, self.write(m, "s", 1, total)

    def _step(self, s: Any) -> Optional[Any]:
        if isinstance(s, (self.Callf, self.Callg)):
            run: Callable[[int, MemoryState], Tuple[Value, MemoryState]] = \
                self._f if isinstance(s, self.Callf) else self._g
            try:
                r, m = run(s.i.value, s.m)
            except RecursionError as ex:
                raise Stuck(f"no sum for {s.i.value}") from ex
            return self.Return(r, m)
        return None

    def final_reply(self, s: Any) -> Optional[CReply]:
        return CReply(s.r, s.m) if isinstance(s, self.Return) else None


@dataclass(frozen=True)
class SpecEntry:
    factory: Callable[[SymbolTable, str], SpecLTS]
    # Bundled programs whose linked symbol table the spec runs against.
    modules: Tuple[str, ...]
    doc: str


SPECS: Dict[str, SpecEntry] = {
    "L_S": SpecEntry(ServerSpec, ("client.mc", "server.ma"), "encryption server"),
    "L_CS": SpecEntry(ClientServerSpec, ("client.mc", "server.ma"), "client linked with the server"),
    "L_CS'": SpecEntry(MultiRequestSpec, ("client_mr.mc", "server.ma"),
                       "multi-request client linked with the server"),
    "L_A": SpecEntry(SumAsmSpec, ("sum_f.mc", "sum_g.ma"), "assembly half of the mutual sum"),
    "L_C": SpecEntry(SumCSpec, ("sum_f.mc", "sum_g.ma"), "C half of the mutual sum"),
    "L_CA": SpecEntry(SumSpec, ("sum_f.mc", "sum_g.ma"), "the whole mutual sum"),
}


def default_symbols(name: str) -> SymbolTable:
    entry = SPECS.get(name)
    if entry is None:
        raise UnknownSpec(f"unknown spec {name}; expected one of {', '.join(SPECS)}")
    return symbol_table([load_module(m) for m in entry.modules])  # type: ignore


def build_spec(name: str, se: Optional[SymbolTable] = None) -> SpecLTS:
    entry = SPECS.get(name)
    if entry is None:
        raise UnknownSpec(f"unknown spec {name}; expected one of {', '.join(SPECS)}")
    if se is None:
        se = default_symbols(name)
    LOGGER.debug("built %s over %d symbols", name, len(se))
    return entry.factory(se, name)
