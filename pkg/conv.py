"""Simulation conventions: expressions over convention atoms and their matchers.

A ConvExpr is a composition tree over named atoms. Atoms with an executable
meaning (c_K, asm_K, ro, wt, CAinjp, id) become Convention objects that
relate source and target queries and replies in a world. CL, LM and MA
only exist symbolically, for derivations.
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

from errors import ParseError, TypeMismatch, UnsupportedConvention
from inject import Meminj, mem_inj_check, out_of_reach, value_inject_check, value_transport
from kmr import InjpWorld, KmrTag, acc_check, injp_acc_check, rel_check, transport_evolution
from mem import IntVal, MemoryState, Permission, PermKind, Ptr, UNDEF, Undef, mem_acc_violations
from report import CheckReport
from sem import (AQuery, AReply, ARG_REGS, CQuery, CReply, Interface, Query, Reg, RegSet,
                 Reply, Signature, SymbolTable, WORD, get_args, make_reply,
                 outgoing_arg_positions, ro_valid_report, value_has_type)

LOGGER = logging.getLogger("refine.conv")

LEVELS = {"c": Interface.C, "ltl": Interface.LTL, "mach": Interface.MACH, "asm": Interface.ASM}
KINDS = ("injp", "inj", "ext")

# Atoms with fixed endpoints; level atoms (c_injp ...) are added below.
ATOM_ENDPOINTS: Dict[str, Tuple[Interface, Interface]] = {
    "ro": (Interface.C, Interface.C),
    "wt": (Interface.C, Interface.C),
    "CL": (Interface.C, Interface.LTL),
    "LM": (Interface.LTL, Interface.MACH),
    "MA": (Interface.MACH, Interface.ASM),
    "CAinjp": (Interface.C, Interface.ASM),
}
for _level, _iface in LEVELS.items():
    for _kind in KINDS:
        ATOM_ENDPOINTS[f"{_level}_{_kind}"] = (_iface, _iface)

SYMBOLIC_ATOMS = frozenset(["CL", "LM", "MA"] + [f"{lv}_{k}" for lv in ("ltl", "mach") for k in KINDS])

# Returned to the caller in RBX by the CAinjp transport, so callee-save
# preservation can be observed.
RBX_SENTINEL = IntVal(0x5EED)


def split_atom(name: str) -> Optional[Tuple[str, str]]:
    level, _, kind = name.partition("_")
    if level in LEVELS and kind in KINDS:
        return level, kind
    return None


class ConvExpr(ABC):
    @property
    @abstractmethod
    def source(self) -> Optional[Interface]:
        raise NotImplementedError

    @property
    @abstractmethod
    def target(self) -> Optional[Interface]:
        raise NotImplementedError

    @abstractmethod
    def atoms(self) -> Tuple[str, ...]:
        raise NotImplementedError

    @abstractmethod
    def string(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Atom(ConvExpr):
    name: str

    def __post_init__(self) -> None:
        if self.name != "id" and self.name not in ATOM_ENDPOINTS:
            raise TypeMismatch(f"unknown convention atom {self.name!r}")

    @property
    def source(self) -> Optional[Interface]:
        return ATOM_ENDPOINTS[self.name][0] if self.name != "id" else None

    @property
    def target(self) -> Optional[Interface]:
        return ATOM_ENDPOINTS[self.name][1] if self.name != "id" else None

    def atoms(self) -> Tuple[str, ...]:
        return () if self.name == "id" else (self.name,)

    def string(self) -> str:
        return self.name


@dataclass(frozen=True)
class Comp(ConvExpr):
    left: ConvExpr
    right: ConvExpr

    @property
    def source(self) -> Optional[Interface]:
        return self.left.source

    @property
    def target(self) -> Optional[Interface]:
        return self.right.target

    def atoms(self) -> Tuple[str, ...]:
        return self.left.atoms() + self.right.atoms()

    def string(self) -> str:
        left = self.left.string()
        if isinstance(self.left, Comp):
            left = "(" + left + ")"
        return left + " ∘ " + self.right.string()


ID = Atom("id")


def compose_conv(r: ConvExpr, s: ConvExpr) -> ConvExpr:
    if r == ID:
        return s
    if s == ID:
        return r
    if r.target != s.source:
        raise TypeMismatch(f"{r.string()} ends at {r.target.value if r.target else '?'} "
                           f"but {s.string()} starts at {s.source.value if s.source else '?'}")
    return Comp(r, s)


def chain(names: Sequence[str]) -> ConvExpr:
    """Right-nested composition of the named atoms."""
    if not names:
        return ID
    expr: ConvExpr = Atom(names[-1])
    for name in reversed(names[:-1]):
        expr = compose_conv(Atom(name), expr)
    return expr


def flatten(expr: ConvExpr) -> ConvExpr:
    return chain(expr.atoms())


def parse_conv(text: str) -> ConvExpr:
    parts = [p.strip() for p in text.replace("∘", ".").split(".")]
    if not parts or any(not p for p in parts):
        raise ParseError(f"malformed convention {text!r}")
    try:
        return chain(parts)
    except TypeMismatch as ex:
        raise ParseError(str(ex)) from ex


@dataclass(frozen=True)
class RoWorld:
    se: SymbolTable
    m: MemoryState


@dataclass(frozen=True)
class WtWorld:
    sg: Signature


@dataclass(frozen=True)
class CAWorld:
    injp: InjpWorld
    sg: Signature
    rs: RegSet


def _same_query(report: CheckReport, q1: Query, q2: Query) -> None:
    report.check(q1 == q2, "equal", "source and target queries differ")


def _c_values(report: CheckReport, j: Meminj, q1: CQuery, q2: CQuery) -> None:
    report.check(q1.sg == q2.sg, "sig", "signatures differ", [q1.sg.string(), q2.sg.string()])
    report.check(value_inject_check(j, q1.vf, q2.vf), "vf", "function values not related")
    if len(q1.args) != len(q2.args):
        report.fail("args", "argument counts differ", [len(q1.args), len(q2.args)])
        return
    for k, (a1, a2) in enumerate(zip(q1.args, q2.args)):
        report.check(value_inject_check(j, a1, a2), "args", f"argument {k} not related", k)


def match_ro(w: RoWorld, q1: Query, q2: Query) -> CheckReport:
    report = CheckReport("ro")
    _same_query(report, q1, q2)
    report.merge(ro_valid_report(w.se, q1.m))
    return report


def match_ro_reply(w: RoWorld, r1: Reply, r2: Reply) -> CheckReport:
    report = CheckReport("ro-reply")
    report.check(r1 == r2, "equal", "source and target replies differ")
    for sub, message, witness in mem_acc_violations(w.m, r1.m):
        report.fail("mem-acc", f"{sub}: {message}", witness)
    return report


def match_wt(sg: Signature, q1: CQuery, q2: CQuery) -> CheckReport:
    report = CheckReport("wt")
    _same_query(report, q1, q2)
    report.check(q1.sg == sg, "sig", "query signature differs from the world")
    if report.check(len(q1.args) == len(sg.params), "arity", "wrong number of arguments",
                    [len(q1.args), len(sg.params)]):
        for k, (v, t) in enumerate(zip(q1.args, sg.params)):
            report.check(value_has_type(v, t), "type", f"argument {k} is not {t.value}", k)
    return report


def match_wt_reply(sg: Signature, r1: CReply, r2: CReply) -> CheckReport:
    report = CheckReport("wt-reply")
    report.check(r1 == r2, "equal", "source and target replies differ")
    report.check(value_has_type(r1.res, sg.result), "type", f"result is not {sg.result.value}")
    return report


def match_query_cainjp(w: CAWorld, qc: CQuery, qa: AQuery) -> CheckReport:
    report = CheckReport("cainjp-query")
    j, m1, m2 = w.injp.j, qc.m, qa.m
    rs = qa.rs
    report.merge(mem_inj_check(j, m1, m2), "mem-inj:")
    report.check(qc.sg == w.sg, "sig", "query signature differs from the world")
    report.check(not isinstance(qc.vf, Undef), "vf", "function value is undefined")
    report.check(value_inject_check(j, qc.vf, rs[Reg.PC]), "pc", "PC not related to the function value")
    if not report.check(isinstance(rs[Reg.RSP], Ptr), "sp", "stack pointer is not a pointer"):
        return report
    args = get_args(qc.sg, rs, m2)
    if args is None:
        report.fail("args", "stack arguments are not readable")
    elif len(args) != len(qc.args):
        report.fail("args", "argument counts differ", [len(qc.args), len(args)])
    else:
        for k, (a1, a2) in enumerate(zip(qc.args, args)):
            report.check(value_inject_check(j, a1, a2), "args", f"argument {k} not related", k)
    for b, o in outgoing_arg_positions(qc.sg, rs):
        report.check(out_of_reach(j, m1, b, o), "outgoing-args", "argument slot is in reach", [b, o])
        report.check(m2.perm_at(b, o, PermKind.CUR, Permission.FREEABLE), "outgoing-args",
                     "argument slot is not freeable", [b, o])
    return report


def match_reply_cainjp(w: CAWorld, rc: CReply, ra: AReply, j_reply: Meminj) -> CheckReport:
    report = CheckReport("cainjp-reply")
    after = InjpWorld(j_reply, rc.m, ra.m)
    report.merge(injp_acc_check(w.injp, after), "acc:")
    report.merge(mem_inj_check(j_reply, rc.m, ra.m), "mem-inj:")
    report.check(value_inject_check(j_reply, rc.res, ra.rs[Reg.RAX]), "result",
                 "result not related to RAX")
    report.check(ra.rs[Reg.RSP] == w.rs[Reg.RSP], "sp", "stack pointer not restored")
    report.check(ra.rs[Reg.PC] == w.rs[Reg.RA], "pc", "PC is not the return address")
    for r in CALLEE_SAVED:
        report.check(ra.rs[r] == w.rs[r], "callee-save", f"{r.value} not preserved", r.value)
    return report


CALLEE_SAVED = (Reg.RBX, Reg.RSP)


class Convention(ABC):
    name = "conv"
    source = Interface.C
    target = Interface.C
    injecting = False

    @abstractmethod
    def transport_query(self, q1: Query, se: SymbolTable) -> Tuple[Any, Query]:
        """The canonical target query related to q1, and its world."""
        raise NotImplementedError

    @abstractmethod
    def world_for(self, q1: Query, q2: Query, j: Optional[Meminj], se: SymbolTable) -> Any:
        raise NotImplementedError

    @abstractmethod
    def match_query(self, w: Any, q1: Query, q2: Query) -> CheckReport:
        raise NotImplementedError

    @abstractmethod
    def transport_reply(self, w: Any, r1: Reply, q2: Query) -> Tuple[Reply, Optional[Meminj]]:
        raise NotImplementedError

    @abstractmethod
    def match_reply(self, w: Any, r1: Reply, r2: Reply, j: Optional[Meminj]) -> CheckReport:
        raise NotImplementedError

    def injection(self, w: Any) -> Optional[Meminj]:
        return None


class IdConvention(Convention):
    name = "id"

    def transport_query(self, q1: Query, se: SymbolTable) -> Tuple[Any, Query]:
        return None, q1

    def world_for(self, q1: Query, q2: Query, j: Optional[Meminj], se: SymbolTable) -> Any:
        return None

    def match_query(self, w: Any, q1: Query, q2: Query) -> CheckReport:
        report = CheckReport("id")
        _same_query(report, q1, q2)
        return report

    def transport_reply(self, w: Any, r1: Reply, q2: Query) -> Tuple[Reply, Optional[Meminj]]:
        return r1, None

    def match_reply(self, w: Any, r1: Reply, r2: Reply, j: Optional[Meminj]) -> CheckReport:
        report = CheckReport("id-reply")
        report.check(r1 == r2, "equal", "source and target replies differ")
        return report


class RoConvention(IdConvention):
    name = "ro"

    def transport_query(self, q1: Query, se: SymbolTable) -> Tuple[Any, Query]:
        return RoWorld(se, q1.m), q1

    def world_for(self, q1: Query, q2: Query, j: Optional[Meminj], se: SymbolTable) -> Any:
        return RoWorld(se, q1.m)

    def match_query(self, w: RoWorld, q1: Query, q2: Query) -> CheckReport:
        return match_ro(w, q1, q2)

    def match_reply(self, w: RoWorld, r1: Reply, r2: Reply, j: Optional[Meminj]) -> CheckReport:
        return match_ro_reply(w, r1, r2)


class WtConvention(IdConvention):
    name = "wt"

    def transport_query(self, q1: CQuery, se: SymbolTable) -> Tuple[Any, Query]:
        return WtWorld(q1.sg), q1

    def world_for(self, q1: CQuery, q2: Query, j: Optional[Meminj], se: SymbolTable) -> Any:
        return WtWorld(q1.sg)

    def match_query(self, w: WtWorld, q1: CQuery, q2: CQuery) -> CheckReport:
        return match_wt(w.sg, q1, q2)

    def match_reply(self, w: WtWorld, r1: CReply, r2: CReply, j: Optional[Meminj]) -> CheckReport:
        return match_wt_reply(w.sg, r1, r2)


class KmrConvention(Convention):
    """c_K and asm_K: a KMR world over otherwise identical queries."""
    injecting = True

    def __init__(self, level: str, tag: KmrTag) -> None:
        self.level = level
        self.tag = tag
        self.name = f"{level}_{tag.value}"
        self.source = self.target = LEVELS[level]

    def injection(self, w: InjpWorld) -> Optional[Meminj]:
        return w.j

    def transport_query(self, q1: Query, se: SymbolTable) -> Tuple[Any, Query]:
        return InjpWorld(Meminj.identity_on(q1.m), q1.m, q1.m), q1

    def world_for(self, q1: Query, q2: Query, j: Optional[Meminj], se: SymbolTable) -> Any:
        return InjpWorld(j if j is not None else Meminj.identity_on(q1.m), q1.m, q2.m)

    def _values(self, report: CheckReport, j: Meminj, q1: Any, q2: Any) -> None:
        if isinstance(q1, CQuery):
            _c_values(report, j, q1, q2)
            return
        for r in Reg:
            report.check(value_inject_check(j, q1.rs[r], q2.rs[r]), "regs", f"{r.value} not related", r.value)

    def match_query(self, w: InjpWorld, q1: Query, q2: Query) -> CheckReport:
        report = CheckReport(self.name)
        report.check(w.m1 == q1.m and w.m2 == q2.m, "world", "world memories differ from the queries")
        report.merge(rel_check(self.tag, w), "rel:")
        self._values(report, w.j, q1, q2)
        return report

    def transport_reply(self, w: InjpWorld, r1: Reply, q2: Query) -> Tuple[Reply, Optional[Meminj]]:
        j2, m2 = transport_evolution(w.j, w.m1, w.m2, r1.m)
        if isinstance(r1, CReply):
            res = value_transport(j2, r1.res)
            return CReply(res if res is not None else UNDEF, m2), j2
        values = {}
        for r in Reg:
            v = value_transport(j2, r1.rs[r])
            values[r] = v if v is not None else UNDEF
        return AReply(RegSet(values), m2), j2

    def match_reply(self, w: InjpWorld, r1: Reply, r2: Reply, j: Optional[Meminj]) -> CheckReport:
        report = CheckReport(self.name + "-reply")
        after = InjpWorld(j if j is not None else w.j, r1.m, r2.m)
        report.merge(acc_check(self.tag, w, after), "acc:")
        report.merge(rel_check(self.tag, after), "rel:")
        if isinstance(r1, CReply):
            report.check(value_inject_check(after.j, r1.res, r2.res), "result", "results not related")
        else:
            for r in Reg:
                report.check(value_inject_check(after.j, r1.rs[r], r2.rs[r]), "regs",
                             f"{r.value} not related", r.value)
        return report


class CAinjpConvention(Convention):
    name = "CAinjp"
    source = Interface.C
    target = Interface.ASM
    injecting = True

    def injection(self, w: CAWorld) -> Optional[Meminj]:
        return w.injp.j

    def transport_query(self, q1: CQuery, se: SymbolTable) -> Tuple[Any, Query]:
        j = Meminj.identity_on(q1.m)
        extra = max(0, len(q1.sg.params) - len(ARG_REGS))
        m, sp = q1.m.alloc(0, 2 * WORD + WORD * extra)
        for k in range(extra):
            m = m.store(sp, 2 * WORD + WORD * k, q1.args[len(ARG_REGS) + k])
        m, ret = m.alloc(0, 0)
        rs = RegSet({Reg.PC: q1.vf, Reg.RSP: Ptr(sp, 0), Reg.RA: Ptr(ret, 0), Reg.RBX: RBX_SENTINEL})
        for r, v in zip(ARG_REGS, q1.args):
            rs = rs.set(r, v)
        q2 = AQuery(rs, m)
        return CAWorld(InjpWorld(j, q1.m, m), q1.sg, rs), q2

    def world_for(self, q1: CQuery, q2: AQuery, j: Optional[Meminj], se: SymbolTable) -> Any:
        return CAWorld(InjpWorld(j if j is not None else Meminj.identity_on(q1.m), q1.m, q2.m),
                       q1.sg, q2.rs)

    def match_query(self, w: CAWorld, q1: CQuery, q2: AQuery) -> CheckReport:
        return match_query_cainjp(w, q1, q2)

    def transport_reply(self, w: CAWorld, r1: CReply, q2: AQuery) -> Tuple[Reply, Optional[Meminj]]:
        j2, m2 = transport_evolution(w.injp.j, w.injp.m1, w.injp.m2, r1.m)
        res = value_transport(j2, r1.res)
        return make_reply(q2, res if res is not None else UNDEF, m2), j2

    def match_reply(self, w: CAWorld, r1: CReply, r2: AReply, j: Optional[Meminj]) -> CheckReport:
        return match_reply_cainjp(w, r1, r2, j if j is not None else w.injp.j)


class CompositeConvention(Convention):
    """Composition of conventions with at most one injecting part.

    Parts before the injecting one see the source query, parts after it
    see the target query.
    """

    def __init__(self, parts: Sequence[Convention]) -> None:
        self.parts = list(parts)
        self.name = " ∘ ".join(p.name for p in parts)
        self.source = parts[0].source
        self.target = parts[-1].target
        carriers = [i for i, p in enumerate(parts) if p.injecting]
        if len(carriers) > 1:
            raise UnsupportedConvention(f"{self.name} has more than one injecting part")
        self.carrier = carriers[0] if carriers else len(parts)
        self.injecting = bool(carriers)

    def injection(self, w: Tuple[Any, ...]) -> Optional[Meminj]:
        if not self.injecting:
            return None
        return self.parts[self.carrier].injection(w[self.carrier])

    def _ends(self, i: int, x1: Any, x2: Any) -> Tuple[Any, Any]:
        if i < self.carrier:
            return x1, x1
        if i == self.carrier:
            return x1, x2
        return x2, x2

    def transport_query(self, q1: Query, se: SymbolTable) -> Tuple[Any, Query]:
        worlds = []
        q = q1
        for p in self.parts:
            w, q = p.transport_query(q, se)
            worlds.append(w)
        return tuple(worlds), q

    def world_for(self, q1: Query, q2: Query, j: Optional[Meminj], se: SymbolTable) -> Any:
        worlds = []
        for i, p in enumerate(self.parts):
            a, b = self._ends(i, q1, q2)
            worlds.append(p.world_for(a, b, j if i == self.carrier else None, se))
        return tuple(worlds)

    def match_query(self, w: Tuple[Any, ...], q1: Query, q2: Query) -> CheckReport:
        report = CheckReport(self.name)
        for i, p in enumerate(self.parts):
            a, b = self._ends(i, q1, q2)
            report.merge(p.match_query(w[i], a, b), p.name + ":")
        return report

    def transport_reply(self, w: Tuple[Any, ...], r1: Reply, q2: Query) -> Tuple[Reply, Optional[Meminj]]:
        r = r1
        j: Optional[Meminj] = None
        for i, p in enumerate(self.parts):
            if i == self.carrier:
                r, j = p.transport_reply(w[i], r, q2)
        return r, j

    def match_reply(self, w: Tuple[Any, ...], r1: Reply, r2: Reply, j: Optional[Meminj]) -> CheckReport:
        report = CheckReport(self.name + "-reply")
        for i, p in enumerate(self.parts):
            a, b = self._ends(i, r1, r2)
            report.merge(p.match_reply(w[i], a, b, j if i == self.carrier else None), p.name + ":")
        return report


def atom_convention(name: str) -> Convention:
    if name in SYMBOLIC_ATOMS:
        raise UnsupportedConvention(f"{name} has no executable meaning")
    if name == "ro":
        return RoConvention()
    if name == "wt":
        return WtConvention()
    if name == "CAinjp":
        return CAinjpConvention()
    if name == "id":
        return IdConvention()
    level, kind = split_atom(name)  # type: ignore
    return KmrConvention(level, KmrTag(kind))


def convention_for(expr: ConvExpr) -> Convention:
    names = expr.atoms()
    if not names:
        return IdConvention()
    parts = [atom_convention(n) for n in names]
    if len(parts) == 1:
        return parts[0]
    return CompositeConvention(parts)
