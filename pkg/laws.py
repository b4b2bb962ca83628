"""Refinement laws between conventions and the derivations built from them.

A law rewrites a window of a flat convention chain. Laws relate either by
equivalence or by refinement (left refined by right). Outgoing derivations
may only strengthen a convention, incoming ones may only weaken it;
equivalences can be used in both.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum, unique
from typing import Any, Dict, List, Optional, Sequence, Tuple

from conv import ConvExpr, KINDS, chain, compose_conv, flatten, match_wt, split_atom
from errors import PatternMismatch, PreconditionError, UnsupportedLaw
from inject import Meminj, compose_all, value_inject_check, value_transport
from kmr import (InjpWorld, KmrTag, acc_check, interpolate, interpolate_ext, rel_check,
                 transport_evolution)
from mem import IntVal, MemoryState, Ptr, mem_acc_violations
from report import CheckReport, SuiteReport
from sem import CQuery, Signature, SymbolKind, SymbolTable, Typ, Value, init_memory, ro_valid_report

LOGGER = logging.getLogger("refine.laws")


@unique
class Relation(Enum):
    EQUIV = "≡"
    REFINES = "⊑"


@unique
class Mode(Enum):
    CONSTRUCTIVE = "ConstructiveWitness"
    SAMPLED = "SampledCheck"
    SYMBOLIC = "SymbolicOnly"


@unique
class Direction(Enum):
    FORWARD = "fwd"
    BACKWARD = "bwd"


@unique
class Side(Enum):
    OUTGOING = "outgoing"
    INCOMING = "incoming"
    EITHER = "either"


@dataclass(frozen=True)
class Law:
    name: str
    left: Tuple[str, ...]
    right: Tuple[str, ...]
    relation: Relation
    mode: Mode
    note: str = ""
    citation: str = ""

    def string(self) -> str:
        return f"{' ∘ '.join(self.left)} {self.relation.value} {' ∘ '.join(self.right)}"


_R, _E = Relation.REFINES, Relation.EQUIV
_C, _S, _Y = Mode.CONSTRUCTIVE, Mode.SAMPLED, Mode.SYMBOLIC

# $L stands for a level, $K for a KMR kind.
LAWS: Dict[str, Law] = {law.name: law for law in [
    Law("injp-idem", ("$L_injp", "$L_injp"), ("$L_injp",), _E, _C,
        "split by identity on the domain, merged by interpolation", "injp transitivity"),
    Law("injp-inj", ("$L_injp",), ("$L_inj",), _R, _C, "protection only narrows accessibility",
        "injp refines inj"),
    Law("inj-absorb", ("$L_injp", "$L_inj", "$L_injp"), ("$L_injp",), _R, _S,
        "outer injp hops protect what the inner inj hop may touch", "inj absorption by injp"),
    Law("inj-comp", ("$L_inj", "$L_inj"), ("$L_inj",), _R, _S, "injections compose", "inj composition"),
    Law("ext-inj", ("$L_ext", "$L_inj"), ("$L_inj",), _E, _S, "extensions are absorbed by inj",
        "ext absorption, left"),
    Law("inj-ext", ("$L_inj", "$L_ext"), ("$L_inj",), _E, _S, "extensions are absorbed by inj",
        "ext absorption, right"),
    Law("ext-idem", ("$L_ext", "$L_ext"), ("$L_ext",), _E, _S, "extensions compose", "ext transitivity"),
    Law("cl-commute", ("c_$K", "CL"), ("CL", "ltl_$K"), _R, _Y,
        "trusted: the C to LTL interface commutes with every KMR", "CL commutation"),
    Law("lm-commute", ("ltl_$K", "LM"), ("LM", "mach_$K"), _R, _Y,
        "trusted: the LTL to Mach interface commutes with every KMR", "LM commutation"),
    Law("ma-commute", ("mach_$K", "MA"), ("MA", "asm_$K"), _R, _Y,
        "trusted: the Mach to assembly interface commutes with every KMR", "MA commutation"),
    Law("wt-commute", ("c_$K", "wt"), ("wt", "c_$K"), _E, _C, "typing is preserved by injections",
        "wt commutation"),
    Law("wt-absorb", ("c_$K", "wt"), ("wt", "c_$K", "wt"), _E, _C, "typing holds on both sides",
        "wt duplication"),
    Law("ro-injp-trans", ("ro", "c_injp"), ("ro", "c_injp", "ro", "c_injp"), _E, _C,
        "read-only globals survive injp interpolation", "ro with injp transitivity"),
    Law("ro-wt-commute", ("ro", "wt"), ("wt", "ro"), _E, _C, "both are identity conventions",
        "ro and wt commutation"),
    Law("wt-idem", ("wt", "wt"), ("wt",), _E, _C, "typing twice is typing once", "wt idempotence"),
    Law("cainjp-merge", ("c_injp", "CL", "LM", "MA"), ("CAinjp",), _E, _Y,
        "trusted: the direct C to assembly convention unfolds to its layers", "CAinjp unfolding"),
]}


def _match_one(pattern: str, atom: str, env: Dict[str, str]) -> bool:
    if pattern.startswith("$L_"):
        parts = split_atom(atom)
        if parts is None or parts[1] != pattern[3:]:
            return False
        return env.setdefault("$L", parts[0]) == parts[0]
    if pattern.endswith("_$K"):
        parts = split_atom(atom)
        if parts is None or parts[0] != pattern[:-3]:
            return False
        return env.setdefault("$K", parts[1]) == parts[1]
    return pattern == atom


def match_pattern(pattern: Sequence[str], atoms: Sequence[str]) -> Optional[Dict[str, str]]:
    if len(pattern) != len(atoms):
        return None
    env: Dict[str, str] = {}
    for p, a in zip(pattern, atoms):
        if not _match_one(p, a, env):
            return None
    return env


def instantiate(pattern: Sequence[str], env: Dict[str, str]) -> Tuple[str, ...]:
    out = []
    for p in pattern:
        if p.startswith("$L_"):
            p = env["$L"] + p[2:]
        elif p.endswith("_$K"):
            p = p[:-2] + env["$K"]
        out.append(p)
    return tuple(out)


@dataclass(frozen=True)
class Rewrite:
    law: str
    position: int
    direction: Direction = Direction.FORWARD

    def string(self) -> str:
        return f"{self.law}@{self.position}" + (":bwd" if self.direction == Direction.BACKWARD else "")


def parse_rewrites(text: str) -> Tuple[Rewrite, ...]:
    """Parse "law@pos law@pos:bwd ..." into rewrites."""
    out = []
    for token in text.split():
        body, _, direction = token.partition(":")
        name, _, pos = body.partition("@")
        out.append(Rewrite(name, int(pos), Direction.BACKWARD if direction == "bwd" else Direction.FORWARD))
    return tuple(out)


def legal(law: Law, direction: Direction, side: Side) -> bool:
    if law.relation == Relation.EQUIV:
        return True
    if side == Side.OUTGOING:
        return direction == Direction.BACKWARD
    if side == Side.INCOMING:
        return direction == Direction.FORWARD
    return False


def apply_rewrite(atoms: Tuple[str, ...], rw: Rewrite, side: Side = Side.EITHER,
                  step: Optional[int] = None) -> Tuple[str, ...]:
    law = LAWS.get(rw.law)
    if law is None:
        raise UnsupportedLaw(f"unknown law {rw.law!r}")
    if not legal(law, rw.direction, side):
        raise PatternMismatch(f"{law.name} cannot be applied {rw.direction.value} "
                              f"in an {side.value} derivation", step)
    old, new = (law.left, law.right) if rw.direction == Direction.FORWARD else (law.right, law.left)
    window = atoms[rw.position:rw.position + len(old)]
    env = match_pattern(old, window)
    if env is None:
        raise PatternMismatch(f"{law.name} does not match {' ∘ '.join(window) or 'nothing'} "
                              f"at position {rw.position}", step)
    return atoms[:rw.position] + instantiate(new, env) + atoms[rw.position + len(old):]


def derive_rewrite(start: ConvExpr, rewrites: Sequence[Rewrite], side: Side = Side.EITHER) -> ConvExpr:
    atoms = start.atoms()
    for rw in rewrites:
        atoms = apply_rewrite(atoms, rw, side)
    return chain(atoms)


@dataclass(frozen=True)
class ScriptStep:
    label: str
    rewrites: Tuple[Rewrite, ...] = ()
    flatten: bool = False


@dataclass(frozen=True)
class DerivationScript:
    name: str
    side: Side
    start: ConvExpr
    steps: Tuple[ScriptStep, ...]
    expected: ConvExpr


@dataclass
class StepRecord:
    index: int
    label: str
    laws: List[str]
    notes: List[str]
    citations: List[str]
    before: str
    after: str

    def to_json(self) -> Dict[str, Any]:
        return {"step": self.index, "label": self.label, "laws": self.laws,
                "notes": self.notes, "citations": self.citations, "before": self.before,
                "after": self.after}


@dataclass
class Derivation:
    script: DerivationScript
    records: List[StepRecord] = field(default_factory=list)
    final: Optional[ConvExpr] = None

    @property
    def ok(self) -> bool:
        return self.final is not None and self.final.atoms() == self.script.expected.atoms()

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.script.name, "side": self.script.side.value,
                "start": self.script.start.string(),
                "final": self.final.string() if self.final is not None else None,
                "expected": self.script.expected.string(), "ok": self.ok,
                "steps": [r.to_json() for r in self.records]}


def replay(script: DerivationScript) -> Derivation:
    result = Derivation(script)
    expr = script.start
    for index, step in enumerate(script.steps, start=1):
        before = expr.string()
        if step.flatten:
            expr = flatten(expr)
        atoms = expr.atoms()
        names: List[str] = []
        for rw in step.rewrites:
            atoms = apply_rewrite(atoms, rw, script.side, index)
            if rw.law not in names:
                names.append(rw.law)
        if step.rewrites:
            expr = chain(atoms)
        result.records.append(StepRecord(index, step.label, names,
                                         [LAWS[n].mode.value for n in names],
                                         [LAWS[n].citation for n in names], before, expr.string()))
        LOGGER.debug("%s step %d: %s", script.name, index, expr.string())
    result.final = expr
    return result


def _per_pass(rows: Sequence[Tuple[str, str]]) -> ConvExpr:
    expr: Optional[ConvExpr] = None
    for _name, atoms in reversed(rows):
        part = chain(atoms.split())
        expr = part if expr is None else compose_conv(part, expr)
    assert expr is not None
    return expr


# Per-pass conventions of the full compiler, outgoing side.
OUTGOING_PASSES = (
    ("Clight self", "ro c_injp"), ("SimplLocals", "c_injp"), ("Cminorgen", "c_injp"),
    ("Selection", "wt c_ext"), ("RTLgen", "c_ext"), ("RTL self", "c_inj"), ("Tailcall", "c_ext"),
    ("Inlining", "c_injp"), ("Constprop", "ro c_injp"), ("CSE", "ro c_injp"),
    ("Deadcode", "ro c_injp"), ("Unusedglob", "c_inj"), ("Allocation", "wt c_ext CL"),
    ("Tunneling", "ltl_ext"), ("Stacking", "ltl_injp LM"), ("Asmgen", "mach_ext MA"),
    ("Asm self inj", "asm_inj"), ("Asm self injp", "asm_injp"),
)

INCOMING_PASSES = (
    ("Clight self", "ro c_injp"), ("SimplLocals", "c_inj"), ("Cminorgen", "c_inj"),
    ("Selection", "wt c_ext"), ("RTLgen", "c_ext"), ("RTL self", "c_inj"), ("Tailcall", "c_ext"),
    ("Inlining", "c_inj"), ("RTL self injp", "c_injp"), ("Constprop", "ro c_injp"),
    ("CSE", "ro c_injp"), ("Deadcode", "ro c_injp"), ("Unusedglob", "c_inj"),
    ("Allocation", "wt c_ext CL"), ("Tunneling", "ltl_ext"), ("Stacking", "LM mach_inj"),
    ("Asmgen", "mach_ext MA"), ("Asm self inj", "asm_inj"), ("Asm self injp", "asm_injp"),
)

PIPELINE_PASSES = (
    ("source self-simulation", "ro c_injp"), ("promotion", "c_injp"), ("const_prop", "ro c_injp"),
    ("signature check", "wt"), ("stacking_codegen", "CAinjp"),
)

FINAL_CONVENTION = chain(["ro", "wt", "CAinjp", "asm_injp"])
PIPELINE_CONVENTION = chain(["ro", "wt", "CAinjp"])


def _script(name: str, side: Side, rows: Sequence[Tuple[str, str]],
            steps: Sequence[Tuple[str, str]], expected: ConvExpr) -> DerivationScript:
    body = [ScriptStep("vertical composition of per-pass conventions", (), True)]
    body.extend(ScriptStep(label, parse_rewrites(text)) for label, text in steps)
    return DerivationScript(name, side, _per_pass(rows), tuple(body), expected)


OUTGOING = _script("outgoing", Side.OUTGOING, OUTGOING_PASSES, [
    ("merge adjacent KMRs and duplicated read-only steps",
     "injp-idem@1 injp-idem@1 ext-idem@3 ext-inj@3 inj-ext@3 ro-injp-trans@5:bwd ro-injp-trans@5:bwd"),
    ("move the inner wt left", "wt-commute@7 wt-commute@6 ro-wt-commute@5 wt-commute@4"),
    ("absorb and move wt to the front", "wt-absorb@2:bwd wt-commute@2 wt-commute@1 ro-wt-commute@0"),
    ("lift KMRs above the compilation interfaces",
     "cl-commute@9:bwd cl-commute@10:bwd lm-commute@12:bwd cl-commute@11:bwd "
     "ma-commute@14:bwd lm-commute@13:bwd cl-commute@12:bwd"),
    ("absorb extensions and strengthen inj to injp",
     "ext-idem@8 inj-ext@7 ext-inj@9 injp-inj@3:bwd injp-inj@7:bwd injp-inj@9:bwd"),
    ("merge the injp run", "injp-idem@2 injp-idem@2 injp-idem@4 injp-idem@4 injp-idem@4"),
    ("merge read-only steps", "ro-injp-trans@1:bwd"),
    ("put ro before wt", "ro-wt-commute@0:bwd"),
    ("fold into the direct convention", "cainjp-merge@2"),
], FINAL_CONVENTION)

INCOMING = _script("incoming", Side.INCOMING, INCOMING_PASSES, [
    ("merge adjacent KMRs and duplicated read-only steps",
     "inj-comp@2 ext-idem@4 ext-inj@4 inj-ext@4 inj-comp@4 ro-injp-trans@6:bwd ro-injp-trans@6:bwd"),
    ("move the inner wt left", "wt-commute@8 wt-commute@7 ro-wt-commute@6 wt-commute@5"),
    ("absorb and move wt to the front",
     "wt-absorb@3:bwd wt-commute@3 wt-commute@2 wt-commute@1 ro-wt-commute@0"),
    ("split the last injp", "injp-idem@7:bwd"),
    ("push KMRs below the compilation interfaces",
     "cl-commute@10 cl-commute@9 cl-commute@8 lm-commute@12 lm-commute@11 lm-commute@10 "
     "lm-commute@9 ma-commute@15 ma-commute@14 ma-commute@13 ma-commute@12 ma-commute@11 "
     "ma-commute@10"),
    ("absorb assembly extensions", "ext-idem@13 inj-ext@12 ext-inj@14"),
    ("compose inj runs", "inj-comp@3 inj-comp@11 inj-comp@11"),
    ("absorb inj between injp", "inj-absorb@2 inj-absorb@8"),
    ("merge read-only steps", "ro-injp-trans@1:bwd"),
    ("put ro before wt", "ro-wt-commute@0:bwd"),
    ("fold into the direct convention", "cainjp-merge@2"),
], FINAL_CONVENTION)

PIPELINE = _script("pipeline", Side.EITHER, PIPELINE_PASSES, [
    ("unfold the direct convention", "cainjp-merge@6:bwd"),
    ("move wt to the front",
     "wt-commute@4 ro-wt-commute@3 wt-commute@2 wt-commute@1 ro-wt-commute@0"),
    ("merge the injp run", "injp-idem@2 injp-idem@4"),
    ("merge read-only steps", "ro-injp-trans@1:bwd"),
    ("put ro before wt", "ro-wt-commute@0:bwd"),
    ("fold into the direct convention", "cainjp-merge@2"),
], PIPELINE_CONVENTION)

# scc absorbs a leading ro ∘ wt ∘ c_injp, used when composing a source-level
# refinement on top of a compiled module.
ABSORB = DerivationScript("absorb", Side.EITHER, chain(["ro", "wt", "c_injp", "ro", "wt", "CAinjp"]), (
    ScriptStep("unfold the direct convention", parse_rewrites("cainjp-merge@5:bwd")),
    ScriptStep("merge the typing steps", parse_rewrites("ro-wt-commute@3 wt-commute@2 wt-idem@1")),
    ScriptStep("merge read-only steps", parse_rewrites("ro-wt-commute@0 ro-injp-trans@1:bwd ro-wt-commute@0:bwd")),
    ScriptStep("fold into the direct convention", parse_rewrites("cainjp-merge@2")),
), PIPELINE_CONVENTION)

SCRIPTS = {s.name: s for s in (OUTGOING, INCOMING, PIPELINE, ABSORB)}


def empty_pipeline_script() -> DerivationScript:
    return DerivationScript("pipeline-empty", Side.EITHER, PIPELINE_CONVENTION, (), PIPELINE_CONVENTION)


# ---------------------------------------------------------------------------
# Sampled law checking at the C level.

_KMR = {"injp": KmrTag.INJP, "inj": KmrTag.INJ, "ext": KmrTag.EXT}


def law_symbols() -> SymbolTable:
    sg = Signature((Typ.INT,), Typ.INT)
    return SymbolTable.build([
        ("key", SymbolKind.VAR, True, (IntVal(42),), 1, None),
        ("g", SymbolKind.VAR, False, (IntVal(0), IntVal(0)), 2, None),
        ("f", SymbolKind.FUNC, False, (), 1, sg),
    ])


def _kmr_hops(atoms: Sequence[str]) -> List[KmrTag]:
    return [_KMR[split_atom(a)[1]] for a in atoms if split_atom(a) is not None]  # type: ignore


def witness_chain(kinds: Sequence[KmrTag], m0: MemoryState, mn: MemoryState, j: Meminj):
    """A chain of the given kinds relating m0 to mn through j.

    The last injecting hop carries j; injecting hops before it are the
    identity on dom(j), extension hops and hops after it are full identities.
    """
    chain_ = generators.Chain([m0], [], list(kinds))
    injecting = [i for i, k in enumerate(kinds) if k in (KmrTag.INJP, KmrTag.INJ)]
    carrier = injecting[-1] if injecting else len(kinds) - 1
    for i, kind in enumerate(kinds):
        if i < carrier:
            hop = Meminj.identity(j.domain()) if kind in (KmrTag.INJP, KmrTag.INJ) else Meminj.identity_on(m0)
            chain_.memories.append(m0)
        elif i == carrier:
            hop = j
            chain_.memories.append(mn)
        else:
            hop = Meminj.identity_on(mn)
            chain_.memories.append(mn)
        chain_.injections.append(hop)
    return chain_


def _query_at(c, k: int, q0: CQuery) -> CQuery:
    prefix = compose_all(c.injections[:k])
    vals = [value_transport(prefix, v) if k > 0 else v for v in (q0.vf,) + q0.args]
    return CQuery(vals[0], q0.sg, tuple(vals[1:]), c.memories[k])


def _check_queries(atoms: Sequence[str], c, q0: CQuery, se: SymbolTable) -> CheckReport:
    report = CheckReport("query")
    k = 0
    for a in atoms:
        q = _query_at(c, k, q0)
        if a == "ro":
            report.merge(ro_valid_report(se, q.m), f"ro#{k}:")
        elif a == "wt":
            report.merge(match_wt(q0.sg, q, q), f"wt#{k}:")
        else:
            w = c.world(k)
            q2 = _query_at(c, k + 1, q0)
            report.merge(rel_check(c.kinds[k], w), f"{a}#{k}:")
            for v1, v2 in zip((q.vf,) + q.args, (q2.vf,) + q2.args):
                report.check(v2 is not None and value_inject_check(w.j, v1, v2), f"{a}#{k}:values",
                             "query values not related")
            k += 1
    return report


def _check_replies(atoms: Sequence[str], c, m0p: MemoryState, mnp: MemoryState, jp: Meminj) -> CheckReport:
    """Rebuild the middle memories of c after an end-to-end evolution and check every hop."""
    report = CheckReport("reply")
    cur, rest, k = m0p, jp, 0
    for a in atoms:
        if a == "ro":
            for sub, message, witness in mem_acc_violations(c.memories[k], cur):
                report.fail(f"ro#{k}:mem-acc", f"{sub}: {message}", witness)
            continue
        if a == "wt":
            continue
        tag = c.kinds[k]
        w = c.world(k)
        if k == c.hops - 1:
            nxt = mnp
            w2 = InjpWorld(rest, cur, nxt)
        elif tag == KmrTag.EXT:
            e2, nxt = transport_evolution(w.j, w.m1, w.m2, cur)
            w2 = InjpWorld(e2, cur, nxt)
        elif tag == KmrTag.INJ and c.kinds[k + 1:] == [KmrTag.EXT]:
            try:
                j12p, nxt = interpolate_ext(w.j, w.m1, w.m2, c.memories[-1], rest, cur, mnp)
            except PreconditionError as ex:
                report.fail(f"{a}#{k}:precondition", str(ex))
                return report
            rest = Meminj.identity_on(nxt)
            w2 = InjpWorld(j12p, cur, nxt)
        else:
            try:
                j12p, rest, nxt = interpolate(w.j, compose_all(c.injections[k + 1:]), w.m1, w.m2,
                                              c.memories[-1], rest, cur, mnp)
            except PreconditionError as ex:
                report.fail(f"{a}#{k}:precondition", str(ex))
                return report
            w2 = InjpWorld(j12p, cur, nxt)
        report.merge(acc_check(tag, w, w2), f"{a}#{k}:acc:")
        report.merge(rel_check(tag, w2), f"{a}#{k}:rel:")
        cur, k = nxt, k + 1
    return report


def _random_query(rng, c, se: SymbolTable) -> CQuery:
    targets = c.fully_mapped()
    args: List[Value] = []
    params = []
    for _ in range(rng.randint(0, 3)):
        if targets and rng.random() < 0.5:
            b = rng.choice(targets)
            lo, hi = c.memories[0].bounds(b)
            args.append(Ptr(b, rng.randint(lo, max(lo, hi - 1))))
            params.append(Typ.PTR)
        else:
            args.append(IntVal(rng.randint(-5, 50)))
            params.append(Typ.INT)
    return CQuery(Ptr(se.block_of("f"), 0), Signature(tuple(params), Typ.INT), tuple(args), c.memories[0])


def _check_direction(left: Tuple[str, ...], right: Tuple[str, ...], cfg, rng,
                     se: SymbolTable, base: MemoryState) -> CheckReport:
    """One sampled instance of "left is refined by right"."""
    report = CheckReport(f"{' ∘ '.join(left)} ⊑ {' ∘ '.join(right)}")
    r_kinds = _kmr_hops(right)
    l_kinds = _kmr_hops(left)
    if r_kinds:
        r_chain = generators.random_chain(rng, cfg, r_kinds, base=base)
    else:
        r_chain = generators.Chain([generators.random_memory(rng, cfg, base)], [], [])
    m0, mn = r_chain.memories[0], r_chain.memories[-1]
    q0 = _random_query(rng, r_chain, se)
    j = r_chain.composite()

    if l_kinds:
        l_chain = witness_chain(l_kinds, m0, mn, j)
    else:
        l_chain = generators.Chain([m0], [], [])
    report.merge(_check_queries(left, l_chain, q0, se), "forward:")
    if not report.ok:
        return report

    evolving = l_chain if l_kinds else generators.Chain([m0, m0], [Meminj.identity_on(m0)], [KmrTag.ID])
    evolved = generators.random_evolution(rng, cfg, evolving)
    m0p, mnp = evolved.memories[0], evolved.memories[-1]
    jp = evolved.composite() if l_kinds else Meminj()
    report.merge(_check_replies(right, r_chain, m0p, mnp, jp), "backward:")
    return report


def refine_instance_check(name: str, cfg=None, seed: int = 0, iters: int = 100) -> SuiteReport:
    law = LAWS.get(name)
    if law is None:
        raise UnsupportedLaw(f"unknown law {name!r}")
    suite = SuiteReport(f"law {law.name}: {law.string()}")
    suite.details["mode"] = law.mode.value
    suite.details["note"] = law.note
    if law.mode == Mode.SYMBOLIC:
        LOGGER.info("%s is trusted; nothing to sample", law.name)
        return suite
    cfg = cfg if cfg is not None else generators.GenConfig()
    rng = generators.seeded(seed)
    se = law_symbols()
    base = init_memory(se)
    directions = [(law.left, law.right)]
    if law.relation == Relation.EQUIV:
        directions.append((law.right, law.left))
    for index in range(iters):
        env = {"$L": "c", "$K": KINDS[index % len(KINDS)]}
        for left, right in directions:
            report = _check_direction(instantiate(left, env), instantiate(right, env), cfg, rng, se, base)
            suite.record(report, {"seed": seed, "index": index, "kind": env["$K"]})
    LOGGER.info("%s: %d instances, %d failures", suite.name, suite.instances, len(suite.failures))
    return suite


# pylint: disable=wrong-import-position
import generators  # noqa: E402
