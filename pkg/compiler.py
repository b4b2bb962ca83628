"""The toy pipeline: local promotion, constant propagation and stacking.

Each pass returns its output together with the convention and matcher its
simulation is checked with. The pipeline as a whole is checked under the
direct convention ro ∘ wt ∘ CAinjp, which the derivation script obtains
from the per-pass conventions.
"""
import logging
import random
from typing import List, Optional, Sequence, Tuple

import mast
from asm import AsmProgram
from asm_evaluator import MiniAsmSemantics, sem_miniasm
from constprop import const_prop
from conv import ConvExpr, chain
from errors import CompileError
from evaluator import MiniCSemantics, sem_minic
from laws import PIPELINE, PIPELINE_CONVENTION, Derivation, DerivationScript, empty_pipeline_script, replay
from linker import symbol_table
from matchers import IdentityMatcher
from mem import IntVal, Ptr, Value
from promotion import local_promotion
from report import CheckReport
from sem import WORD, CQuery, EnvStrategy, OpenLTS, SkipEnv, SymbolTable, Typ, WriterEnv, init_memory
from simulation import Hop, PassOutput, PlanItem, SimReport, TestPlan, VerticalPairing, sim_check
from stacking import stacking_codegen

LOGGER = logging.getLogger("refine.compiler")

SOURCE_CONVENTION = chain(["ro", "c_injp"])


def check_signatures(program: mast.Program) -> CheckReport:
    """Direct calls pass as many arguments as the callee takes."""
    report = CheckReport("signatures")
    sigs = {e.name: e.sg for e in program.externs()}
    sigs.update({f.name: f.sg for f in program.functions()})
    for fn in program.functions():
        for stmt in mast.walk_statements(fn.body):
            if not isinstance(stmt, mast.CallStatement):
                continue
            callee = stmt.call.function
            if not isinstance(callee, mast.Identifier) or fn.variable(callee.value) is not None:
                continue
            sg = sigs.get(callee.value)
            if sg is None:
                continue
            report.check(len(sg.params) == len(stmt.call.arguments), "arity",
                         f"{fn.name} calls {callee.value} with {len(stmt.call.arguments)} arguments",
                         [fn.name, callee.value])
            if stmt.dest is not None:
                report.check(sg.result != Typ.VOID, "result",
                             f"{fn.name} assigns the result of void {callee.value}", [fn.name, callee.value])
    return report


def compile_passes(program: mast.Program) -> List[PassOutput]:
    signatures = check_signatures(program)
    if not signatures.ok:
        raise CompileError(signatures.summary())
    promoted = local_promotion(program)
    folded = const_prop(promoted.module)
    lowered = stacking_codegen(folded.module)
    return [promoted, folded, lowered]


def pipeline_compile(program: mast.Program) -> Tuple[AsmProgram, ConvExpr, DerivationScript]:
    passes = compile_passes(program)
    script = PIPELINE if program.functions() else empty_pipeline_script()
    LOGGER.info("compiled %d functions through %s", len(program.functions()),
                ", ".join(p.name for p in passes))
    return passes[-1].module, PIPELINE_CONVENTION, script


def derivation(program: mast.Program) -> Derivation:
    _, _, script = pipeline_compile(program)
    return replay(script)


def pipeline_pairing(program: mast.Program, se: Optional[SymbolTable] = None
                     ) -> Tuple[MiniCSemantics, MiniAsmSemantics, VerticalPairing]:
    """Source and target LTSs with the per-pass matchers chained through
    every intermediate program, for a sim_check under the direct convention."""
    if se is None:
        se = symbol_table([program])
    passes = compile_passes(program)
    source = sem_minic(program, se, "source")
    middles = [sem_minic(program, se, "self")]
    middles.extend(sem_minic(p.module, se, p.name) for p in passes[:-1])
    target = sem_miniasm(passes[-1].module, se, "target")
    hops = [Hop(SOURCE_CONVENTION, SOURCE_CONVENTION, IdentityMatcher())]
    hops.extend(p.hop() for p in passes)
    return source, target, VerticalPairing(middles, hops)


PASSES = ("promotion", "const_prop", "stacking", "pipeline")


def random_plan(se: SymbolTable, entries: Sequence[str], seed: int, size: int,
                callbacks: Sequence[str] = ()) -> List[PlanItem]:
    """Queries to the entry functions in turn, with small integer arguments.

    Pointer arguments alternate between a fresh one-cell block and, when
    callbacks are given, a function outside the entries. Even items answer
    external calls with nothing, odd ones with seeded writes.
    """
    rng = random.Random(seed)
    m0 = init_memory(se)
    items: List[PlanItem] = []
    for k in range(size if entries else 0):
        name = entries[k % len(entries)]
        symbol = se.lookup(name)
        if symbol is None or symbol.sg is None:
            raise CompileError(f"{name} is not a function")
        m = m0
        args: List[Value] = []
        for t in symbol.sg.params:
            if t == Typ.PTR and callbacks and rng.random() < 0.5:
                args.append(Ptr(se.block_of(rng.choice(callbacks)), 0))
            elif t == Typ.PTR:
                m, b = m.alloc(0, WORD)
                m = m.store(b, 0, IntVal(rng.randint(-20, 99)))
                args.append(Ptr(b, 0))
            else:
                args.append(IntVal(rng.randint(0, 20)))
        env: EnvStrategy = SkipEnv() if k % 2 == 0 else WriterEnv(seed * 7919 + k)
        q = CQuery(Ptr(symbol.block, 0), symbol.sg, tuple(args), m)
        label = f"{name}({', '.join(a.string() for a in args)}) {env.name}"
        items.append(PlanItem(q, env, label))
    return items


def check_pass(program: mast.Program, name: str, plan: TestPlan,
               se: Optional[SymbolTable] = None) -> SimReport:
    """Checks one pass, or the whole pipeline, over a plan of C queries."""
    if name not in PASSES:
        raise CompileError(f"unknown pass {name!r}; expected one of {', '.join(PASSES)}")
    if se is None:
        se = symbol_table([program])
    if name == "pipeline":
        source, target, pairing = pipeline_pairing(program, se)
        return sim_check(source, target, PIPELINE_CONVENTION, PIPELINE_CONVENTION, pairing, plan, name)
    passes = compile_passes(program)
    inputs = [program] + [p.module for p in passes]
    index = PASSES.index(name)
    out = passes[index]
    l1 = sem_minic(inputs[index], se, "input")
    l2: OpenLTS = sem_miniasm(out.module, se, out.name) if name == "stacking" else sem_minic(out.module, se, out.name)
    return sim_check(l1, l2, out.convention, out.convention, out.matcher, plan,
                     f"{name}: {out.convention.string()}")
