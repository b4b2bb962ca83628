"""End-to-end scenarios over the bundled programs.

Each scenario follows the same outline. The C client is compiled and its
derivation replayed. The hand-written module is checked against its spec,
and the pipeline against its direct convention. The two halves are composed
horizontally, semantic linking is compared with syntactic linking, and the
top-level spec is refined at the source and checked against the linked
assembly in one simulation.
"""
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import mast
from asm import AsmProgram, parse_miniasm
from asm_evaluator import sem_miniasm
from compiler import pipeline_compile, pipeline_pairing, random_plan
from config import Config
from constprop import const_prop
from conv import ConvExpr, chain, convention_for
from errors import ToolkitError, UnknownScenario, UnknownSpec
from evaluator import sem_minic
from laws import ABSORB, PIPELINE_CONVENTION, replay
from library import load_minic, load_miniasm, load_module, program_path
from linker import symbol_table, syn_link
from matchers import BoundaryMatcher, SumAsmMatcher
from mem import IntVal, MemoryState, Ptr, UNDEF, Value
from promotion import local_promotion
from report import CheckReport
from sem import (WORD, AQuery, AReply, CQuery, EnvStrategy, ExternalCall, FunctionEnv, Interface, LinkedLTS,
                 OpenLTS, Query, Reg, Reply, SkipEnv, SymbolKind, SymbolTable, Typ, WriterEnv, init_memory,
                 link_sem, observe_globals, run_trace, trace_equal)
from simulation import Outcome, PlanItem, SimReport, StateMatcher, sim_check
from specs import SPECS, build_spec

LOGGER = logging.getLogger("refine.scenarios")

SCC = PIPELINE_CONVENTION
SOURCE_REFINEMENT = chain(["ro", "wt", "c_injp"])


@dataclass
class StepResult:
    name: str
    ok: bool
    summary: str
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {"step": self.name, "ok": self.ok, "summary": self.summary, "detail": self.detail}


@dataclass
class ScenarioReport:
    name: str
    steps: List[StepResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.steps) and all(s.ok for s in self.steps)

    def failures(self) -> List[StepResult]:
        return [s for s in self.steps if not s.ok]

    def summary(self) -> str:
        lines = [f"{self.name}: {'pass' if self.ok else 'FAIL'}"]
        for s in self.steps:
            lines.append(f"  [{'ok' if s.ok else 'FAIL'}] {s.name}: {s.summary}")
        return "\n".join(lines)

    def to_json(self) -> Dict[str, Any]:
        return {"scenario": self.name, "ok": self.ok, "steps": [s.to_json() for s in self.steps]}


def c_query(se: SymbolTable, name: str, args: Sequence[Value], m: MemoryState) -> CQuery:
    symbol = se.lookup(name)
    if symbol is None or symbol.sg is None:
        raise UnknownScenario(f"{name} is not a function of the scenario")
    return CQuery(Ptr(symbol.block, 0), symbol.sg, tuple(args), m)


def asm_query(q: CQuery, se: SymbolTable) -> AQuery:
    """The assembly query CAinjp relates to q."""
    _, q2 = convention_for(chain(["CAinjp"])).transport_query(q, se)
    assert isinstance(q2, AQuery)
    return q2


def with_cell(m: MemoryState, value: Value) -> Tuple[MemoryState, Ptr]:
    """Allocates one environment cell holding value."""
    m, b = m.alloc(0, WORD)
    return m.store(b, 0, value), Ptr(b, 0)


def read_global(se: SymbolTable, m: MemoryState, name: str, k: int = 0) -> Value:
    return m.contents(se.block_of(name), WORD * k)


def write_global(se: SymbolTable, m: MemoryState, name: str, k: int, v: Value) -> MemoryState:
    return m.store(se.block_of(name), WORD * k, v)


def _sim_step(name: str, report: SimReport) -> StepResult:
    return StepResult(name, report.ok, report.summary(), report.to_json())


def _expect_step(name: str, report: SimReport, outcome: Outcome, clause: Optional[str]) -> StepResult:
    """A check that must not pass: every item ends with the given outcome and clause."""
    got = [(i.outcome, i.clause) for i in report.items]
    ok = bool(got) and all(g == (outcome, clause) for g in got)
    expected = outcome.value + (f" at clause {clause}" if clause else "")
    return StepResult(name, ok, f"expected {expected}; {report.summary()}", report.to_json())


def _check_step(name: str, report: CheckReport, done: str) -> StepResult:
    return StepResult(name, report.ok, done if report.ok else report.summary(), report.to_json())


def _simulate(name: str, l1: OpenLTS, l2: OpenLTS, conv: ConvExpr, matcher: StateMatcher,
              items: List[PlanItem], cfg: Config) -> SimReport:
    return sim_check(l1, l2, conv, conv, matcher, cfg.plan(items), name)


def _items(queries: Sequence[Tuple[str, Query]], env: Callable[[int], EnvStrategy]) -> List[PlanItem]:
    return [PlanItem(q, env(k), label) for k, (label, q) in enumerate(queries)]


def _guarded(name: str, run: Callable[[], StepResult]) -> StepResult:
    try:
        return run()
    except ToolkitError as ex:
        LOGGER.warning("%s: %s", name, ex)
        return StepResult(name, False, f"{type(ex).__name__}: {ex}")


def _compile_step(name: str, program: mast.Program) -> Tuple[StepResult, AsmProgram]:
    compiled, conv, script = pipeline_compile(program)
    derivation = replay(script)
    ok = derivation.ok and conv.atoms() == SCC.atoms()
    final = derivation.final.string() if derivation.final is not None else "none"
    summary = f"{name}: {len(compiled.functions())} functions, {script.start.string()} => {final}"
    return StepResult("compile", ok, summary, {"derivation": derivation.to_json(),
                                               "asm": compiled.string()}), compiled


def _absorb_step() -> StepResult:
    derivation = replay(ABSORB)
    final = derivation.final.string() if derivation.final is not None else "none"
    return StepResult("absorb", derivation.ok, f"{ABSORB.start.string()} => {final}", derivation.to_json())


def _adequacy_step(semantic: OpenLTS, syntactic: OpenLTS, queries: Sequence[Tuple[str, CQuery]],
                   se: SymbolTable, observed: Sequence[str], cfg: Config) -> StepResult:
    report = CheckReport("adequacy")
    projection = observe_globals(se, observed)
    for label, q in queries:
        qa = asm_query(q, se)
        try:
            t1 = run_trace(semantic, qa, SkipEnv(), cfg.fuel)
            t2 = run_trace(syntactic, qa, SkipEnv(), cfg.fuel)
        except ToolkitError as ex:
            report.fail("run", f"{label}: {ex}")
            continue
        report.check(trace_equal(t1, t2, projection), "trace", f"{label}: traces differ",
                     [t1.to_json_lines(), t2.to_json_lines()])
    return _check_step("adequacy", report, f"{len(queries)} queries, semantic and syntactic linking agree")


def _final_asm(lts: OpenLTS, q: CQuery, se: SymbolTable, cfg: Config,
               env: Optional[EnvStrategy] = None) -> Tuple[AReply, int]:
    trace = run_trace(lts, asm_query(q, se), env or SkipEnv(), cfg.fuel)
    reply = trace.final()
    assert isinstance(reply, AReply)
    return reply, len(trace.outgoing())


def copy_result(se: SymbolTable) -> Callable[[ExternalCall], Tuple[Value, MemoryState]]:
    """A callback environment: stores what its pointer argument points to
    into result[0]."""
    def handler(call: ExternalCall) -> Tuple[Value, MemoryState]:
        p = call.args[0] if call.args else UNDEF
        if not isinstance(p, Ptr):
            return UNDEF, call.m
        return UNDEF, write_global(se, call.m, "result", 0, call.m.load(p.block, p.offset))
    return handler


def triangle(call: ExternalCall) -> Tuple[Value, MemoryState]:
    """The sum 0 + 1 + ... + n, as f and g both compute it."""
    n = call.args[0] if call.args else UNDEF
    if not isinstance(n, IntVal):
        return UNDEF, call.m
    return IntVal(n.value * (n.value + 1) // 2), call.m


@dataclass(frozen=True)
class Scenario:
    name: str
    doc: str
    modules: Tuple[str, str]
    # Spec of the hand-written module, then the top-level spec.
    specs: Tuple[str, str]
    run: Callable[["Scenario", Config], List[StepResult]]


# Client and server.

def _client_queries(se: SymbolTable, callback: str, rng: random.Random, n: int,
                    top: bool) -> List[Tuple[str, CQuery]]:
    m0 = init_memory(se)
    out: List[Tuple[str, CQuery]] = []
    request = se.lookup("request")
    assert request is not None and request.sg is not None
    ints = [11] + [rng.randint(-50, 200) for _ in range(max(0, n - 1))]
    if request.sg.params and request.sg.params[0] == Typ.INT:
        out.extend((f"request({i})", c_query(se, "request", [IntVal(i)], m0)) for i in ints)
    else:
        m, p = with_cell(m0, IntVal(0))
        out.append(("request(p)", c_query(se, "request", [p], m)))
        later = write_global(se, m, "i", 0, IntVal(se.lookup("input").size))  # type: ignore
        out.append(("request(p) last", c_query(se, "request", [p], later)))
    if top:
        cb = Ptr(se.block_of(callback), 0)
        out.extend((f"encrypt({i}, {callback})", c_query(se, "encrypt", [IntVal(i), cb], m0))
                   for i in ints[:2])
        if callback == "process":
            m, p = with_cell(m0, IntVal(ints[-1]))
            out.append(("process(p)", c_query(se, "process", [p], m)))
    return out


def _server_queries(se: SymbolTable, callback: str, rng: random.Random, n: int) -> List[Tuple[str, CQuery]]:
    m0 = init_memory(se)
    cb = Ptr(se.block_of(callback), 0)
    ints = [11] + [rng.randint(-50, 200) for _ in range(max(0, n - 1))]
    return [(f"encrypt({i}, {callback})", c_query(se, "encrypt", [IntVal(i), cb], m0)) for i in ints]


def _observe_client(se: SymbolTable, linked: OpenLTS, cfg: Config) -> StepResult:
    report = CheckReport("observables")
    key = read_global(se, init_memory(se), "key")
    assert isinstance(key, IntVal)
    m0 = init_memory(se)
    request = se.lookup("request")
    assert request is not None and request.sg is not None
    if request.sg.params[0] == Typ.INT:
        reply, _ = _final_asm(linked, c_query(se, "request", [IntVal(11)], m0), se, cfg)
        report.check(reply.rs[Reg.RAX] == IntVal(11), "reply", "request(11) does not return 11",
                     reply.rs[Reg.RAX].string())
        result = read_global(se, reply.m, "result")
        report.check(result == IntVal(11 ^ key.value), "result", f"result is {result.string()}",
                     result.string())
        return _check_step("observables", report, f"request(11) returns 11, result = {11 ^ key.value}")
    m, p = with_cell(m0, IntVal(0))
    reply, _ = _final_asm(linked, c_query(se, "request", [p], m), se, cfg)
    inputs = se.lookup("input")
    assert inputs is not None
    for k, v in enumerate(inputs.init):
        got = read_global(se, reply.m, "result", k)
        report.check(got == IntVal(v.value ^ key.value), "result", f"result[{k}] is {got.string()}", k)
    return _check_step("observables", report, f"result[k] = input[k] ^ {key.value} for all {inputs.size} k")


def _server_variant(name: str, edit: Callable[[str], str]) -> AsmProgram:
    return parse_miniasm(edit(program_path(name).read_text()))


def _clobber_frame(hop: int, r: Reply) -> Reply:
    """Overwrites the link slot of the frame the target called out from."""
    if not isinstance(r, AReply) or not isinstance(r.rs[Reg.RSP], Ptr):
        return r
    sp = r.rs[Reg.RSP]
    assert isinstance(sp, Ptr)
    return AReply(r.rs, r.m.store(sp.block, sp.offset, IntVal(0)))


def _negatives(sc: Scenario, client: mast.Program, cfg: Config) -> List[StepResult]:
    steps = []
    rng = random.Random(cfg.seed)
    variants = [
        ("negative: wrong xor constant", "server_opt.ma",
         lambda text: text.replace("Pxori 42", "Pxori 41"), None, Outcome.FAIL, "3"),
        ("negative: clobbered RBX", "server.ma",
         lambda text: text.replace("  Pfreeframe", "  Pconst 0 RBX\n  Pfreeframe"), None, Outcome.FAIL, "5"),
        ("negative: env writes an out-of-reach slot", "server.ma",
         lambda text: text, _clobber_frame, Outcome.VACUOUS, "4"),
    ]
    for name, base, edit, tamper, outcome, clause in variants:
        def run(name: str = name, base: str = base, edit: Callable[[str], str] = edit,
                tamper: Any = tamper, outcome: Outcome = outcome, clause: str = clause) -> StepResult:
            server = _server_variant(base, edit)
            se = symbol_table([client, server])
            items = _items(_server_queries(se, "process", rng, 3),
                           lambda k: FunctionEnv({"process": copy_result(se)}))
            for item in items:
                item.tamper = tamper
            report = _simulate(name, build_spec(sc.specs[0], se), sem_miniasm(server, se, base),
                               SCC, BoundaryMatcher(), items, cfg)
            return _expect_step(name, report, outcome, clause)
        steps.append(_guarded(name, run))
    return steps


def _double_key(cfg: Config) -> List[StepResult]:
    """Constant propagation of a read-only global is only sound under ro."""
    program = load_minic("double_key.mc")
    se = symbol_table([program])
    promoted = local_promotion(program)
    folded = const_prop(promoted.module)
    source = sem_minic(promoted.module, se, "promoted")
    target = sem_minic(folded.module, se, "const_prop")
    good = init_memory(se)
    bad = good.set_contents(se.block_of("key"), 0, IntVal(41))

    def items(m: MemoryState) -> List[PlanItem]:
        q = c_query(se, "double_key", [], m)
        return [PlanItem(q, WriterEnv(cfg.seed + k), f"double_key() #{k}") for k in range(2)]

    steps = [
        _sim_step("double-key under ro", _simulate("double-key", source, target, folded.convention,
                                                   folded.matcher, items(good), cfg)),
        _expect_step("negative: key changed without ro",
                     _simulate("double-key c_injp", source, target, chain(["c_injp"]), folded.matcher,
                               items(bad), cfg), Outcome.FAIL, "3"),
        _expect_step("key changed under ro",
                     _simulate("double-key ro", source, target, folded.convention, folded.matcher,
                               items(bad), cfg), Outcome.VACUOUS, None),
    ]
    return steps


def _run_client_server(sc: Scenario, cfg: Config) -> List[StepResult]:
    client = load_minic(sc.modules[0])
    server = load_miniasm(sc.modules[1])
    se = symbol_table([client, server])
    callback = "process" if se.lookup("process") is not None else "request"
    rng = random.Random(cfg.seed)
    n = max(1, cfg.plan_size // 2)
    steps: List[StepResult] = []

    step, client_asm = _compile_step(sc.modules[0], client)
    steps.append(step)

    def writer(k: int) -> EnvStrategy:
        return SkipEnv() if k % 2 == 0 else WriterEnv(cfg.seed + k)

    def pipeline() -> StepResult:
        source, target, pairing = pipeline_pairing(client, se)
        items = _items(_client_queries(se, callback, rng, n, top=False), writer)
        return _sim_step("pipeline", _simulate("pipeline", source, target, SCC, pairing, items, cfg))
    steps.append(_guarded("pipeline", pipeline))

    server_spec = build_spec(sc.specs[0], se)
    server_lts = sem_miniasm(server, se, sc.modules[1])

    def spec_vs_impl() -> StepResult:
        items = _items(_server_queries(se, callback, rng, n),
                       lambda k: FunctionEnv({callback: copy_result(se)}))
        return _sim_step("server spec", _simulate(f"{sc.specs[0]} <= {sc.modules[1]}", server_spec,
                                                  server_lts, SCC, BoundaryMatcher(), items, cfg))
    steps.append(_guarded("server spec", spec_vs_impl))

    top_queries = _client_queries(se, callback, rng, n, top=True)
    source_linked = link_sem(sem_minic(client, se, sc.modules[0]), server_spec)
    asm_linked = link_sem(sem_miniasm(client_asm, se, "client.ma"), server_lts)
    syntactic = sem_miniasm(syn_link(client_asm, server), se, "linked")

    def horizontal() -> StepResult:
        items = _items(top_queries, lambda k: SkipEnv())
        return _sim_step("horizontal", _simulate("horizontal", source_linked, asm_linked, SCC,
                                                 BoundaryMatcher(), items, cfg))
    steps.append(_guarded("horizontal", horizontal))
    steps.append(_guarded("adequacy", lambda: _adequacy_step(asm_linked, syntactic, top_queries, se,
                                                             ["result"], cfg)))

    top = build_spec(sc.specs[1], se)

    def source_refinement() -> StepResult:
        items = _items(top_queries, lambda k: SkipEnv())
        return _sim_step("source refinement", _simulate(f"{sc.specs[1]} <= source", top, source_linked,
                                                        SOURCE_REFINEMENT, BoundaryMatcher(), items, cfg))
    steps.append(_guarded("source refinement", source_refinement))
    steps.append(_absorb_step())

    def end_to_end() -> StepResult:
        items = _items(top_queries, lambda k: SkipEnv())
        return _sim_step("end-to-end", _simulate(f"{sc.specs[1]} <= linked asm", top, syntactic, SCC,
                                                 BoundaryMatcher(), items, cfg))
    steps.append(_guarded("end-to-end", end_to_end))
    steps.append(_guarded("observables", lambda: _observe_client(se, syntactic, cfg)))

    if sc.name == "client-server":
        steps.extend(_negatives(sc, client, cfg))
    if sc.name == "client-server-opt":
        steps.extend(_double_key(cfg))
    return steps


# Mutual summation.

def _sum_queries(se: SymbolTable, names: Sequence[str], rng: random.Random,
                 n: int) -> List[Tuple[str, CQuery]]:
    m0 = init_memory(se)
    ints = [0, 1, 4] + [rng.randint(0, 20) for _ in range(max(0, n - 3))]
    out = [(f"{f}({i})", c_query(se, f, [IntVal(i)], m0)) for f in names for i in ints]
    if "g" in names:
        cached = write_global(se, write_global(se, m0, "s", 0, IntVal(4)), "s", 1, IntVal(10))
        out.append(("g(4) cached", c_query(se, "g", [IntVal(4)], cached)))
    return out


def _observe_sum(se: SymbolTable, linked: OpenLTS, sum_g: OpenLTS, cfg: Config) -> StepResult:
    report = CheckReport("observables")
    for i in range(21):
        reply, _ = _final_asm(linked, c_query(se, "f", [IntVal(i)], init_memory(se)), se, cfg)
        report.check(reply.rs[Reg.RAX] == IntVal(i * (i + 1) // 2), "sum", f"f({i}) is wrong",
                     [i, reply.rs[Reg.RAX].string()])
    env = FunctionEnv({"f": triangle})
    for lts in (build_spec("L_A", se), sum_g):
        q = c_query(se, "g", [IntVal(4)], init_memory(se))
        first = run_trace(lts, q if lts.incoming == Interface.C else asm_query(q, se), env, cfg.fuel)
        reply = first.final()
        assert reply is not None
        report.check(len(first.outgoing()) == 1, "cache", f"{lts.name}: g(4) should call f once")
        report.check(read_global(se, reply.m, "s", 0) == IntVal(4) and
                     read_global(se, reply.m, "s", 1) == IntVal(10), "cache",
                     f"{lts.name}: g(4) does not cache [4, 10]")
        again = c_query(se, "g", [IntVal(4)], reply.m)
        second = run_trace(lts, again if lts.incoming == Interface.C else asm_query(again, se), env, cfg.fuel)
        last = second.final()
        value = last.rs[Reg.RAX] if isinstance(last, AReply) else getattr(last, "res", None)
        report.check(not second.outgoing(), "cache", f"{lts.name}: repeated g(4) calls f")
        report.check(value == IntVal(10), "cache", f"{lts.name}: repeated g(4) is not 10")
    return _check_step("observables", report, "f(i) = i(i+1)/2 for i <= 20; repeated g(4) is cached")


def _run_mutual_sum(sc: Scenario, cfg: Config) -> List[StepResult]:
    sum_f = load_minic(sc.modules[0])
    sum_g = load_miniasm(sc.modules[1])
    se = symbol_table([sum_f, sum_g])
    rng = random.Random(cfg.seed)
    n = max(3, cfg.plan_size // 2)
    steps: List[StepResult] = []

    step, f_asm = _compile_step(sc.modules[0], sum_f)
    steps.append(step)

    def pipeline() -> StepResult:
        source, target, pairing = pipeline_pairing(sum_f, se)
        items = _items(_sum_queries(se, ["f"], rng, n), lambda k: FunctionEnv({"g": triangle}))
        return _sim_step("pipeline", _simulate("pipeline", source, target, SCC, pairing, items, cfg))
    steps.append(_guarded("pipeline", pipeline))

    spec_g = build_spec(sc.specs[0], se)
    g_lts = sem_miniasm(sum_g, se, sc.modules[1])

    def spec_g_vs_impl() -> StepResult:
        items = _items(_sum_queries(se, ["g"], rng, n), lambda k: FunctionEnv({"f": triangle}))
        return _sim_step("asm spec", _simulate(f"{sc.specs[0]} <= {sc.modules[1]}", spec_g, g_lts, SCC,
                                               SumAsmMatcher(), items, cfg))
    steps.append(_guarded("asm spec", spec_g_vs_impl))

    def spec_f_vs_impl() -> StepResult:
        items = _items(_sum_queries(se, ["f"], rng, n), lambda k: FunctionEnv({"g": triangle}))
        return _sim_step("C spec", _simulate(f"L_C <= {sc.modules[0]}", build_spec("L_C", se),
                                             sem_minic(sum_f, se, sc.modules[0]), SOURCE_REFINEMENT,
                                             BoundaryMatcher(), items, cfg))
    steps.append(_guarded("C spec", spec_f_vs_impl))

    top_queries = _sum_queries(se, ["f", "g"], rng, n)
    source_linked = link_sem(sem_minic(sum_f, se, sc.modules[0]), spec_g)
    asm_linked = link_sem(sem_miniasm(f_asm, se, "sum_f.ma"), g_lts)
    syntactic = sem_miniasm(syn_link(f_asm, sum_g), se, "linked")

    def horizontal() -> StepResult:
        items = _items(top_queries, lambda k: SkipEnv())
        return _sim_step("horizontal", _simulate("horizontal", source_linked, asm_linked, SCC,
                                                 BoundaryMatcher(), items, cfg))
    steps.append(_guarded("horizontal", horizontal))
    steps.append(_guarded("adequacy", lambda: _adequacy_step(asm_linked, syntactic, top_queries, se,
                                                             ["memoized", "s"], cfg)))

    top = build_spec(sc.specs[1], se)

    def source_refinement() -> StepResult:
        items = _items(top_queries, lambda k: SkipEnv())
        return _sim_step("source refinement", _simulate(f"{sc.specs[1]} <= source", top, source_linked,
                                                        SOURCE_REFINEMENT, BoundaryMatcher(), items, cfg))
    steps.append(_guarded("source refinement", source_refinement))
    steps.append(_absorb_step())

    def end_to_end() -> StepResult:
        items = _items(top_queries, lambda k: SkipEnv())
        return _sim_step("end-to-end", _simulate(f"{sc.specs[1]} <= linked asm", top, syntactic, SCC,
                                                 BoundaryMatcher(), items, cfg))
    steps.append(_guarded("end-to-end", end_to_end))
    steps.append(_guarded("observables", lambda: _observe_sum(se, syntactic, g_lts, cfg)))
    return steps


SCENARIOS: Dict[str, Scenario] = {sc.name: sc for sc in [
    Scenario("client-server", "client.mc with the encryption server", ("client.mc", "server.ma"),
             ("L_S", "L_CS"), _run_client_server),
    Scenario("client-server-opt", "client.mc with the server whose key is folded into the code",
             ("client.mc", "server_opt.ma"), ("L_S", "L_CS"), _run_client_server),
    Scenario("client-server-mr", "the multi-request client with the encryption server",
             ("client_mr.mc", "server.ma"), ("L_S", "L_CS'"), _run_client_server),
    Scenario("mutual-sum", "f in C and g in assembly computing sums through each other",
             ("sum_f.mc", "sum_g.ma"), ("L_A", "L_CA"), _run_mutual_sum),
]}


def run_scenario(name: str, cfg: Optional[Config] = None) -> ScenarioReport:
    sc = SCENARIOS.get(name)
    if sc is None:
        raise UnknownScenario(f"unknown scenario {name}; expected one of {', '.join(SCENARIOS)}")
    cfg = cfg if cfg is not None else Config()
    report = ScenarioReport(name, sc.run(sc, cfg))
    for step in report.steps:
        log = LOGGER.info if step.ok else LOGGER.warning
        log("%s / %s: %s", name, step.name, step.summary)
    return report


# Ad hoc checks over named specs and module files.

def symbols_for(names: Sequence[str]) -> SymbolTable:
    """The table of the modules named, with the bundled modules each named
    spec runs against."""
    paths: List[Path] = []
    for name in names:
        for module in (SPECS[name].modules if name in SPECS else (name,)):
            path = program_path(module).resolve()
            if path not in paths:
                paths.append(path)
    return symbol_table([load_module(str(p)) for p in paths])  # type: ignore


def open_lts(names: Sequence[str], se: SymbolTable) -> OpenLTS:
    parts: List[OpenLTS] = []
    for name in names:
        if name in SPECS:
            parts.append(build_spec(name, se))
            continue
        module = load_module(name)
        if isinstance(module, mast.Program):
            parts.append(sem_minic(module, se, Path(name).name))
        else:
            parts.append(sem_miniasm(module, se, Path(name).name))
    if not parts:
        raise UnknownSpec("nothing to run")
    return parts[0] if len(parts) == 1 else LinkedLTS(parts)


def check_refinement(src: Sequence[str], tgt: Sequence[str], conv: ConvExpr,
                     cfg: Optional[Config] = None) -> SimReport:
    """Randomized sim_check of the linked sources against the linked targets."""
    cfg = cfg if cfg is not None else Config()
    se = symbols_for(list(src) + list(tgt))
    l1, l2 = open_lts(src, se), open_lts(tgt, se)
    defined = l1.defined_symbols()
    entries = [s.name for s in se.symbols() if s.name in defined and s.sg is not None]
    callbacks = [s.name for s in se.symbols()
                 if s.kind == SymbolKind.FUNC and s.name not in defined and s.sg is not None]
    matcher: StateMatcher = SumAsmMatcher() if list(src) == ["L_A"] else BoundaryMatcher()
    items = random_plan(se, entries, cfg.seed, cfg.plan_size, callbacks)
    return sim_check(l1, l2, conv, conv, matcher, cfg.plan(items), f"{l1.name} <= {l2.name}")
