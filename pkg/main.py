"""Command-line front door.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 on usage errors (bad flags, unreadable or malformed input).
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import kmr
from compiler import PASSES, check_pass, pipeline_compile, random_plan
from config import Config, load_config
from conv import parse_conv
from errors import FuelExhausted, ParseError, StuckError, ToolkitError
from laws import LAWS, PIPELINE_CONVENTION, SCRIPTS, refine_instance_check, replay
from library import load_minic, load_module
from linker import symbol_table, syn_link
from mem import IntVal, MemoryState, UNDEF, Ptr, Value
from report import SuiteReport
from scenarios import SCENARIOS, asm_query, c_query, check_refinement, open_lts, run_scenario, symbols_for, with_cell
from sem import Interface, SkipEnv, SymbolTable, WriterEnv, init_memory, run_trace

LOGGER = logging.getLogger("refine.main")

Handler = Callable[[argparse.Namespace, Config], int]


def _emit(args: argparse.Namespace, obj: Any, text: str) -> None:
    if args.json:
        print(json.dumps(obj, indent=2))
    else:
        print(text)


def _suite_line(suite: SuiteReport, ok: Optional[bool] = None) -> str:
    ok = suite.ok if ok is None else ok
    return (f"  [{'ok' if ok else 'FAIL'}] {suite.name}: {suite.instances} instances, "
            f"{suite.vacuous} vacuous, {len(suite.failures)} failures")


def cmd_check_injp(args: argparse.Namespace, cfg: Config) -> int:
    gen = cfg.gen_config()
    suites = [
        kmr.check_interpolation(gen, cfg.seed, cfg.iters),
        kmr.check_decomposition(gen, cfg.seed, cfg.iters),
        kmr.check_injections(gen, cfg.seed, cfg.iters),
    ]
    ok = all(s.ok for s in suites)
    obj = {"ok": ok, "instances": sum(s.instances for s in suites),
           "failures": [f for s in suites for f in s.failures],
           "suites": [s.to_json() for s in suites]}
    _emit(args, obj, "\n".join(["check-injp:"] + [_suite_line(s) for s in suites]))
    return 0 if ok else 1


def cmd_check_laws(args: argparse.Namespace, cfg: Config) -> int:
    gen = cfg.gen_config()
    names = args.law or list(LAWS)
    rows: List[Tuple[SuiteReport, bool]] = []
    for name in names:
        suite = refine_instance_check(name, gen, cfg.seed, cfg.samples)
        rows.append((suite, suite.ok))
    if not args.law:
        for (k, l), holds in kmr.REFINEMENT_PAIRS.items():
            suite = kmr.kmr_sample_refine(k, l, gen, cfg.seed, cfg.samples)
            # A pair expected not to hold passes when a counterexample turns up.
            rows.append((suite, suite.ok if holds else not suite.ok))
    derivations = [replay(script) for script in SCRIPTS.values()] if not args.law else []
    ok = all(passed for _, passed in rows) and all(d.ok for d in derivations)
    obj = {"ok": ok, "suites": [dict(s.to_json(), ok=passed) for s, passed in rows],
           "derivations": [d.to_json() for d in derivations]}
    lines = ["check-laws:"] + [_suite_line(s, passed) for s, passed in rows]
    lines.extend(f"  [{'ok' if d.ok else 'FAIL'}] script {d.script.name}: {len(d.records)} steps"
                 for d in derivations)
    _emit(args, obj, "\n".join(lines))
    return 0 if ok else 1


def cmd_compile(args: argparse.Namespace, cfg: Config) -> int:
    program = load_minic(args.input)
    compiled, conv, script = pipeline_compile(program)
    derivation = replay(script)
    text = compiled.string()
    if args.out:
        Path(args.out).write_text(text + "\n")
    if args.emit_derivation:
        Path(args.emit_derivation).write_text(json.dumps(derivation.to_json(), indent=2) + "\n")
    ok = derivation.ok and conv.atoms() == PIPELINE_CONVENTION.atoms()
    obj = {"ok": ok, "input": args.input, "output": args.out, "convention": conv.string(),
           "functions": [f.name for f in compiled.functions()], "derivation": derivation.to_json()}
    _emit(args, obj, text if not args.out else f"{args.input} -> {args.out} under {conv.string()}")
    return 0 if ok else 1


def cmd_link(args: argparse.Namespace, cfg: Config) -> int:
    modules = [load_module(name) for name in args.modules]
    linked = modules[0]
    for module in modules[1:]:
        linked = syn_link(linked, module)  # type: ignore
    text = linked.string()
    if args.out:
        Path(args.out).write_text(text + "\n")
    _emit(args, {"ok": True, "modules": args.modules, "output": args.out, "program": text},
          text if not args.out else f"linked {len(modules)} modules into {args.out}")
    return 0


def parse_value(text: str, se: SymbolTable, m: MemoryState) -> Tuple[MemoryState, Value]:
    """An argument on the command line: 11, &symbol, *11 (a fresh cell) or undef."""
    if text == "undef":
        return m, UNDEF
    if text.startswith("&"):
        if se.lookup(text[1:]) is None:
            raise ParseError(f"unknown symbol {text[1:]}")
        return m, Ptr(se.block_of(text[1:]), 0)
    if text.startswith("*"):
        m, value = parse_value(text[1:], se, m)
        return with_cell(m, value)
    try:
        return m, IntVal(int(text))
    except ValueError as ex:
        raise ParseError(f"cannot read argument {text!r}") from ex


def cmd_simulate(args: argparse.Namespace, cfg: Config) -> int:
    se = symbols_for(args.modules)
    lts = open_lts(args.modules, se)
    m = init_memory(se)
    values: List[Value] = []
    for text in args.arg:
        m, v = parse_value(text, se, m)
        values.append(v)
    q = c_query(se, args.call, values, m)
    env = WriterEnv(cfg.seed) if args.env == "writer" else SkipEnv()
    try:
        trace = run_trace(lts, asm_query(q, se) if lts.incoming == Interface.ASM else q, env, cfg.fuel)
    except (StuckError, FuelExhausted) as ex:
        if ex.trace is not None:
            for line in ex.trace.to_json_lines():
                print(json.dumps(line))
        print(f"error: {ex}", file=sys.stderr)
        return 1
    for line in trace.to_json_lines():
        print(json.dumps(line))
    return 0


def cmd_sim_check(args: argparse.Namespace, cfg: Config) -> int:
    if args.pass_name:
        if not args.input:
            print("error: --pass needs --in", file=sys.stderr)
            return 2
        program = load_minic(args.input)
        se = symbol_table([program])
        items = random_plan(se, [f.name for f in program.functions()], cfg.seed, cfg.iters)
        report = check_pass(program, args.pass_name, cfg.plan(items), se)
    elif args.src and args.tgt:
        report = check_refinement(args.src, args.tgt, parse_conv(args.conv), cfg)
    else:
        print("error: sim-check needs --pass or both --src and --tgt", file=sys.stderr)
        return 2
    lines = [report.summary()]
    lines.extend(f"  {i.label}: {i.outcome.value}" + (f" at clause {i.clause}: {i.message}" if i.clause else "")
                 for i in report.items)
    _emit(args, report.to_json(), "\n".join(lines))
    return 0 if report.ok else 1


def cmd_refine_derive(args: argparse.Namespace, cfg: Config) -> int:
    scripts = list(SCRIPTS.values()) if args.script == "all" else [SCRIPTS[args.script]]
    derivations = [replay(script) for script in scripts]
    lines: List[str] = []
    for d in derivations:
        lines.append(f"{d.script.name}: {d.script.start.string()}")
        for r in d.records:
            cited = "; ".join(f"{n} [{LAWS[n].citation}] ({LAWS[n].note})"
                              for n in r.laws) or "vertical composition"
            lines.append(f"  {r.index:2d}. {r.label}: {cited}")
            lines.append(f"      = {r.after}")
        lines.append(f"  {'ok' if d.ok else 'FAIL'}: expected {d.script.expected.string()}")
    ok = all(d.ok for d in derivations)
    _emit(args, {"ok": ok, "derivations": [d.to_json() for d in derivations]}, "\n".join(lines))
    return 0 if ok else 1


def cmd_run_example(args: argparse.Namespace, cfg: Config) -> int:
    reports = [run_scenario(name, cfg) for name in (args.names or list(SCENARIOS))]
    ok = all(r.ok for r in reports)
    _emit(args, {"ok": ok, "scenarios": [r.to_json() for r in reports]},
          "\n".join(r.summary() for r in reports))
    return 0 if ok else 1


def cmd_fmt(args: argparse.Namespace, cfg: Config) -> int:
    print(load_module(args.file).string())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print JSON reports")
    common.add_argument("--config", help="JSON file with run settings")
    common.add_argument("-v", "--verbose", action="count", default=0, help="log more (repeat for debug)")
    common.add_argument("-q", "--quiet", action="store_true", help="log errors only")
    common.add_argument("--seed", type=int)
    common.add_argument("--iters", type=int)
    common.add_argument("--fuel", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--plan-size", type=int)

    sizes = argparse.ArgumentParser(add_help=False)
    sizes.add_argument("--max-blocks", type=int)
    sizes.add_argument("--max-cells", type=int)
    sizes.add_argument("--max-mappings", type=int)
    sizes.add_argument("--max-ops", type=int)

    parser = argparse.ArgumentParser(prog="refine", description="Checks for compositional compiler correctness.")
    sub = parser.add_subparsers(dest="command", required=True)
    commands: Dict[str, Tuple[Handler, str, List[argparse.ArgumentParser]]] = {
        "check-injp": (cmd_check_injp, "sample the injp transitivity constructions", [common, sizes]),
        "check-laws": (cmd_check_laws, "sample the convention laws and replay the scripts", [common, sizes]),
        "compile": (cmd_compile, "compile a MiniC module to MiniAsm", [common]),
        "link": (cmd_link, "link modules syntactically", [common]),
        "simulate": (cmd_simulate, "run one query and print its trace", [common]),
        "sim-check": (cmd_sim_check, "check a simulation over a randomized plan", [common]),
        "refine-derive": (cmd_refine_derive, "replay a derivation script", [common]),
        "run-example": (cmd_run_example, "run the bundled end-to-end scenarios", [common]),
        "fmt": (cmd_fmt, "pretty-print a module", [common]),
    }
    parsers = {}
    for name, (handler, help_text, parents) in commands.items():
        p = sub.add_parser(name, help=help_text, parents=parents)
        p.set_defaults(handler=handler)
        parsers[name] = p

    parsers["check-laws"].add_argument("--law", action="append", choices=sorted(LAWS),
                                       help="check only this law (repeatable)")
    parsers["compile"].add_argument("--in", dest="input", required=True)
    parsers["compile"].add_argument("--out")
    parsers["compile"].add_argument("--emit-derivation")
    parsers["link"].add_argument("modules", nargs="+")
    parsers["link"].add_argument("--out")
    parsers["simulate"].add_argument("modules", nargs="+", help="module files or spec names, linked in order")
    parsers["simulate"].add_argument("--call", required=True, help="function to query")
    parsers["simulate"].add_argument("--arg", nargs="*", default=[], help="11, &symbol, *11 or undef")
    parsers["simulate"].add_argument("--env", choices=["skip", "writer"], default="skip")
    parsers["sim-check"].add_argument("--pass", dest="pass_name", choices=PASSES)
    parsers["sim-check"].add_argument("--in", dest="input")
    parsers["sim-check"].add_argument("--src", nargs="+")
    parsers["sim-check"].add_argument("--tgt", nargs="+")
    parsers["sim-check"].add_argument("--conv", default=PIPELINE_CONVENTION.string())
    parsers["refine-derive"].add_argument("--script", choices=sorted(SCRIPTS) + ["all"], default="all")
    parsers["run-example"].add_argument("names", nargs="*", help="scenarios (default: all)")
    parsers["fmt"].add_argument("file")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.WARNING
    if args.quiet:
        level = logging.ERROR
    elif args.verbose >= 2:
        level = logging.DEBUG
    elif args.verbose == 1:
        level = logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _settings(args: argparse.Namespace) -> Config:
    cfg = load_config(args.config)
    return cfg.override(seed=args.seed, iters=args.iters, fuel=args.fuel, samples=args.samples,
                        plan_size=args.plan_size,
                        max_blocks=getattr(args, "max_blocks", None),
                        max_cells=getattr(args, "max_cells", None),
                        max_mappings=getattr(args, "max_mappings", None),
                        max_ops=getattr(args, "max_ops", None))


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else 2
    _configure_logging(args)
    try:
        cfg = _settings(args)
        handler: Handler = args.handler
        return handler(args, cfg)
    except ToolkitError as ex:
        LOGGER.debug("%s failed", args.command, exc_info=True)
        print(f"error: {ex}", file=sys.stderr)
        return 2
    except OSError as ex:
        print(f"error: {ex}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
