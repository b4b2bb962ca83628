"""MiniAsm: a small x86-flavoured assembly with a CompCert-style frame.

A program is a list of directives:

    ; comment
    .global s 2 0 0          name, cells, initial values
    .const key 42            read-only cells
    .extern f(int) -> int
    .func g(int) -> int
      Pallocframe 24 16 0
    l0:
      Pmov s[1] RAX
      Pret
    .end

Operands are registers (RAX), memory at a register plus offset (8(RSP)),
global cells (s or s[1]), immediates (42) and labels.
"""
import re
from dataclasses import dataclass, field
from enum import Enum, unique
from typing import Dict, List, Optional, Sequence, Set, Tuple, Union

from errors import CompileError, ParseError
from sem import Reg, Signature, parse_signature


@unique
class Op(Enum):
    PMOV = "Pmov"                # src dst
    PCONST = "Pconst"            # imm reg
    PXOR = "Pxor"                # reg reg: dst ^= src
    PXORI = "Pxori"              # imm reg
    PADD = "Padd"                # reg reg: dst += src
    PSUB = "Psub"                # reg reg: dst -= src
    PLEA = "Plea"                # addr reg
    PTEST = "Ptest"              # reg reg: flags from a & b
    PCMP = "Pcmp"                # reg reg: flags from dst against src
    PJE = "Pje"
    PJNE = "Pjne"
    PJL = "Pjl"
    PJMP = "Pjmp"
    PCALL = "Pcall"              # reg or function symbol
    PRET = "Pret"
    PALLOCFRAME = "Pallocframe"  # size, ra offset, link offset
    PFREEFRAME = "Pfreeframe"


JUMPS = (Op.PJE, Op.PJNE, Op.PJL, Op.PJMP)

# Registers an instruction may name. PC and RA only change through control
# flow instructions.
OPERAND_REGS = {r.value: r for r in (Reg.RAX, Reg.RBX, Reg.RDI, Reg.RSI, Reg.RSP)}


@dataclass(frozen=True)
class RegOp:
    reg: Reg

    def string(self) -> str:
        return self.reg.value


@dataclass(frozen=True)
class MemOp:
    base: Reg
    ofs: int

    def string(self) -> str:
        return f"{self.ofs}({self.base.value})"


@dataclass(frozen=True)
class SymOp:
    name: str
    index: int = 0

    def string(self) -> str:
        return self.name if self.index == 0 else f"{self.name}[{self.index}]"


@dataclass(frozen=True)
class ImmOp:
    value: int

    def string(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class LabelOp:
    name: str

    def string(self) -> str:
        return self.name


Operand = Union[RegOp, MemOp, SymOp, ImmOp, LabelOp]


@dataclass(frozen=True)
class Instr:
    op: Op
    args: Tuple[Operand, ...] = ()

    def string(self) -> str:
        return " ".join([self.op.value] + [a.string() for a in self.args])


def instr(op: Op, *args: Operand) -> Instr:
    return Instr(op, tuple(args))


@dataclass
class AsmGlobal:
    name: str
    size: int = 1
    init: List[int] = field(default_factory=list)
    const: bool = False

    def string(self) -> str:
        if self.const:
            return " ".join([".const", self.name] + [str(v) for v in self.init])
        return " ".join([".global", self.name, str(self.size)] + [str(v) for v in self.init])


@dataclass
class AsmExtern:
    name: str
    sg: Signature

    def string(self) -> str:
        return f".extern {self.name}{self.sg.string()}"


@dataclass
class AsmFunction:
    name: str
    sg: Signature
    code: List[Instr] = field(default_factory=list)
    # Label name to the index of the instruction it precedes.
    labels: Dict[str, int] = field(default_factory=dict)

    def label_at(self, index: int) -> List[str]:
        return [name for name, at in self.labels.items() if at == index]

    def string(self) -> str:
        out = [f".func {self.name}{self.sg.string()}"]
        for k, ins in enumerate(self.code):
            out.extend(f"{name}:" for name in self.label_at(k))
            out.append("  " + ins.string())
        out.append(".end")
        return "\n".join(out)


AsmDecl = Union[AsmGlobal, AsmExtern, AsmFunction]


@dataclass
class AsmProgram:
    declarations: List[AsmDecl] = field(default_factory=list)

    def globals(self) -> List[AsmGlobal]:
        return [d for d in self.declarations if isinstance(d, AsmGlobal)]

    def externs(self) -> List[AsmExtern]:
        return [d for d in self.declarations if isinstance(d, AsmExtern)]

    def functions(self) -> List[AsmFunction]:
        return [d for d in self.declarations if isinstance(d, AsmFunction)]

    def function(self, name: str) -> Optional[AsmFunction]:
        for f in self.functions():
            if f.name == name:
                return f
        return None

    def global_(self, name: str) -> Optional[AsmGlobal]:
        for g in self.globals():
            if g.name == name:
                return g
        return None

    def string(self) -> str:
        return "\n".join(d.string() for d in self.declarations) + ("\n" if self.declarations else "")


_MEM = re.compile(r"^(-?\d+)\((\w+)\)$")
_SYM = re.compile(r"^([A-Za-z_]\w*)(?:\[(\d+)\])?$")
_IMM = re.compile(r"^-?\d+$")
_HEADER = re.compile(r"^([A-Za-z_]\w*)\s*(\(.*\)\s*->\s*\w+)$")
_LABEL = re.compile(r"^([A-Za-z_]\w*):$")

# Allowed operand kinds per instruction.
_SHAPES: Dict[Op, Tuple[Tuple[type, ...], ...]] = {
    Op.PMOV: ((RegOp, MemOp, SymOp), (RegOp, MemOp, SymOp)),
    Op.PCONST: ((ImmOp,), (RegOp,)),
    Op.PXOR: ((RegOp,), (RegOp,)),
    Op.PXORI: ((ImmOp,), (RegOp,)),
    Op.PADD: ((RegOp,), (RegOp,)),
    Op.PSUB: ((RegOp,), (RegOp,)),
    Op.PLEA: ((MemOp, SymOp), (RegOp,)),
    Op.PTEST: ((RegOp,), (RegOp,)),
    Op.PCMP: ((RegOp,), (RegOp,)),
    Op.PJE: ((LabelOp,),),
    Op.PJNE: ((LabelOp,),),
    Op.PJL: ((LabelOp,),),
    Op.PJMP: ((LabelOp,),),
    Op.PCALL: ((RegOp, SymOp),),
    Op.PRET: (),
    Op.PALLOCFRAME: ((ImmOp,), (ImmOp,), (ImmOp,)),
    Op.PFREEFRAME: ((ImmOp,), (ImmOp,), (ImmOp,)),
}

_OPS = {op.value: op for op in Op}


def parse_operand(text: str, label: bool = False) -> Optional[Operand]:
    if text in OPERAND_REGS:
        return RegOp(OPERAND_REGS[text])
    match = _MEM.match(text)
    if match is not None:
        reg = OPERAND_REGS.get(match.group(2))
        return MemOp(reg, int(match.group(1))) if reg is not None else None
    if _IMM.match(text):
        return ImmOp(int(text))
    match = _SYM.match(text)
    if match is not None:
        if label:
            return LabelOp(text) if match.group(2) is None else None
        return SymOp(match.group(1), int(match.group(2) or 0))
    return None


class AsmParser:
    """Line-oriented parser; collects errors like the MiniC parser does."""

    def __init__(self, source: str) -> None:
        self._lines = source.splitlines()
        self.errors: List[str] = []
        self.positions: List[Tuple[int, int]] = []
        self._current: Optional[AsmFunction] = None

    def _error(self, message: str, line: int) -> None:
        self.errors.append(message)
        self.positions.append((line, 1))

    def parse_program(self) -> AsmProgram:
        program = AsmProgram()
        for number, raw in enumerate(self._lines, start=1):
            text = raw.split(";", 1)[0].strip()
            if not text:
                continue
            if text.startswith("."):
                self._parse_directive(text, number, program)
            elif self._current is None:
                self._error(f"instruction outside of a function: {text}", number)
            else:
                self._parse_line(text, number)
        if self._current is not None:
            self._error(f"function {self._current.name} is missing .end", len(self._lines))
        return program

    def _parse_directive(self, text: str, line: int, program: AsmProgram) -> None:
        head, _, rest = text.partition(" ")
        rest = rest.strip()
        if head == ".end":
            if self._current is None:
                self._error(".end outside of a function", line)
            else:
                program.declarations.append(self._current)
                self._current = None
            return
        if self._current is not None:
            self._error(f"{head} inside function {self._current.name}", line)
            return
        if head in (".func", ".extern"):
            header = self._parse_header(rest, line)
            if header is None:
                return
            name, sg = header
            if head == ".func":
                self._current = AsmFunction(name, sg)
            else:
                program.declarations.append(AsmExtern(name, sg))
            return
        if head in (".global", ".const"):
            words = rest.split()
            try:
                values = [int(w) for w in words[1:]]
            except ValueError:
                self._error(f"malformed {head} directive: {text}", line)
                return
            if not words:
                self._error(f"{head} needs a name", line)
                return
            if head == ".const":
                if not values:
                    self._error(f"constant {words[0]} needs a value", line)
                    return
                program.declarations.append(AsmGlobal(words[0], len(values), values, True))
                return
            if not values or values[0] <= 0 or len(values) - 1 > values[0]:
                self._error(f"malformed .global directive: {text}", line)
                return
            program.declarations.append(AsmGlobal(words[0], values[0], values[1:], False))
            return
        self._error(f"unknown directive {head}", line)

    def _parse_header(self, text: str, line: int) -> Optional[Tuple[str, Signature]]:
        match = _HEADER.match(text)
        if match is None:
            self._error(f"malformed function header: {text}", line)
            return None
        try:
            return match.group(1), parse_signature(match.group(2))
        except ParseError as ex:
            self._error(str(ex), line)
            return None

    def _parse_line(self, text: str, line: int) -> None:
        assert self._current is not None
        fn = self._current
        match = _LABEL.match(text)
        if match is not None:
            name = match.group(1)
            if name in fn.labels:
                self._error(f"label {name} is defined twice in {fn.name}", line)
            fn.labels[name] = len(fn.code)
            return
        words = text.replace(",", " ").split()
        op = _OPS.get(words[0])
        if op is None:
            self._error(f"unknown instruction {words[0]}", line)
            return
        shape = _SHAPES[op]
        if len(words) - 1 != len(shape):
            self._error(f"{op.value} takes {len(shape)} operands", line)
            return
        args: List[Operand] = []
        for word, kinds in zip(words[1:], shape):
            operand = parse_operand(word, label=op in JUMPS)
            if operand is None or not isinstance(operand, kinds):
                self._error(f"bad operand {word} for {op.value}", line)
                return
            args.append(operand)
        if op == Op.PMOV and not isinstance(args[0], RegOp) and not isinstance(args[1], RegOp):
            self._error("Pmov needs a register on one side", line)
            return
        fn.code.append(Instr(op, tuple(args)))


def check_function(fn: AsmFunction) -> List[str]:
    """Static well-formedness: labels resolve and control never falls off."""
    problems: List[str] = []
    if not fn.code:
        return [f"{fn.name} has no instructions"]
    if fn.code[-1].op not in (Op.PRET, Op.PJMP):
        problems.append(f"{fn.name} must end with Pret or Pjmp")
    for name, at in fn.labels.items():
        if at >= len(fn.code):
            problems.append(f"label {name} in {fn.name} points past the end")
    for ins in fn.code:
        for a in ins.args:
            if isinstance(a, LabelOp) and a.name not in fn.labels:
                problems.append(f"{fn.name} jumps to unknown label {a.name}")
    return problems


def check_program(program: AsmProgram) -> List[str]:
    problems: List[str] = []
    known = {g.name for g in program.globals()} | {f.name for f in program.functions()} | \
            {e.name for e in program.externs()}
    seen: Set[str] = set()
    for decl in program.declarations:
        if isinstance(decl, AsmExtern):
            continue
        if decl.name in seen:
            problems.append(f"{decl.name} is defined twice")
        seen.add(decl.name)
    for fn in program.functions():
        problems.extend(check_function(fn))
        for ins in fn.code:
            for a in ins.args:
                if isinstance(a, SymOp) and a.name not in known:
                    problems.append(f"{fn.name} refers to undeclared {a.name}")
    return problems


def parse_miniasm(source: str) -> AsmProgram:
    parser = AsmParser(source)
    program = parser.parse_program()
    if parser.errors:
        line, column = parser.positions[0]
        raise ParseError(parser.errors[0], line, column)
    problems = check_program(program)
    if problems:
        raise ParseError(problems[0])
    return program


def assemble(name: str, sg: Signature, lines: Sequence[Union[Instr, str]]) -> AsmFunction:
    """Builds a function from instructions interleaved with label names."""
    fn = AsmFunction(name, sg)
    for item in lines:
        if isinstance(item, str):
            fn.labels[item] = len(fn.code)
        else:
            fn.code.append(item)
    problems = check_function(fn)
    if problems:
        raise CompileError(problems[0])
    return fn
