"""Loading MiniC (.mc) and MiniAsm (.ma) modules from disk."""
from pathlib import Path
from typing import Union

import mast
from asm import AsmProgram, parse_miniasm
from errors import ParseError
from mparser import parse_minic

PROGRAMS_DIR = Path(__file__).resolve().parent / "programs"


def program_path(name: str) -> Path:
    # Bare names refer to the bundled programs.
    path = Path(name)
    if not path.exists() and not path.is_absolute():
        path = PROGRAMS_DIR / name
    return path


def load_module(name: str) -> Union[mast.Program, AsmProgram]:
    path = program_path(name)
    source = path.read_text()
    if path.suffix == ".mc":
        return parse_minic(source)
    if path.suffix == ".ma":
        return parse_miniasm(source)
    raise ParseError(f"{path.name}: expected a .mc or .ma file")


def load_minic(name: str) -> mast.Program:
    module = load_module(name)
    if not isinstance(module, mast.Program):
        raise ParseError(f"{name} is not a MiniC module")
    return module


def load_miniasm(name: str) -> AsmProgram:
    module = load_module(name)
    if not isinstance(module, AsmProgram):
        raise ParseError(f"{name} is not a MiniAsm module")
    return module
