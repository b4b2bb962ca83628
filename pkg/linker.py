"""Symbol tables and syntactic linking for MiniC and MiniAsm modules."""
import logging
from typing import Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import mast
from asm import AsmExtern, AsmFunction, AsmGlobal, AsmProgram
from errors import LinkError
from mem import IntVal
from sem import Signature, SymbolKind, SymbolTable

LOGGER = logging.getLogger("refine.linker")

Module = Union[mast.Program, AsmProgram]


def _definitions(module: Module) -> List[Tuple[str, SymbolKind, bool, Tuple[IntVal, ...], int,
                                               Optional[Signature]]]:
    out: List[Tuple[str, SymbolKind, bool, Tuple[IntVal, ...], int, Optional[Signature]]] = []
    for decl in module.declarations:
        if isinstance(decl, (mast.GlobalDecl, AsmGlobal)):
            size = decl.cells if isinstance(decl, mast.GlobalDecl) else decl.size
            # Uninitialised cells start at zero, as C globals do.
            init = tuple(IntVal(v) for v in decl.init) + (IntVal(0),) * (size - len(decl.init))
            out.append((decl.name, SymbolKind.VAR, decl.const, init, size, None))
        elif isinstance(decl, (mast.FunctionDecl, AsmFunction)):
            out.append((decl.name, SymbolKind.FUNC, False, (), 1, decl.sg))
    return out


def _externs(module: Module) -> List[Tuple[str, Signature]]:
    return [(e.name, e.sg) for e in module.externs()]


def symbol_table(modules: Sequence[Module],
                 extra: Sequence[Tuple[str, Signature]] = ()) -> SymbolTable:
    """One table for a link: definitions in module order, then the functions
    that are only declared (and any extra ones) at the end."""
    entries = []
    defined: Dict[str, Optional[Signature]] = {}
    for module in modules:
        for entry in _definitions(module):
            if entry[0] in defined:
                raise LinkError(f"{entry[0]} is defined twice")
            defined[entry[0]] = entry[5]
            entries.append(entry)
    declared: Dict[str, Signature] = {}
    for module in modules:
        for name, sg in _externs(module):
            _check_declaration(name, sg, defined, declared)
    for name, sg in extra:
        _check_declaration(name, sg, defined, declared)
    for name, sg in declared.items():
        entries.append((name, SymbolKind.FUNC, False, (), 1, sg))
    se = SymbolTable.build(entries)
    LOGGER.debug("symbol table with %d symbols", len(se))
    return se


def _check_declaration(name: str, sg: Signature, defined: Dict[str, Optional[Signature]],
                       declared: Dict[str, Signature]) -> None:
    if name in defined:
        if defined[name] != sg:
            raise LinkError(f"{name} is declared as {sg.string()} but defined differently")
        return
    previous = declared.get(name)
    if previous is not None and previous != sg:
        raise LinkError(f"conflicting declarations of {name}")
    declared[name] = sg


M = TypeVar("M", mast.Program, AsmProgram)


def syn_link(p1: M, p2: M) -> M:
    """Merges two modules of the same language into one.

    Declarations keep their order, first module first; externs the other
    module defines disappear, and the rest move to the end.
    """
    if type(p1) is not type(p2):
        raise LinkError("cannot link modules of different languages")
    symbol_table([p1, p2])  # raises on clashes
    defs = [d for p in (p1, p2) for d in p.declarations
            if not isinstance(d, (mast.ExternDecl, AsmExtern))]
    names = {d.name for d in defs}  # type: ignore
    externs = []
    seen = set()
    for p in (p1, p2):
        for e in p.externs():
            if e.name not in names and e.name not in seen:
                seen.add(e.name)
                externs.append(e)
    if isinstance(p1, mast.Program):
        return mast.Program(defs + externs)  # type: ignore
    return AsmProgram(defs + externs)  # type: ignore
