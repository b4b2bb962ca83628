"""Block-based memory: values, permissions and immutable memory states.

A memory is a set of blocks. Each block has an offset range [lo, hi), a
value per offset and a (max, cur) permission pair per offset. Every
operation returns a new MemoryState; a state is never mutated once built.
"""
import logging
from dataclasses import dataclass
from enum import Enum, IntEnum, unique
from typing import Any, Callable, Dict, Iterator, List, Optional, Tuple, Union

from errors import MemoryPermissionError, ParseError

LOGGER = logging.getLogger("refine.mem")

_WORD = 1 << 64


def wrap_int(n: int) -> int:
    n %= _WORD
    return n - _WORD if n >= _WORD // 2 else n


@dataclass(frozen=True)
class Undef:
    def string(self) -> str:
        return "undef"


@dataclass(frozen=True)
class IntVal:
    value: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", wrap_int(self.value))

    def string(self) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Ptr:
    block: int
    offset: int

    def string(self) -> str:
        return f"Ptr({self.block},{self.offset})"


Value = Union[Undef, IntVal, Ptr]
UNDEF = Undef()


def value_to_json(v: Value) -> Dict[str, Any]:
    if isinstance(v, IntVal):
        return {"t": "int", "v": v.value}
    if isinstance(v, Ptr):
        return {"t": "ptr", "b": v.block, "o": v.offset}
    return {"t": "undef"}


def value_from_json(obj: Dict[str, Any]) -> Value:
    tag = obj.get("t")
    if tag == "int":
        return IntVal(int(obj["v"]))
    if tag == "ptr":
        return Ptr(int(obj["b"]), int(obj["o"]))
    if tag == "undef":
        return UNDEF
    raise ParseError(f"unknown value tag {tag!r}")


@unique
class Permission(IntEnum):
    NONEMPTY = 1
    READABLE = 2
    WRITABLE = 3
    FREEABLE = 4


@unique
class PermKind(Enum):
    MAX = "Max"
    CUR = "Cur"


# (max, cur); a position without an entry has no permission at all.
PermPair = Tuple[Permission, Permission]
Position = Tuple[int, int]
PositionPredicate = Callable[[int, int], bool]


class Block:
    def __init__(self, lo: int, hi: int,
                 cells: Optional[Dict[int, Value]] = None,
                 perms: Optional[Dict[int, PermPair]] = None) -> None:
        self.lo = lo
        self.hi = hi
        self.cells: Dict[int, Value] = cells if cells is not None else {}
        self.perms: Dict[int, PermPair] = perms if perms is not None else {}

    def copy(self) -> "Block":
        return Block(self.lo, self.hi, dict(self.cells), dict(self.perms))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Block):
            return NotImplemented
        return (self.lo, self.hi, self.cells, self.perms) == \
            (other.lo, other.hi, other.cells, other.perms)


class MemoryState:
    def __init__(self, next_block: int = 1, blocks: Optional[Dict[int, Block]] = None) -> None:
        self.next_block = next_block
        self._blocks: Dict[int, Block] = blocks if blocks is not None else {}

    @staticmethod
    def empty() -> "MemoryState":
        return MemoryState()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MemoryState):
            return NotImplemented
        return self.next_block == other.next_block and self._blocks == other._blocks

    __hash__ = None  # type: ignore

    def _with_block(self, b: int, block: Block) -> "MemoryState":
        blocks = dict(self._blocks)
        blocks[b] = block
        return MemoryState(self.next_block, blocks)

    def valid_block(self, b: int) -> bool:
        return 1 <= b < self.next_block

    def block_ids(self) -> List[int]:
        return sorted(self._blocks)

    def bounds(self, b: int) -> Tuple[int, int]:
        block = self._blocks.get(b)
        return (block.lo, block.hi) if block is not None else (0, 0)

    def positions(self, b: int) -> List[int]:
        # Offsets of b that carry a permission or a value.
        block = self._blocks.get(b)
        if block is None:
            return []
        return sorted(set(block.perms) | set(block.cells))

    def all_positions(self) -> Iterator[Position]:
        for b in self.block_ids():
            for o in self.positions(b):
                yield (b, o)

    def perm(self, b: int, o: int) -> Optional[PermPair]:
        block = self._blocks.get(b)
        return block.perms.get(o) if block is not None else None

    def perm_at(self, b: int, o: int, k: PermKind, p: Permission) -> bool:
        pair = self.perm(b, o)
        if pair is None:
            return False
        held = pair[0] if k == PermKind.MAX else pair[1]
        return held >= p

    def contents(self, b: int, o: int) -> Value:
        # m[b,o] without a permission gate.
        block = self._blocks.get(b)
        if block is None:
            return UNDEF
        return block.cells.get(o, UNDEF)

    def alloc(self, lo: int, hi: int) -> Tuple["MemoryState", int]:
        b = self.next_block
        perms = {o: (Permission.FREEABLE, Permission.FREEABLE) for o in range(lo, hi)}
        blocks = dict(self._blocks)
        blocks[b] = Block(lo, hi, {}, perms)
        LOGGER.debug("alloc block %d [%d,%d)", b, lo, hi)
        return MemoryState(b + 1, blocks), b

    def free(self, b: int, lo: int, hi: int) -> "MemoryState":
        for o in range(lo, hi):
            if not self.perm_at(b, o, PermKind.CUR, Permission.FREEABLE):
                raise MemoryPermissionError("free", b, o, "Freeable")
        if lo >= hi:
            return self
        block = self._blocks[b].copy()
        for o in range(lo, hi):
            block.perms.pop(o, None)
            block.cells.pop(o, None)
        LOGGER.debug("free block %d [%d,%d)", b, lo, hi)
        return self._with_block(b, block)

    def load(self, b: int, o: int) -> Value:
        if not self.perm_at(b, o, PermKind.CUR, Permission.READABLE):
            raise MemoryPermissionError("load", b, o, "Readable")
        return self.contents(b, o)

    def store(self, b: int, o: int, v: Value) -> "MemoryState":
        if not self.perm_at(b, o, PermKind.CUR, Permission.WRITABLE):
            raise MemoryPermissionError("store", b, o, "Writable")
        block = self._blocks[b].copy()
        if isinstance(v, Undef):
            block.cells.pop(o, None)
        else:
            block.cells[o] = v
        return self._with_block(b, block)

    def drop_perm(self, b: int, lo: int, hi: int, p: Permission) -> "MemoryState":
        for o in range(lo, hi):
            if not self.perm_at(b, o, PermKind.CUR, Permission.FREEABLE):
                raise MemoryPermissionError("drop_perm", b, o, "Freeable")
        if lo >= hi:
            return self
        block = self._blocks[b].copy()
        for o in range(lo, hi):
            block.perms[o] = (p, p)
        return self._with_block(b, block)

    def set_perm(self, b: int, o: int, pair: Optional[PermPair]) -> "MemoryState":
        """Test-only: overwrite the permission pair at one position.

        None removes every permission (and the value) at the position. The
        block must already exist and cur may not exceed max.
        """
        if b not in self._blocks:
            raise MemoryPermissionError("set_perm", b, o, "an allocated block")
        block = self._blocks[b].copy()
        if pair is None:
            block.perms.pop(o, None)
            block.cells.pop(o, None)
        else:
            if pair[1] > pair[0]:
                raise ValueError(f"cur {pair[1].name} exceeds max {pair[0].name}")
            block.perms[o] = pair
            block.lo = min(block.lo, o)
            block.hi = max(block.hi, o + 1)
        return self._with_block(b, block)

    def set_contents(self, b: int, o: int, v: Value) -> "MemoryState":
        """Test-only: write a value regardless of the permission at (b,o)."""
        if b not in self._blocks or self.perm(b, o) is None:
            raise MemoryPermissionError("set_contents", b, o, "some")
        block = self._blocks[b].copy()
        if isinstance(v, Undef):
            block.cells.pop(o, None)
        else:
            block.cells[o] = v
        return self._with_block(b, block)

    def to_json(self) -> Dict[str, Any]:
        blocks = []
        for b in self.block_ids():
            block = self._blocks[b]
            blocks.append({
                "id": b, "lo": block.lo, "hi": block.hi,
                "cells": [{"off": o, "val": value_to_json(v)} for o, v in sorted(block.cells.items())],
                "perms": [{"off": o, "max": p[0].name.capitalize(), "cur": p[1].name.capitalize()}
                          for o, p in sorted(block.perms.items())],
            })
        return {"next_block": self.next_block, "blocks": blocks}

    @staticmethod
    def from_json(obj: Dict[str, Any]) -> "MemoryState":
        blocks: Dict[int, Block] = {}
        for entry in obj.get("blocks", []):
            cells = {int(c["off"]): value_from_json(c["val"]) for c in entry.get("cells", [])}
            perms = {int(p["off"]): (Permission[p["max"].upper()], Permission[p["cur"].upper()])
                     for p in entry.get("perms", [])}
            blocks[int(entry["id"])] = Block(int(entry["lo"]), int(entry["hi"]), cells, perms)
        return MemoryState(int(obj["next_block"]), blocks)

    def string(self) -> str:
        lines = [f"next_block {self.next_block}"]
        for b in self.block_ids():
            block = self._blocks[b]
            cells = []
            for o in self.positions(b):
                pair = block.perms.get(o)
                perm = f"{pair[0].name[0]}{pair[1].name[0]}" if pair else "--"
                cells.append(f"{o}:{self.contents(b, o).string()}/{perm}")
            lines.append(f"  b{b} [{block.lo},{block.hi}) " + " ".join(cells))
        return "\n".join(lines)


def unchanged_on_witness(pred: PositionPredicate, m: MemoryState,
                         m2: MemoryState) -> Optional[Position]:
    for b in m.block_ids() + [b for b in m2.block_ids() if b not in m.block_ids()]:
        if not m.valid_block(b):
            continue
        for o in sorted(set(m.positions(b)) | set(m2.positions(b))):
            if not pred(b, o):
                continue
            if m.perm(b, o) != m2.perm(b, o) or m.contents(b, o) != m2.contents(b, o):
                return (b, o)
    return None


def unchanged_on_check(pred: PositionPredicate, m: MemoryState, m2: MemoryState) -> bool:
    return unchanged_on_witness(pred, m, m2) is None


def mem_acc_violations(m: MemoryState, m2: MemoryState) -> List[Tuple[str, str, Any]]:
    out: List[Tuple[str, str, Any]] = []
    if m2.next_block < m.next_block:
        out.append(("valid", "a block valid before is no longer valid", m.next_block - 1))
    for b in m.block_ids():
        for o in sorted(set(m.positions(b)) | set(m2.positions(b))):
            after = m2.perm(b, o)
            before = m.perm(b, o)
            if after is not None and (before is None or after[0] > before[0]):
                out.append(("max-perm-dec", "max permission increased", [b, o]))
            if before is not None and before[0] < Permission.WRITABLE and \
                    after is not None and after[1] >= Permission.READABLE:
                if before[1] < Permission.READABLE or m.contents(b, o) != m2.contents(b, o):
                    out.append(("ro-acc", "read-only cell changed", [b, o]))
    return out


def mem_acc_check(m: MemoryState, m2: MemoryState) -> bool:
    return not mem_acc_violations(m, m2)
