"""Memory injections and the public/private classification of positions."""
import logging
from enum import Enum, unique
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Set, Tuple

from errors import PreconditionError
from mem import MemoryState, Permission, PermKind, Position, Ptr, Undef, IntVal, Value
from report import CheckReport

LOGGER = logging.getLogger("refine.inject")

Image = Tuple[int, int]


class Meminj:
    """A finite partial map from source blocks to (target block, delta)."""

    def __init__(self, mapping: Optional[Mapping[int, Image]] = None) -> None:
        self._map: Dict[int, Image] = dict(mapping or {})
        self._preimages: Dict[int, List[Tuple[int, int]]] = {}
        for b1, (b2, delta) in sorted(self._map.items()):
            self._preimages.setdefault(b2, []).append((b1, delta))

    @staticmethod
    def identity(blocks: Iterable[int]) -> "Meminj":
        return Meminj({b: (b, 0) for b in blocks})

    @staticmethod
    def identity_on(m: MemoryState) -> "Meminj":
        return Meminj.identity(range(1, m.next_block))

    def __call__(self, b: int) -> Optional[Image]:
        return self._map.get(b)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Meminj):
            return NotImplemented
        return self._map == other._map

    def __hash__(self) -> int:
        return hash(frozenset(self._map.items()))

    def __len__(self) -> int:
        return len(self._map)

    def domain(self) -> List[int]:
        return sorted(self._map)

    def items(self) -> List[Tuple[int, Image]]:
        return sorted(self._map.items())

    def preimages(self, b2: int) -> List[Tuple[int, int]]:
        return self._preimages.get(b2, [])

    def subset(self, other: "Meminj") -> bool:
        return all(other(b) == image for b, image in self._map.items())

    def extend(self, b1: int, b2: int, delta: int) -> "Meminj":
        current = self._map.get(b1)
        if current is not None and current != (b2, delta):
            raise PreconditionError(f"block {b1} is already mapped to {current}")
        mapping = dict(self._map)
        mapping[b1] = (b2, delta)
        return Meminj(mapping)

    def restrict(self, keep: Callable[[int], bool]) -> "Meminj":
        return Meminj({b: image for b, image in self._map.items() if keep(b)})

    def union(self, other: "Meminj") -> "Meminj":
        mapping = dict(self._map)
        for b, image in other.items():
            if b in mapping and mapping[b] != image:
                raise PreconditionError(f"block {b} mapped inconsistently")
            mapping[b] = image
        return Meminj(mapping)

    def to_json(self) -> List[Dict[str, int]]:
        return [{"src": b1, "dst": b2, "delta": d} for b1, (b2, d) in self.items()]

    @staticmethod
    def from_json(entries: List[Dict[str, Any]]) -> "Meminj":
        return Meminj({int(e["src"]): (int(e["dst"]), int(e["delta"])) for e in entries})

    def string(self) -> str:
        return "{" + ", ".join(f"b{b1}->(b{b2},{d})" for b1, (b2, d) in self.items()) + "}"


@unique
class Side(Enum):
    SOURCE = "source"
    TARGET = "target"


@unique
class PositionClass(Enum):
    UNMAPPED = "Unmapped"
    MAPPED_PUBLIC = "MappedPublic"
    OUT_OF_REACH = "OutOfReach"
    IN_REACH = "InReach"


def value_inject_check(j: Meminj, v1: Value, v2: Value) -> bool:
    if isinstance(v1, Undef):
        return True
    if isinstance(v1, IntVal):
        return v1 == v2
    image = j(v1.block)
    if image is None:
        return False
    return v2 == Ptr(image[0], v1.offset + image[1])


def value_transport(j: Meminj, v1: Value) -> Optional[Value]:
    if isinstance(v1, Ptr):
        image = j(v1.block)
        if image is None:
            return None
        return Ptr(image[0], v1.offset + image[1])
    return v1


def compose_inj(j12: Meminj, j23: Meminj) -> Meminj:
    mapping: Dict[int, Image] = {}
    for b1, (b2, d12) in j12.items():
        image = j23(b2)
        if image is not None:
            mapping[b1] = (image[0], d12 + image[1])
    return Meminj(mapping)


def compose_all(injections: Iterable[Meminj]) -> Meminj:
    result: Optional[Meminj] = None
    for j in injections:
        result = j if result is None else compose_inj(result, j)
    return result if result is not None else Meminj()


def out_of_reach(j: Meminj, m1: MemoryState, b2: int, o2: int) -> bool:
    for b1, delta in j.preimages(b2):
        if m1.perm_at(b1, o2 - delta, PermKind.MAX, Permission.NONEMPTY):
            return False
    return True


def live_preimage(j: Meminj, m1: MemoryState, b2: int, o2: int) -> Optional[Position]:
    for b1, delta in j.preimages(b2):
        if m1.perm_at(b1, o2 - delta, PermKind.MAX, Permission.NONEMPTY):
            return (b1, o2 - delta)
    return None


def classify_position(j: Meminj, m_src: MemoryState, side: Side, b: int, o: int) -> PositionClass:
    if side == Side.SOURCE:
        return PositionClass.UNMAPPED if j(b) is None else PositionClass.MAPPED_PUBLIC
    if out_of_reach(j, m_src, b, o):
        return PositionClass.OUT_OF_REACH
    return PositionClass.IN_REACH


def mem_inj_check(j: Meminj, m1: MemoryState, m2: MemoryState) -> CheckReport:
    report = CheckReport("mem-inj")
    for b1 in j.domain():
        b2, delta = j(b1)  # type: ignore
        if not m1.valid_block(b1):
            report.fail("3", "invalid source block is mapped", [b1])
        if not m2.valid_block(b2):
            report.fail("4", "image block is not valid in the target", [b1, b2])

    claimed: Dict[Position, Position] = {}
    for b1 in j.domain():
        b2, delta = j(b1)  # type: ignore
        for o1 in m1.positions(b1):
            pair = m1.perm(b1, o1)
            if pair is None:
                continue
            o2 = o1 + delta
            target = m2.perm(b2, o2)
            if target is None or target[0] < pair[0] or target[1] < pair[1]:
                report.fail("1", "permission not preserved", [b1, o1, b2, o2])
            if pair[1] >= Permission.READABLE and \
                    not value_inject_check(j, m1.contents(b1, o1), m2.contents(b2, o2)):
                report.fail("2", "values not related", [b1, o1, b2, o2])
            other = claimed.get((b2, o2))
            if other is not None and other[0] != b1:
                report.fail("5", "distinct source blocks overlap", [other[0], other[1], b1, o1])
            claimed[(b2, o2)] = (b1, o1)

    for b1 in j.domain():
        b2, delta = j(b1)  # type: ignore
        for o2 in m2.positions(b2):
            target = m2.perm(b2, o2)
            if target is None:
                continue
            o1 = o2 - delta
            source = m1.perm(b1, o1)
            if source is None:
                continue
            if source[0] < target[0] or source[1] < target[1]:
                # Source is Max-Nonempty here, so it must hold the target's permission.
                report.fail("6", "target permission not reflected", [b1, o1, b2, o2])
    return report


def inj_sep_witness(j: Meminj, j2: Meminj, m1: MemoryState, m2: MemoryState) -> Optional[List[int]]:
    for b1, (b2, delta) in j2.items():
        if j(b1) == (b2, delta):
            continue
        if m1.valid_block(b1) or m2.valid_block(b2):
            return [b1, b2, delta]
    return None


def inj_sep_check(j: Meminj, j2: Meminj, m1: MemoryState, m2: MemoryState) -> bool:
    return inj_sep_witness(j, j2, m1, m2) is None


def reach_closure(j: Optional[Meminj], m: MemoryState, roots: Iterable[Position]) -> Set[int]:
    """Blocks reachable from the root positions by loading readable pointers.

    A root block is always included; a reached block contributes every one
    of its Cur-Readable cells. j is the injection the roots are public
    for, or None outside a world. Only the pointers stored in m are
    followed, so the result does not depend on j.
    """
    reached: Set[int] = set()
    frontier: List[Position] = []
    for b, o in roots:
        reached.add(b)
        frontier.append((b, o))
    while frontier:
        b, o = frontier.pop()
        if not m.perm_at(b, o, PermKind.CUR, Permission.READABLE):
            continue
        v = m.contents(b, o)
        if isinstance(v, Ptr) and v.block not in reached:
            reached.add(v.block)
            frontier.extend((v.block, o2) for o2 in m.positions(v.block))
    return reached


def block_roots(m: MemoryState, blocks: Iterable[int]) -> List[Position]:
    return [(b, o) for b in blocks for o in m.positions(b)]


def value_roots(m: MemoryState, values: Iterable[Value]) -> List[Position]:
    # A pointer value reaches its whole block.
    return block_roots(m, sorted({v.block for v in values if isinstance(v, Ptr)}))
