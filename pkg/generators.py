"""Seeded generators for memories, injection chains and protected evolutions.

A chain is a sequence of memories m0 .. mn linked by injections j0 .. jn-1,
one KMR tag per hop. Chains are tight: every mapped position carries exactly
the permission of its source, and every readable mapped cell holds the
transport of its source value. Evolutions apply the same operations in
lockstep along the chain so that every hop stays accessible by construction;
each result is still re-checked with the accessibility oracles.
"""
import logging
import random
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from inject import Meminj, compose_all, value_transport
from kmr import InjpWorld, KmrTag, acc_check, rel_check
from mem import IntVal, MemoryState, Permission, PermKind, PermPair, Ptr, UNDEF, Value

LOGGER = logging.getLogger("refine.generators")

_MAX_RETRIES = 20


@dataclass
class GenConfig:
    max_blocks: int = 4
    max_cells: int = 8
    max_mappings: int = 3
    max_ops: int = 6


def seeded(seed: int) -> random.Random:
    return random.Random(seed)


@dataclass
class Chain:
    memories: List[MemoryState]
    injections: List[Meminj]
    kinds: List[KmrTag] = field(default_factory=list)

    @property
    def hops(self) -> int:
        return len(self.injections)

    def world(self, i: int) -> InjpWorld:
        return InjpWorld(self.injections[i], self.memories[i], self.memories[i + 1])

    def composite(self) -> Meminj:
        return compose_all(self.injections)

    def composite_world(self) -> InjpWorld:
        return InjpWorld(self.composite(), self.memories[0], self.memories[-1])

    def depth(self, i: int, b: int) -> int:
        # Number of consecutive hops from memory i that map block b.
        d = 0
        while i + d < self.hops:
            image = self.injections[i + d](b)
            if image is None:
                break
            b = image[0]
            d += 1
        return d

    def fully_mapped(self) -> List[int]:
        return [b for b in self.memories[0].block_ids() if self.depth(0, b) == self.hops]

    def image(self, upto: int, b: int, o: int) -> Tuple[int, int]:
        for j in self.injections[:upto]:
            b2, d = j(b)  # type: ignore
            b, o = b2, o + d
        return b, o


def random_perm(rng: random.Random) -> Optional[PermPair]:
    if rng.random() < 0.1:
        return None
    top = rng.choice([Permission.NONEMPTY, Permission.READABLE, Permission.WRITABLE,
                      Permission.WRITABLE, Permission.FREEABLE, Permission.FREEABLE])
    cur = rng.choice([p for p in Permission if p <= top] + [top])
    return (top, cur)


def random_value(rng: random.Random, targets: Sequence[int], cells: int) -> Value:
    r = rng.random()
    if r < 0.15:
        return UNDEF
    if r < 0.65 or not targets:
        return IntVal(rng.randint(-5, 50))
    return Ptr(rng.choice(list(targets)), rng.randrange(max(cells, 1)))


def _fill(rng: random.Random, m: MemoryState, b: int, offsets: Sequence[int],
          targets: Sequence[int], cells: int) -> MemoryState:
    for o in offsets:
        pair = random_perm(rng)
        m = m.set_perm(b, o, pair)
        if pair is not None:
            m = m.set_contents(b, o, random_value(rng, targets, cells))
    return m


def random_memory(rng: random.Random, cfg: GenConfig,
                  base: Optional[MemoryState] = None) -> MemoryState:
    m = base if base is not None else MemoryState.empty()
    first = m.next_block
    for _ in range(rng.randint(1, cfg.max_blocks)):
        m, _b = m.alloc(0, rng.randint(1, cfg.max_cells))
    targets = list(range(1, m.next_block))
    for b in range(first, m.next_block):
        m = _fill(rng, m, b, list(range(*m.bounds(b))), targets, cfg.max_cells)
    return m


@dataclass
class _HopPlan:
    kind: KmrTag
    mapping: Dict[int, Tuple[int, int]]
    # target blocks in allocation order: (lo, hi, source block or None)
    layout: List[Tuple[int, int, Optional[int]]]


def _plan_hop(rng: random.Random, cfg: GenConfig, kind: KmrTag, shapes: Dict[int, Tuple[int, int]],
              globals_: List[int], first: int) -> Tuple[_HopPlan, Dict[int, Tuple[int, int]]]:
    local = [b for b in sorted(shapes) if b not in globals_]
    if kind in (KmrTag.EXT, KmrTag.ID):
        layout = [(shapes[b][0], shapes[b][1], b) for b in local]
        mapping = {b: (b, 0) for b in sorted(shapes)}
        return _HopPlan(kind, mapping, layout), dict(shapes)

    mapped = rng.sample(local, rng.randint(0, min(cfg.max_mappings, len(local))))
    entries: List[Tuple[int, int, Optional[int]]] = []
    pads: Dict[int, int] = {}
    for b in mapped:
        lo, hi = shapes[b]
        pad_lo, pad_hi = rng.randint(0, 2), rng.randint(0, 2)
        pads[b] = pad_lo
        entries.append((lo, hi + pad_lo + pad_hi, b))
    for _ in range(rng.randint(0, 1)):
        entries.append((0, rng.randint(1, cfg.max_cells), None))
    rng.shuffle(entries)

    mapping = {b: (b, 0) for b in globals_}
    target_shapes = {b: shapes[b] for b in globals_}
    for index, (lo, hi, source) in enumerate(entries):
        b2 = first + index
        target_shapes[b2] = (lo, hi)
        if source is not None:
            mapping[source] = (b2, pads[source])
    return _HopPlan(kind, mapping, entries), target_shapes


def random_chain(rng: random.Random, cfg: GenConfig, kinds: Sequence[KmrTag],
                 base: Optional[MemoryState] = None) -> Chain:
    """A tight chain of len(kinds) hops.

    Blocks of `base` (the global blocks) are shared by every memory and
    mapped by the identity in every hop.
    """
    base = base if base is not None else MemoryState.empty()
    globals_ = base.block_ids()

    # Shapes first, so pointer targets can respect how far each block is mapped.
    shapes: List[Dict[int, Tuple[int, int]]] = [{b: base.bounds(b) for b in globals_}]
    next_id = base.next_block
    for _ in range(rng.randint(1, cfg.max_blocks)):
        shapes[0][next_id] = (0, rng.randint(1, cfg.max_cells))
        next_id += 1
    plans: List[_HopPlan] = []
    for kind in kinds:
        plan, target = _plan_hop(rng, cfg, kind, shapes[-1], globals_, base.next_block)
        plans.append(plan)
        shapes.append(target)

    injections = [Meminj(plan.mapping) for plan in plans]
    chain = Chain([], injections, list(kinds))

    def targets(i: int, b: int) -> List[int]:
        need = chain.depth(i, b)
        return [t for t in sorted(shapes[i]) if chain.depth(i, t) >= need]

    m = base
    for b in sorted(shapes[0]):
        if b in globals_:
            continue
        m, _b = m.alloc(*shapes[0][b])
        m = _fill(rng, m, b, list(range(*shapes[0][b])), targets(0, b), cfg.max_cells)
    memories = [m]

    for i, plan in enumerate(plans):
        src = memories[-1]
        if plan.kind == KmrTag.ID:
            memories.append(src)
            continue
        j = injections[i]
        tgt = base
        for lo, hi, source in plan.layout:
            tgt, b2 = tgt.alloc(lo, hi)
            delta = j(source)[1] if source is not None else 0  # type: ignore
            for o2 in range(lo, hi):
                pair = src.perm(source, o2 - delta) if source is not None else None
                if pair is None:
                    if plan.kind == KmrTag.EXT and source is not None and rng.random() < 0.7:
                        tgt = tgt.set_perm(b2, o2, None)
                        continue
                    tgt = _fill(rng, tgt, b2, [o2], targets(i + 1, b2), cfg.max_cells)
                    continue
                tgt = tgt.set_perm(b2, o2, pair)
                if pair[1] >= Permission.READABLE:
                    v = value_transport(j, src.contents(source, o2 - delta))  # type: ignore
                    tgt = tgt.set_contents(b2, o2, v if v is not None else UNDEF)
                else:
                    tgt = tgt.set_contents(b2, o2, IntVal(rng.randint(-5, 50)))
        memories.append(tgt)
    chain.memories = memories
    return chain


def _lockstep_store(chain: Chain, mems: List[MemoryState], b0: int, o0: int, v: Value) -> None:
    for i in range(len(mems)):
        b, o = chain.image(i, b0, o0)
        vi = value_transport(compose_all(chain.injections[:i]), v) if i > 0 else v
        mems[i] = mems[i].store(b, o, vi if vi is not None else UNDEF)


def _lockstep_perm(chain: Chain, mems: List[MemoryState], b0: int, o0: int,
                   pair: Optional[PermPair]) -> None:
    for i in range(len(mems)):
        b, o = chain.image(i, b0, o0)
        if pair is None:
            mems[i] = mems[i].free(b, o, o + 1)
        else:
            mems[i] = mems[i].set_perm(b, o, pair)


def _evolve_once(rng: random.Random, cfg: GenConfig, chain: Chain,
                 unprotected: bool) -> Chain:
    mems = list(chain.memories)
    work = Chain(mems, list(chain.injections), list(chain.kinds))
    n = len(mems)
    private_src = chain.kinds[0] in (KmrTag.INJP, KmrTag.INJ)
    private_tgt = chain.kinds[-1] in (KmrTag.INJP, KmrTag.INJ)
    if any(k in (KmrTag.EXT, KmrTag.ID) for k in chain.kinds):
        private_src = private_tgt = False
    old_next = [m.next_block for m in chain.memories]

    for _ in range(rng.randint(0, cfg.max_ops)):
        public = work.fully_mapped()
        op = rng.choice(["store", "store", "lower", "alloc", "private-src", "private-tgt", "edit"])
        if op == "store" and public:
            b0 = rng.choice(public)
            offsets = [o for o in mems[0].positions(b0)
                       if mems[0].perm_at(b0, o, PermKind.CUR, Permission.WRITABLE)]
            if offsets:
                _lockstep_store(work, mems, b0, rng.choice(offsets),
                                random_value(rng, public, cfg.max_cells))
        elif op == "lower" and public:
            b0 = rng.choice(public)
            offsets = [o for o in mems[0].positions(b0) if mems[0].perm(b0, o) is not None]
            if offsets:
                o0 = rng.choice(offsets)
                top, cur = mems[0].perm(b0, o0)  # type: ignore
                if cur == Permission.FREEABLE and rng.random() < 0.3:
                    _lockstep_perm(work, mems, b0, o0, None)
                else:
                    new_top = rng.choice([p for p in Permission if p <= top])
                    new_cur = rng.choice([p for p in Permission if p <= min(cur, new_top)])
                    _lockstep_perm(work, mems, b0, o0, (new_top, new_cur))
        elif op == "alloc":
            size = rng.randint(1, cfg.max_cells)
            blocks = []
            for i in range(n):
                mems[i], b = mems[i].alloc(0, size)
                blocks.append(b)
            for i in range(n - 1):
                work.injections[i] = work.injections[i].extend(blocks[i], blocks[i + 1], 0)
            public = work.fully_mapped()
            for o in range(size):
                pair = random_perm(rng)
                v = random_value(rng, public, cfg.max_cells)
                for i in range(n):
                    mems[i] = mems[i].set_perm(blocks[i], o, pair)
                    if pair is not None:
                        prefix = compose_all(work.injections[:i]) if i > 0 else None
                        vi = value_transport(prefix, v) if prefix is not None else v
                        mems[i] = mems[i].set_contents(blocks[i], o, vi if vi is not None else UNDEF)
        elif op == "private-src" and private_src:
            mems[0], b = mems[0].alloc(0, rng.randint(1, cfg.max_cells))
            mems[0] = _fill(rng, mems[0], b, list(range(*mems[0].bounds(b))),
                            list(range(1, mems[0].next_block)), cfg.max_cells)
        elif op == "private-tgt" and private_tgt:
            mems[-1], b = mems[-1].alloc(0, rng.randint(1, cfg.max_cells))
            mems[-1] = _fill(rng, mems[-1], b, list(range(*mems[-1].bounds(b))),
                             [], cfg.max_cells)
        elif op == "edit" and unprotected and chain.hops == 1 and chain.kinds[0] == KmrTag.INJ:
            # Writes the injp protection forbids: unmapped source cells and
            # out-of-reach target cells of the first hop.
            j = chain.injections[0]
            side = rng.randrange(2)
            m = mems[side]
            cells = [(b, o) for b in range(1, old_next[side]) for o in m.positions(b)
                     if m.perm_at(b, o, PermKind.CUR, Permission.WRITABLE)
                     and (j(b) is None if side == 0 else not _in_reach(j, chain.memories[0], b, o))]
            if cells:
                b, o = rng.choice(cells)
                mems[side] = m.store(b, o, IntVal(rng.randint(100, 200)))
    work.memories = mems
    return work


def _in_reach(j: Meminj, m1: MemoryState, b2: int, o2: int) -> bool:
    return any(m1.perm_at(b1, o2 - d, PermKind.MAX, Permission.NONEMPTY) for b1, d in j.preimages(b2))


def evolution_ok(before: Chain, after: Chain) -> bool:
    for i, kind in enumerate(before.kinds):
        if not acc_check(kind, before.world(i), after.world(i)).ok:
            return False
        if not rel_check(kind, after.world(i)).ok:
            return False
    return True


def random_evolution(rng: random.Random, cfg: GenConfig, chain: Chain,
                     unprotected: bool = False) -> Chain:
    """Evolve every memory of the chain in lockstep.

    With unprotected set and an inj first hop, the evolution may also write
    cells that injp would protect.
    """
    for attempt in range(_MAX_RETRIES):
        evolved = _evolve_once(rng, cfg, chain, unprotected)
        if evolution_ok(chain, evolved):
            return evolved
        LOGGER.warning("rejected generated evolution (attempt %d)", attempt + 1)
    return Chain(list(chain.memories), list(chain.injections), list(chain.kinds))
