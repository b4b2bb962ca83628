"""Kripke memory relations: worlds, accessibility and the two-hop constructions.

An InjpWorld (j, m1, m2) relates a source and a target memory. The
accessibility checks decide whether an evolution of a world across an
external call respects the protection its tag promises. `interpolate` and
`decompose_identity` split a composed world into two hops and back;
`interpolate_ext` does the split when the second hop is an extension.
"""
import logging
from dataclasses import dataclass
from enum import Enum, unique
from typing import Any, Callable, Dict, List, Tuple

from errors import PreconditionError, UnsupportedPair
from inject import (Meminj, block_roots, compose_inj, inj_sep_witness, live_preimage, mem_inj_check,
                    out_of_reach, reach_closure, value_inject_check, value_transport)
from mem import (MemoryState, Permission, PermKind, UNDEF, mem_acc_violations,
                 unchanged_on_witness)
from report import CheckReport, SuiteReport

LOGGER = logging.getLogger("refine.kmr")


@unique
class KmrTag(Enum):
    INJP = "injp"
    INJ = "inj"
    EXT = "ext"
    ID = "id"


@dataclass(frozen=True)
class InjpWorld:
    j: Meminj
    m1: MemoryState
    m2: MemoryState

    def to_json(self) -> Dict[str, Any]:
        return {"j": self.j.to_json(), "m1": self.m1.to_json(), "m2": self.m2.to_json()}


def _mem_acc(report: CheckReport, clause: str, m: MemoryState, m2: MemoryState) -> None:
    for sub, message, witness in mem_acc_violations(m, m2):
        report.fail(clause, f"{sub}: {message}", witness)


def _incr_sep(report: CheckReport, w: InjpWorld, w2: InjpWorld) -> None:
    if not w.j.subset(w2.j):
        report.fail("incr", "injection shrank", [b for b in w.j.domain() if w2.j(b) != w.j(b)])
        return
    witness = inj_sep_witness(w.j, w2.j, w.m1, w.m2)
    if witness is not None:
        report.fail("inj-sep", "new mapping relates an old block", witness)


def injp_acc_check(w: InjpWorld, w2: InjpWorld) -> CheckReport:
    report = CheckReport("injp-acc")
    _incr_sep(report, w, w2)
    witness = unchanged_on_witness(lambda b, o: w.j(b) is None, w.m1, w2.m1)
    if witness is not None:
        report.fail("unmapped", "unmapped source memory changed", list(witness))
    witness = unchanged_on_witness(lambda b, o: out_of_reach(w.j, w.m1, b, o), w.m2, w2.m2)
    if witness is not None:
        report.fail("out-of-reach", "out-of-reach target memory changed", list(witness))
    _mem_acc(report, "mem-acc-src", w.m1, w2.m1)
    _mem_acc(report, "mem-acc-tgt", w.m2, w2.m2)
    return report


def inj_acc_check(w: InjpWorld, w2: InjpWorld) -> CheckReport:
    report = CheckReport("inj-acc")
    _incr_sep(report, w, w2)
    _mem_acc(report, "mem-acc-src", w.m1, w2.m1)
    _mem_acc(report, "mem-acc-tgt", w.m2, w2.m2)
    return report


def ext_world_check(w: InjpWorld) -> CheckReport:
    report = CheckReport("ext")
    if w.m1.next_block != w.m2.next_block:
        report.fail("footprint", "memories have different block counts",
                    [w.m1.next_block, w.m2.next_block])
    if w.j != Meminj.identity_on(w.m1):
        report.fail("shape", "injection is not the identity on valid blocks")
    report.merge(mem_inj_check(w.j, w.m1, w.m2))
    return report


def ext_acc_check(w: InjpWorld, w2: InjpWorld) -> CheckReport:
    report = CheckReport("ext-acc")
    if w2.m1.next_block != w2.m2.next_block:
        report.fail("footprint", "memories have different block counts after the call")
    _mem_acc(report, "mem-acc-src", w.m1, w2.m1)
    _mem_acc(report, "mem-acc-tgt", w.m2, w2.m2)
    return report


def rel_check(tag: KmrTag, w: InjpWorld) -> CheckReport:
    if tag == KmrTag.EXT:
        return ext_world_check(w)
    if tag == KmrTag.ID:
        report = CheckReport("id")
        report.check(w.m1 == w.m2, "equal", "memories differ")
        return report
    return mem_inj_check(w.j, w.m1, w.m2)


def acc_check(tag: KmrTag, w: InjpWorld, w2: InjpWorld) -> CheckReport:
    if tag == KmrTag.INJP:
        return injp_acc_check(w, w2)
    if tag == KmrTag.INJ:
        return inj_acc_check(w, w2)
    if tag == KmrTag.EXT:
        return ext_acc_check(w, w2)
    report = CheckReport("id-acc")
    _mem_acc(report, "mem-acc", w.m1, w2.m1)
    return report


def _copy_block(m1p: MemoryState, b1: int, j12p: Meminj, m2p: MemoryState,
                b2: int, delta: int) -> MemoryState:
    # Mirror every position of a freshly allocated source block.
    for o1 in sorted(set(range(*m1p.bounds(b1))) | set(m1p.positions(b1))):
        pair = m1p.perm(b1, o1)
        m2p = m2p.set_perm(b2, o1 + delta, pair)
        if pair is not None and pair[1] >= Permission.READABLE:
            v = value_transport(j12p, m1p.contents(b1, o1))
            m2p = m2p.set_contents(b2, o1 + delta, v if v is not None else UNDEF)
    return m2p


def _build_middle(j12: Meminj, m1: MemoryState, m2: MemoryState, m1p: MemoryState,
                  fresh: List[int], public_target: Callable[[int], bool]) -> Tuple[Meminj, MemoryState, Dict[int, int]]:
    """Shared core of interpolate and transport_evolution.

    Allocates a mirror block for each fresh source block (ascending), copies
    the new blocks, then updates the in-reach old positions of m2 whose
    block satisfies public_target from their unique live preimage in m1p.
    Returns the extended injection, the new middle memory and the map from
    fresh source blocks to their mirror blocks.
    """
    j12p = j12
    m2p = m2
    mirrors: Dict[int, int] = {}
    for b1 in sorted(fresh):
        lo, hi = m1p.bounds(b1)
        m2p, b2 = m2p.alloc(lo, hi)
        j12p = j12p.extend(b1, b2, 0)
        mirrors[b1] = b2
    for b1, b2 in mirrors.items():
        m2p = _copy_block(m1p, b1, j12p, m2p, b2, 0)

    for b2 in m2.block_ids():
        if not public_target(b2):
            continue
        for o2 in m2.positions(b2):
            if not m2.perm_at(b2, o2, PermKind.MAX, Permission.NONEMPTY):
                continue
            source = live_preimage(j12, m1, b2, o2)
            if source is None:
                continue
            b1, o1 = source
            pair = m1p.perm(b1, o1)
            writable = m2.perm_at(b2, o2, PermKind.MAX, Permission.WRITABLE)
            if pair is None:
                m2p = m2p.set_perm(b2, o2, None)
                continue
            old_value = m2p.contents(b2, o2)
            m2p = m2p.set_perm(b2, o2, pair)
            if pair[1] >= Permission.READABLE and writable:
                v = value_transport(j12p, m1p.contents(b1, o1))
                m2p = m2p.set_contents(b2, o2, v if v is not None else UNDEF)
            else:
                m2p = m2p.set_contents(b2, o2, old_value)
    return j12p, m2p, mirrors


def transport_evolution(j: Meminj, m1: MemoryState, m2: MemoryState,
                        m1p: MemoryState) -> Tuple[Meminj, MemoryState]:
    """Target-side mirror of a source-side evolution m1 -> m1p.

    Every block allocated in m1p gets a fresh target block at delta 0. In-reach
    target positions follow their source preimage; out-of-reach positions
    are left untouched.
    """
    fresh = [b for b in m1p.block_ids() if not m1.valid_block(b)]
    jp, m2p, _ = _build_middle(j, m1, m2, m1p, fresh, lambda b2: True)
    return jp, m2p


def interpolate(j12: Meminj, j23: Meminj, m1: MemoryState, m2: MemoryState, m3: MemoryState,
                j13p: Meminj, m1p: MemoryState,
                m3p: MemoryState) -> Tuple[Meminj, Meminj, MemoryState]:
    pre = CheckReport("interpolate-pre")
    pre.merge(mem_inj_check(j12, m1, m2), "j12:")
    pre.merge(mem_inj_check(j23, m2, m3), "j23:")
    pre.merge(injp_acc_check(InjpWorld(compose_inj(j12, j23), m1, m3),
                             InjpWorld(j13p, m1p, m3p)), "acc13:")
    pre.merge(mem_inj_check(j13p, m1p, m3p), "j13':")
    if not pre.ok:
        raise PreconditionError("interpolate needs related, accessible inputs: " + pre.summary(), pre)

    fresh = [b for b in j13p.domain() if not m1.valid_block(b)]
    j12p, m2p, mirrors = _build_middle(j12, m1, m2, m1p, fresh, lambda b2: j23(b2) is not None)
    j23p = j23
    for b1, b2 in sorted(mirrors.items()):
        b3, delta = j13p(b1)  # type: ignore
        j23p = j23p.extend(b2, b3, delta)
    LOGGER.debug("interpolated %d fresh blocks", len(mirrors))
    return j12p, j23p, m2p


def interpolate_ext(j12: Meminj, m1: MemoryState, m2: MemoryState, m3: MemoryState,
                    j13p: Meminj, m1p: MemoryState, m3p: MemoryState) -> Tuple[Meminj, MemoryState]:
    """The middle memory of an injection followed by an extension.

    m2 and m3 share their blocks, so the new middle memory gets one block
    for every block allocated in m3p, holding a copy of it. In-reach old
    positions follow m1p. Old positions out of reach of m1 keep their m2
    contents while the target leaves them alone, and otherwise take the
    permission and value of m3p, or lose their permission when a read-only
    value changed.
    """
    if m2.next_block != m3.next_block:
        raise PreconditionError("the extension hop must relate memories with the same blocks")
    j12p = j12
    for b1 in j13p.domain():
        if not m1.valid_block(b1):
            b3, delta = j13p(b1)  # type: ignore
            j12p = j12p.extend(b1, b3, delta)
    # Fresh source blocks have no permission in m1, so they never count as live preimages.
    j12p, m2p, _ = _build_middle(j12p, m1, m2, m1p, [], lambda b2: True)

    for b2 in m2.block_ids():
        for o2 in m2.positions(b2):
            before = m2.perm(b2, o2)
            if before is None or live_preimage(j12, m1, b2, o2) is not None:
                continue
            if (m3p.perm(b2, o2), m3p.contents(b2, o2)) == (m3.perm(b2, o2), m3.contents(b2, o2)):
                continue
            after = m3p.perm(b2, o2)
            value = m3p.contents(b2, o2)
            if after is None or (before[0] < Permission.WRITABLE and value != m2.contents(b2, o2)):
                m2p = m2p.set_perm(b2, o2, None)
                continue
            m2p = m2p.set_perm(b2, o2, after)
            m2p = m2p.set_contents(b2, o2, value)

    for b3 in range(m3.next_block, m3p.next_block):
        lo, hi = m3p.bounds(b3)
        m2p, b2 = m2p.alloc(lo, hi)
        for o in sorted(set(range(lo, hi)) | set(m3p.positions(b3))):
            pair = m3p.perm(b3, o)
            m2p = m2p.set_perm(b2, o, pair)
            if pair is not None:
                m2p = m2p.set_contents(b2, o, m3p.contents(b3, o))
    LOGGER.debug("interpolated an extension hop over %d new blocks", m3p.next_block - m3.next_block)
    return j12p, m2p


def decompose_identity(j13: Meminj, m1: MemoryState) -> Tuple[Meminj, MemoryState, Meminj]:
    j12 = Meminj.identity(j13.domain())
    return j12, m1, j13


def recompose_check(j12p: Meminj, j23p: Meminj, w13: InjpWorld,
                    m1p: MemoryState, m3p: MemoryState) -> CheckReport:
    j13p = compose_inj(j12p, j23p)
    report = CheckReport("recompose")
    report.merge(injp_acc_check(w13, InjpWorld(j13p, m1p, m3p)))
    report.merge(mem_inj_check(j13p, m1p, m3p))
    return report


# Pairs (K, L) for which "K is refined by L" has a registered sampler. The
# value says whether the refinement is expected to hold.
REFINEMENT_PAIRS: Dict[Tuple[KmrTag, KmrTag], bool] = {
    (KmrTag.INJP, KmrTag.INJP): True,
    (KmrTag.INJ, KmrTag.INJ): True,
    (KmrTag.EXT, KmrTag.EXT): True,
    (KmrTag.INJP, KmrTag.INJ): True,
    (KmrTag.INJ, KmrTag.INJP): False,
    (KmrTag.ID, KmrTag.EXT): True,
    (KmrTag.EXT, KmrTag.INJ): True,
}

# L-worlds are drawn from the shape K can relate when that shape is narrower.
_SAMPLE_KIND: Dict[Tuple[KmrTag, KmrTag], KmrTag] = {
    (KmrTag.ID, KmrTag.EXT): KmrTag.ID,
    (KmrTag.EXT, KmrTag.INJ): KmrTag.EXT,
}


def convert_world(k: KmrTag, l: KmrTag, w: InjpWorld) -> InjpWorld:
    """The constructive witness: a K-world relating the memories of an L-world."""
    if k in (KmrTag.ID, KmrTag.EXT) and l != k:
        return InjpWorld(Meminj.identity_on(w.m1), w.m1, w.m2)
    return w


def kmr_sample_refine(k: KmrTag, l: KmrTag, cfg: "generators.GenConfig",
                      seed: int = 0, iters: int = 200) -> SuiteReport:
    """Check "K is refined by L" on sampled worlds and evolutions.

    Forward: the K-world built from a sampled L-world relates the same
    memories. Backward: every K-accessible evolution of it is L-accessible
    and keeps the L relation.
    """
    if (k, l) not in REFINEMENT_PAIRS:
        raise UnsupportedPair(f"no witness registered for {k.value} refined by {l.value}")
    suite = SuiteReport(f"kmr {k.value} <= {l.value}")
    suite.details["expected"] = "pass" if REFINEMENT_PAIRS[(k, l)] else "counterexample"
    rng = generators.seeded(seed)
    for index in range(iters):
        chain = generators.random_chain(rng, cfg, [_SAMPLE_KIND.get((k, l), l)])
        wl = chain.world(0)
        wk = convert_world(k, l, wl)
        report = CheckReport("refine")
        report.merge(rel_check(k, wk), "forward:")
        if report.ok:
            evolved = generators.random_evolution(
                rng, cfg, generators.Chain([wk.m1, wk.m2], [wk.j], [k]),
                unprotected=(k == KmrTag.INJ))
            wk2 = evolved.world(0)
            report.merge(acc_check(l, wl, wk2), "backward:")
            report.merge(rel_check(l, wk2), "backward:")
        suite.record(report, {"seed": seed, "index": index})
    LOGGER.info("%s: %d instances, %d failures", suite.name, suite.instances, len(suite.failures))
    return suite



def _interpolation_instance(chain: "generators.Chain", evolved: "generators.Chain") -> CheckReport:
    j12, j23 = chain.injections
    m1, m2, m3 = chain.memories
    m1p, m3p = evolved.memories[0], evolved.memories[-1]
    j13p = evolved.composite()
    report = CheckReport("interpolate")
    j12p, j23p, m2p = interpolate(j12, j23, m1, m2, m3, j13p, m1p, m3p)
    report.merge(mem_inj_check(j12p, m1p, m2p), "j12':")
    report.merge(mem_inj_check(j23p, m2p, m3p), "j23':")
    report.merge(injp_acc_check(InjpWorld(j12, m1, m2), InjpWorld(j12p, m1p, m2p)), "acc12:")
    report.merge(injp_acc_check(InjpWorld(j23, m2, m3), InjpWorld(j23p, m2p, m3p)), "acc23:")
    report.check(compose_inj(j12p, j23p) == j13p, "compose", "j23' . j12' differs from j13'",
                 [compose_inj(j12p, j23p).to_json(), j13p.to_json()])
    return report


def check_interpolation(cfg: "generators.GenConfig", seed: int = 0, iters: int = 1000) -> SuiteReport:
    """injp ⊑ injp ∘ injp on sampled two-hop chains and protected evolutions."""
    suite = SuiteReport("injp transitivity (interpolation)")
    rng = generators.seeded(seed)
    for index in range(iters):
        chain = generators.random_chain(rng, cfg, [KmrTag.INJP, KmrTag.INJP])
        evolved = generators.random_evolution(rng, cfg, chain)
        try:
            report = _interpolation_instance(chain, evolved)
        except PreconditionError as ex:
            LOGGER.debug("instance %d outside the hypotheses: %s", index, ex)
            suite.record_vacuous()
            continue
        suite.record(report, {"seed": seed, "index": index})
    LOGGER.info("%s: %d instances, %d failures", suite.name, suite.instances, len(suite.failures))
    return suite


def check_decomposition(cfg: "generators.GenConfig", seed: int = 0, iters: int = 1000) -> SuiteReport:
    """injp ∘ injp ⊑ injp: split a sampled world through the identity, evolve
    both legs and recompose."""
    suite = SuiteReport("injp transitivity (decomposition)")
    rng = generators.seeded(seed)
    for index in range(iters):
        single = generators.random_chain(rng, cfg, [KmrTag.INJP])
        w13 = single.world(0)
        j12, m2, j23 = decompose_identity(w13.j, w13.m1)
        legs = generators.Chain([w13.m1, m2, w13.m2], [j12, j23], [KmrTag.INJP, KmrTag.INJP])
        report = CheckReport("decompose")
        report.merge(mem_inj_check(j12, w13.m1, m2), "j12:")
        report.merge(mem_inj_check(j23, m2, w13.m2), "j23:")
        evolved = generators.random_evolution(rng, cfg, legs)
        j12p, j23p = evolved.injections
        report.merge(recompose_check(j12p, j23p, w13, evolved.memories[0], evolved.memories[-1]))
        suite.record(report, {"seed": seed, "index": index})
    LOGGER.info("%s: %d instances, %d failures", suite.name, suite.instances, len(suite.failures))
    return suite


def _injection_instance(chain: "generators.Chain") -> CheckReport:
    j12, j23 = chain.injections
    m1, m2, m3 = chain.memories
    j13 = compose_inj(j12, j23)
    report = CheckReport("injections")
    report.merge(mem_inj_check(j13, m1, m3), "compose:")
    for b1, (b3, d13) in j13.items():
        for o1 in m1.positions(b1):
            if not m1.perm_at(b1, o1, PermKind.CUR, Permission.READABLE):
                continue
            v1 = m1.contents(b1, o1)
            v2 = value_transport(j12, v1)
            report.check(v2 is not None and value_inject_check(j23, v2, m3.contents(b3, o1 + d13)),
                         "mid-value", "no middle value relates the cell", [b1, o1])
    for b2 in m2.block_ids():
        image = j23(b2)
        if image is None:
            continue
        for o2 in m2.positions(b2):
            if out_of_reach(j12, m1, b2, o2) and m2.perm_at(b2, o2, PermKind.MAX, Permission.NONEMPTY):
                report.check(out_of_reach(j13, m1, image[0], o2 + image[1]), "out-of-reach",
                             "image of an out-of-reach position is in reach", [b2, o2])
    if mem_inj_check(j12, m1, m2).ok:
        reached = reach_closure(j12, m1, block_roots(m1, j12.domain()))
        leaked = sorted(b for b in reached if j12(b) is None)
        report.check(not leaked, "closure", "public memory reaches an unmapped block", leaked)
    return report


def check_injections(cfg: "generators.GenConfig", seed: int = 0, iters: int = 500) -> SuiteReport:
    """Composition, middle values, out-of-reach images and the public
    closure on sampled two-hop chains."""
    suite = SuiteReport("injection composition")
    rng = generators.seeded(seed)
    for index in range(iters):
        chain = generators.random_chain(rng, cfg, [KmrTag.INJP, KmrTag.INJP])
        suite.record(_injection_instance(chain), {"seed": seed, "index": index})
    LOGGER.info("%s: %d instances, %d failures", suite.name, suite.instances, len(suite.failures))
    return suite


# pylint: disable=wrong-import-position
import generators  # noqa: E402
