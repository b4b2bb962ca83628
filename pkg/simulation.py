"""Co-execution checking of open simulations.

A run drives the source LTS and one or more target LTSs side by side. Each
hop between consecutive LTSs has its own incoming and outgoing convention
and a StateMatcher; a single sim_check over one hop is the degenerate case
of a vertical pairing. The composed conventions are checked directly on the
outermost source and target as well.

Outcomes per plan item are PASS, FAIL (a simulation clause is violated) or
VACUOUS (the query or the environment is outside the conventions, so there
is no obligation).
"""
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum, unique
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence

from conv import ConvExpr, Convention, convention_for
from errors import QueryRejected
from inject import Meminj, compose_all
from report import CheckReport
from sem import EnvStrategy, Mode, OpenLTS, Query, Reply, env_reply

LOGGER = logging.getLogger("refine.simulation")


@unique
class Outcome(Enum):
    PASS = "pass"
    FAIL = "fail"
    VACUOUS = "vacuous"


Tamper = Callable[[int, Reply], Reply]


@dataclass
class PlanItem:
    query: Query
    env: EnvStrategy
    label: str = ""
    # Applied to the reply handed to hop i's target; used to model a broken rely.
    tamper: Optional[Tamper] = None


@dataclass
class TestPlan:
    items: List[PlanItem]
    fuel: int = 20000
    max_stutter: int = 200


@dataclass
class MatchContext:
    hop: int
    source: OpenLTS
    target: OpenLTS
    query_src: Query
    query_tgt: Query
    world: Any


@dataclass
class MatchResult:
    report: CheckReport
    j: Meminj


class StateMatcher(ABC):
    """Relates a source state to a target state under an injection."""

    name = "matcher"
    # Whether the target must follow every source step. Otherwise states are
    # only compared when the source is at an external call or final.
    lockstep = False

    def sync_point(self, ctx: MatchContext, s1: Any) -> bool:
        return self.lockstep

    @abstractmethod
    def match(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> MatchResult:
        raise NotImplementedError

    def outgoing_injection(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> Meminj:
        return j

    def resume_injection(self, ctx: MatchContext, j_reply: Meminj, j_before: Meminj,
                         s1: Any, s2: Any) -> Meminj:
        return j_reply


@dataclass
class Hop:
    conv_in: ConvExpr
    conv_out: ConvExpr
    matcher: StateMatcher


@dataclass
class PassOutput:
    """A translated module with the convention and matcher its simulation
    against the input module is checked with."""
    name: str
    module: Any
    convention: ConvExpr
    matcher: StateMatcher

    def hop(self) -> Hop:
        return Hop(self.convention, self.convention, self.matcher)


class VerticalPairing(StateMatcher):
    """Per-hop matchers for a chain source -> middles -> target."""

    name = "vertical"

    def __init__(self, middles: Sequence[OpenLTS], hops: Sequence[Hop]) -> None:
        if len(hops) != len(middles) + 1:
            raise ValueError("a vertical pairing needs one hop more than middle LTSs")
        self.middles = list(middles)
        self.hops = list(hops)
        self.name = " ; ".join(h.matcher.name for h in hops)

    def match(self, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> MatchResult:
        raise NotImplementedError("a vertical pairing is unfolded by sim_check")


@dataclass
class ItemResult:
    label: str
    outcome: Outcome
    clause: Optional[str] = None
    message: str = ""
    violations: List[Dict[str, Any]] = field(default_factory=list)
    steps: int = 0
    calls: int = 0
    witness: Dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> Dict[str, Any]:
        return {"label": self.label, "outcome": self.outcome.value, "clause": self.clause,
                "message": self.message, "violations": self.violations, "steps": self.steps,
                "calls": self.calls, "witness": self.witness}


@dataclass
class SimReport:
    name: str
    items: List[ItemResult] = field(default_factory=list)

    def count(self, outcome: Outcome) -> int:
        return sum(1 for i in self.items if i.outcome == outcome)

    @property
    def ok(self) -> bool:
        return self.count(Outcome.FAIL) == 0 and self.count(Outcome.PASS) > 0

    def failures(self) -> List[ItemResult]:
        return [i for i in self.items if i.outcome == Outcome.FAIL]

    def clauses(self) -> List[str]:
        return [i.clause for i in self.items if i.clause is not None]

    def summary(self) -> str:
        return (f"{self.name}: {self.count(Outcome.PASS)} pass, {self.count(Outcome.FAIL)} fail, "
                f"{self.count(Outcome.VACUOUS)} vacuous")

    def to_json(self) -> Dict[str, Any]:
        return {"name": self.name, "ok": self.ok, "pass": self.count(Outcome.PASS),
                "fail": self.count(Outcome.FAIL), "vacuous": self.count(Outcome.VACUOUS),
                "items": [i.to_json() for i in self.items]}


class _Stop(Exception):
    def __init__(self, result: ItemResult) -> None:
        super().__init__(result.message)
        self.result = result


@dataclass
class _HopRun:
    source: OpenLTS
    target: OpenLTS
    conv_in: Convention
    conv_out: Convention
    matcher: StateMatcher
    ctx: Optional[MatchContext] = None
    world: Any = None
    j: Meminj = field(default_factory=Meminj)


class _Run:
    """One plan item co-executed across all hops."""

    def __init__(self, lts: List[OpenLTS], hops: List[_HopRun], r_in: Convention, r_out: Convention,
                 item: PlanItem, plan: TestPlan) -> None:
        self.lts = lts
        self.hops = hops
        self.r_in = r_in
        self.r_out = r_out
        self.item = item
        self.plan = plan
        self.states: List[Any] = []
        self.steps = 0
        self.calls = 0

    def _stop(self, outcome: Outcome, clause: Optional[str], message: str,
              report: Optional[CheckReport] = None) -> None:
        violations = [v.to_json() for v in report.violations] if report is not None else []
        raise _Stop(ItemResult(self.item.label, outcome, clause, message, violations,
                               self.steps, self.calls))

    def _composed(self) -> Meminj:
        return compose_all(h.j for h in self.hops if h.conv_in.injecting or h.conv_out.injecting)

    def _synchronize(self, i: int) -> int:
        hop = self.hops[i]
        src_mode = hop.source.mode(self.states[i])
        last: Optional[CheckReport] = None
        for k in range(self.plan.max_stutter + 1):
            tgt_mode = hop.target.mode(self.states[i + 1])
            if tgt_mode == src_mode:
                res = hop.matcher.match(hop.ctx, hop.j, self.states[i], self.states[i + 1])  # type: ignore
                if res.report.ok:
                    hop.j = res.j
                    return k
                last = res.report
            if tgt_mode != Mode.INTERNAL:
                break
            nxt = hop.target.step(self.states[i + 1])
            if nxt is None:
                self._stop(Outcome.FAIL, "3", f"hop {i}: target stuck while catching up", last)
            self.states[i + 1] = nxt
        self._stop(Outcome.FAIL, "3", f"hop {i}: target could not re-establish the match "
                                      f"({hop.matcher.name})", last)
        return 0

    def _start(self) -> None:
        q = self.item.query
        if not self.lts[0].accepts(q):
            self._stop(Outcome.VACUOUS, None, "source does not accept the query")
        queries = [q]
        for i, hop in enumerate(self.hops):
            world, q2 = hop.conv_in.transport_query(queries[-1], hop.source.se)
            check = hop.conv_in.match_query(world, queries[-1], q2)
            if not check.ok:
                self._stop(Outcome.VACUOUS, None, f"hop {i}: query outside {hop.conv_in.name}", check)
            if not hop.target.accepts(q2):
                self._stop(Outcome.FAIL, "1", f"hop {i}: target rejects a related query")
            hop.world = world
            inj = hop.conv_in.injection(world)
            hop.j = inj if inj is not None else Meminj.identity_on(queries[-1].m)
            hop.ctx = MatchContext(i, hop.source, hop.target, queries[-1], q2, world)
            queries.append(q2)
        self.queries = queries
        self.direct_in = self.r_in.world_for(queries[0], queries[-1], self._composed(), self.lts[0].se)
        check = self.r_in.match_query(self.direct_in, queries[0], queries[-1])
        if not check.ok:
            self._stop(Outcome.FAIL, "2", f"composed queries not related by {self.r_in.name}", check)
        self.states = [lts.initial_state(qi) for lts, qi in zip(self.lts, queries)]
        for i, hop in enumerate(self.hops):
            res = hop.matcher.match(hop.ctx, hop.j, self.states[i], self.states[i + 1])  # type: ignore
            if not res.report.ok:
                self._stop(Outcome.FAIL, "2", f"hop {i}: initial states not related", res.report)
            hop.j = res.j

    def _final(self) -> ItemResult:
        for i in range(len(self.hops)):
            self._synchronize(i)
        replies = [lts.final_reply(s) for lts, s in zip(self.lts, self.states)]
        for i, hop in enumerate(self.hops):
            check = hop.conv_in.match_reply(hop.world, replies[i], replies[i + 1], hop.j)
            if not check.ok:
                self._stop(Outcome.FAIL, "5", f"hop {i}: final replies not related by {hop.conv_in.name}",
                           check)
        check = self.r_in.match_reply(self.direct_in, replies[0], replies[-1], self._composed())
        if not check.ok:
            self._stop(Outcome.FAIL, "5", f"final replies not related by {self.r_in.name}", check)
        return ItemResult(self.item.label, Outcome.PASS, None, "ok", [], self.steps, self.calls,
                          {"j": self._composed().to_json()})

    def _external(self) -> None:
        for i in range(len(self.hops)):
            self._synchronize(i)
        queries = [lts.at_external(s) for lts, s in zip(self.lts, self.states)]
        worlds, before = [], []
        for i, hop in enumerate(self.hops):
            j_out = hop.matcher.outgoing_injection(hop.ctx, hop.j, self.states[i],  # type: ignore
                                                   self.states[i + 1])
            world = hop.conv_out.world_for(queries[i], queries[i + 1], j_out, hop.source.se)
            check = hop.conv_out.match_query(world, queries[i], queries[i + 1])
            if not check.ok:
                self._stop(Outcome.FAIL, "4", f"hop {i}: outgoing queries not related by "
                                              f"{hop.conv_out.name}", check)
            worlds.append(world)
            before.append(hop.j)
            hop.j = j_out
        composed = self._composed()
        direct = self.r_out.world_for(queries[0], queries[-1], composed, self.lts[0].se)
        check = self.r_out.match_query(direct, queries[0], queries[-1])
        if not check.ok:
            self._stop(Outcome.FAIL, "4", f"outgoing queries not related by {self.r_out.name}", check)

        public: Optional[FrozenSet[int]] = None
        first = self.hops[0]
        if first.conv_out.injecting:
            public = frozenset(first.j.domain())
        replies = [env_reply(self.item.env, queries[0], self.lts[0].se, self.calls, public)]
        self.calls += 1
        reply_inj = []
        for i, hop in enumerate(self.hops):
            r2, jr = hop.conv_out.transport_reply(worlds[i], replies[i], queries[i + 1])
            if self.item.tamper is not None:
                r2 = self.item.tamper(i, r2)
            jr = jr if jr is not None else hop.j
            check = hop.conv_out.match_reply(worlds[i], replies[i], r2, jr)
            if not check.ok:
                self._stop(Outcome.VACUOUS, "4", f"hop {i}: environment reply breaks "
                                                 f"{hop.conv_out.name}", check)
            replies.append(r2)
            reply_inj.append(jr)
        for hop, jr in zip(self.hops, reply_inj):
            hop.j = jr
        check = self.r_out.match_reply(direct, replies[0], replies[-1], self._composed())
        if not check.ok:
            self._stop(Outcome.FAIL, "4", f"replies not related by {self.r_out.name}", check)

        for i, lts in enumerate(self.lts):
            resumed = lts.resume(self.states[i], replies[i])
            if resumed is None:
                if i == 0:
                    self._stop(Outcome.VACUOUS, None, "source does not accept the reply")
                self._stop(Outcome.FAIL, "4", f"hop {i - 1}: target does not accept the reply")
            self.states[i] = resumed
        for i, hop in enumerate(self.hops):
            hop.j = hop.matcher.resume_injection(hop.ctx, hop.j, before[i],  # type: ignore
                                                 self.states[i], self.states[i + 1])
            res = hop.matcher.match(hop.ctx, hop.j, self.states[i], self.states[i + 1])  # type: ignore
            if not res.report.ok:
                self._stop(Outcome.FAIL, "4", f"hop {i}: states not related after the call", res.report)
            hop.j = res.j

    def run(self) -> ItemResult:
        try:
            self._start()
            while True:
                mode = self.lts[0].mode(self.states[0])
                if mode == Mode.FINAL:
                    return self._final()
                if mode == Mode.EXTERNAL:
                    self._external()
                    continue
                if self.steps >= self.plan.fuel:
                    self._stop(Outcome.VACUOUS, None, "source ran out of fuel")
                nxt = self.lts[0].step(self.states[0])
                if nxt is None:
                    self._stop(Outcome.VACUOUS, None, "source is stuck")
                self.states[0] = nxt
                self.steps += 1
                for i, hop in enumerate(self.hops):
                    if not (hop.matcher.sync_point(hop.ctx, self.states[i])  # type: ignore
                            or hop.source.mode(self.states[i]) != Mode.INTERNAL):
                        break
                    if self._synchronize(i) == 0:
                        break
        except _Stop as stop:
            return stop.result
        except QueryRejected as ex:
            return ItemResult(self.item.label, Outcome.FAIL, "1", str(ex), [], self.steps, self.calls)


def sim_check(l1: OpenLTS, l2: OpenLTS, r_in: ConvExpr, r_out: ConvExpr,
              matcher: StateMatcher, plan: TestPlan, name: Optional[str] = None) -> SimReport:
    if isinstance(matcher, VerticalPairing):
        lts = [l1] + matcher.middles + [l2]
        hops = matcher.hops
    else:
        lts = [l1, l2]
        hops = [Hop(r_in, r_out, matcher)]
    report = SimReport(name or f"{l1.name} <= {l2.name}")
    for index, item in enumerate(plan.items):
        runs = [_HopRun(lts[i], lts[i + 1], convention_for(h.conv_in), convention_for(h.conv_out), h.matcher)
                for i, h in enumerate(hops)]
        item.label = item.label or f"item {index}"
        result = _Run(lts, runs, convention_for(r_in), convention_for(r_out), item, plan).run()
        LOGGER.debug("%s: %s %s %s", report.name, item.label, result.outcome.value, result.message)
        report.items.append(result)
    LOGGER.info("%s", report.summary())
    return report
