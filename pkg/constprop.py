"""Constant propagation over MiniC.

Known values come from two places: assignments of constants to locals, and
the initialisers of read-only globals. The second is only sound while the
environment leaves read-only memory alone, which is why the pass is checked
with ro composed in front of c_injp.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

import mast
from conv import chain
from evaluator import Callstate, frames
from inject import Meminj, reach_closure, value_roots
from lexer import TokenType
from matchers import MiniCMatcher
from mem import IntVal
from report import CheckReport
from simulation import MatchContext, PassOutput

LOGGER = logging.getLogger("refine.constprop")

Facts = Dict[str, int]


@dataclass
class ValueAnalysis:
    # Read-only globals, zero-padded to their size.
    tables: Dict[str, List[int]] = field(default_factory=dict)
    # Functions that let the address of one of their locals out.
    escaped: Dict[str, bool] = field(default_factory=dict)

    def constant(self, name: str) -> Optional[int]:
        table = self.tables.get(name)
        return table[0] if table is not None and len(table) == 1 else None

    def element(self, name: str, index: int) -> Optional[int]:
        table = self.tables.get(name)
        if table is None or not 0 <= index < len(table):
            return None
        return table[index]


def _leaks(expr: mast.Expression, locals_: Set[str]) -> bool:
    if isinstance(expr, mast.AddrOf):
        return expr.name.value in locals_
    if isinstance(expr, mast.Deref) and isinstance(expr.operand, mast.AddrOf):
        return False
    return any(_leaks(c, locals_) for c in expr.children())


def _escapes(fn: mast.FunctionDecl) -> bool:
    locals_ = {v.name for v in fn.variables()}
    for stmt in mast.walk_statements(fn.body):
        exprs = stmt.expressions()
        if isinstance(stmt, mast.StoreStatement) and isinstance(stmt.address, mast.AddrOf):
            exprs = [stmt.value]
        if any(_leaks(e, locals_) for e in exprs):
            return True
    return False


def analyse(program: mast.Program) -> ValueAnalysis:
    analysis = ValueAnalysis()
    for g in program.globals():
        if g.const:
            analysis.tables[g.name] = (list(g.init) + [0] * g.cells)[:g.cells]
    for fn in program.functions():
        analysis.escaped[fn.name] = _escapes(fn)
    return analysis


def _literal(value: int) -> mast.IntegerLiteral:
    value = IntVal(value).value
    return mast.IntegerLiteral(mast.synthetic(TokenType.INT, str(value)), value)


def _compute(operator: str, a: int, b: int) -> Optional[int]:
    if operator == "+":
        return a + b
    if operator == "-":
        return a - b
    if operator == "^":
        return a ^ b
    if operator == "==":
        return int(a == b)
    if operator == "<":
        return int(a < b)
    return None


def _assigned(block: mast.BlockStatement) -> Set[str]:
    out: Set[str] = set()
    for stmt in mast.walk_statements(block):
        if isinstance(stmt, mast.AssignStatement):
            out.add(stmt.name.value)
        elif isinstance(stmt, mast.CallStatement) and stmt.dest is not None:
            out.add(stmt.dest.value)
        elif isinstance(stmt, mast.StoreStatement) and isinstance(stmt.address, mast.AddrOf):
            out.add(stmt.address.name.value)
    return out


def _writes_memory(block: mast.BlockStatement) -> bool:
    return any(isinstance(s, mast.CallStatement) or
               isinstance(s, mast.StoreStatement) and not isinstance(s.address, mast.AddrOf)
               for s in mast.walk_statements(block))


class _Folder:
    """Forward pass over one function body, rebuilding every node it folds."""

    def __init__(self, fn: mast.FunctionDecl, analysis: ValueAnalysis) -> None:
        self.fn = fn
        self.analysis = analysis
        self.locals = {v.name: v for v in fn.variables()}
        self.escaped = analysis.escaped.get(fn.name, True)
        self.folded = 0

    def function(self) -> mast.FunctionDecl:
        body, _ = self.block(self.fn.body, {})
        return mast.FunctionDecl(self.fn.token, self.fn.name, self.fn.result,
                                 self.fn.params, self.fn.locals, body)

    def block(self, block: mast.BlockStatement, facts: Facts) -> Tuple[mast.BlockStatement, Facts]:
        out: List[mast.Statement] = []
        for stmt in block.statements:
            new, facts = self.statement(stmt, facts)
            out.append(new)
        return mast.BlockStatement(block.token, out), facts

    def _kill_memory(self, facts: Facts) -> Facts:
        # An escaped frame can be written through any pointer.
        if not self.escaped:
            return facts
        return {k: v for k, v in facts.items() if self.locals[k].register}

    def _learn(self, facts: Facts, name: str, value: mast.Expression) -> Facts:
        if name not in self.locals:
            return facts
        facts = dict(facts)
        if isinstance(value, mast.IntegerLiteral):
            facts[name] = value.value
        else:
            facts.pop(name, None)
        return facts

    def statement(self, stmt: mast.Statement, facts: Facts) -> Tuple[mast.Statement, Facts]:
        if isinstance(stmt, mast.AssignStatement):
            value = self.expression(stmt.value, facts)
            return mast.AssignStatement(stmt.token, stmt.name, value), self._learn(facts, stmt.name.value, value)
        if isinstance(stmt, mast.StoreStatement):
            value = self.expression(stmt.value, facts)
            target = stmt.address
            if isinstance(target, mast.AddrOf):
                store = mast.StoreStatement(stmt.token, target, value)
                return store, self._learn(facts, target.name.value, value)
            address = self.expression(target, facts)
            return mast.StoreStatement(stmt.token, address, value), self._kill_memory(facts)
        if isinstance(stmt, mast.IndexAssignStatement):
            index = self.expression(stmt.index, facts)
            value = self.expression(stmt.value, facts)
            return mast.IndexAssignStatement(stmt.token, stmt.array, index, value), facts
        if isinstance(stmt, mast.CallStatement):
            args = [self.expression(a, facts) for a in stmt.call.arguments]
            call = mast.CallExpression(stmt.call.token, stmt.call.function, args)
            facts = self._kill_memory(facts)
            if stmt.dest is not None:
                facts = {k: v for k, v in facts.items() if k != stmt.dest.value}
            return mast.CallStatement(stmt.token, stmt.dest, call), facts
        if isinstance(stmt, mast.IfStatement):
            condition = self.expression(stmt.condition, facts)
            consequence, after1 = self.block(stmt.consequence, facts)
            alternative: Optional[mast.BlockStatement] = None
            after2 = facts
            if stmt.alternative is not None:
                alternative, after2 = self.block(stmt.alternative, facts)
            merged = {k: v for k, v in after1.items() if after2.get(k) == v}
            return mast.IfStatement(stmt.token, condition, consequence, alternative), merged
        if isinstance(stmt, mast.WhileStatement):
            killed = _assigned(stmt.body)
            reduced = {k: v for k, v in facts.items() if k not in killed}
            if _writes_memory(stmt.body):
                reduced = self._kill_memory(reduced)
            condition = self.expression(stmt.condition, reduced)
            body, _ = self.block(stmt.body, reduced)
            return mast.WhileStatement(stmt.token, condition, body), reduced
        if isinstance(stmt, mast.ReturnStatement):
            value = None if stmt.return_value is None else self.expression(stmt.return_value, facts)
            return mast.ReturnStatement(stmt.token, value), facts

        raise NotImplementedError(type(stmt).__name__)

    def expression(self, expr: mast.Expression, facts: Facts) -> mast.Expression:
        new = self._fold(expr, facts)
        if isinstance(new, mast.IntegerLiteral) and not isinstance(expr, mast.IntegerLiteral):
            self.folded += 1
        return new

    def _fold(self, expr: mast.Expression, facts: Facts) -> mast.Expression:
        if isinstance(expr, mast.Identifier):
            name = expr.value
            if name in self.locals:
                return _literal(facts[name]) if name in facts else expr
            constant = self.analysis.constant(name)
            return _literal(constant) if constant is not None else expr
        if isinstance(expr, mast.Deref):
            operand = expr.operand
            if isinstance(operand, mast.AddrOf):
                name = operand.name.value
                if name in facts:
                    return _literal(facts[name])
                if name not in self.locals and self.analysis.constant(name) is not None:
                    return _literal(self.analysis.constant(name))  # type: ignore
                return expr
            return mast.Deref(expr.token, self._fold(operand, facts))
        if isinstance(expr, mast.IndexExpression):
            index = self._fold(expr.index, facts)
            if isinstance(index, mast.IntegerLiteral) and expr.array.value not in self.locals:
                element = self.analysis.element(expr.array.value, index.value)
                if element is not None:
                    return _literal(element)
            return mast.IndexExpression(expr.token, expr.array, index)
        if isinstance(expr, mast.InfixExpression):
            left = self._fold(expr.left, facts)
            right = self._fold(expr.right, facts)
            if isinstance(left, mast.IntegerLiteral) and isinstance(right, mast.IntegerLiteral):
                value = _compute(expr.operator, left.value, right.value)
                if value is not None:
                    return _literal(value)
            return mast.InfixExpression(expr.token, left, expr.operator, right)
        return expr


class ConstPropMatcher(MiniCMatcher):
    """Lockstep matcher that also checks the escape analysis at outgoing
    calls: no frame of a non-escaping function is reachable from the
    arguments or the globals."""

    name = "const-prop"

    def __init__(self, analysis: ValueAnalysis) -> None:
        self.analysis = analysis

    def extra(self, report: CheckReport, ctx: MatchContext, j: Meminj, s1: Any, s2: Any) -> None:
        if not isinstance(s1, Callstate) or ctx.source.at_external(s1) is None:
            return
        roots = value_roots(s1.m, s1.args) + ctx.source.se.global_roots(s1.m)
        reachable = reach_closure(None, s1.m, roots)
        for frame in frames(s1):
            if self.analysis.escaped.get(frame.function.name, True):
                continue
            exposed = sorted(set(frame.env.blocks().values()) & reachable)
            report.check(not exposed, "escape",
                         f"{frame.function.name} did not escape but its frame is reachable", exposed)


def const_prop(program: mast.Program) -> PassOutput:
    analysis = analyse(program)
    declarations: List[mast.Node] = []
    for d in program.declarations:
        if isinstance(d, mast.FunctionDecl):
            folder = _Folder(d, analysis)
            d = folder.function()
            if folder.folded:
                LOGGER.debug("%s: folded %d expressions", d.name, folder.folded)
        declarations.append(d)
    return PassOutput("const_prop", mast.Program(declarations), chain(["ro", "c_injp"]),
                      ConstPropMatcher(analysis))
