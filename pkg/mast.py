from abc import ABC, abstractmethod
from typing import Iterator, List, Optional, Set

from lexer import Token, TokenType
from sem import Signature, Typ

INDENT = "  "


def synthetic(type_: TokenType, literal: str) -> Token:
    # Token for nodes built by the compiler passes rather than the parser.
    return Token(type_, literal)


class Node(ABC):
    @abstractmethod
    def token_literal(self) -> Optional[str]:
        # For debugging and testing.
        raise NotImplementedError

    @abstractmethod
    def string(self) -> str:
        # We don't override __str__ or __repr__ to make string calls explicit.
        raise NotImplementedError


class Expression(Node):
    def __init__(self, token: Token) -> None:
        self.token = token

    def token_literal(self) -> str:
        return self.token.literal

    def string(self) -> str:
        return self.token.literal

    def children(self) -> List["Expression"]:
        return []


class Statement(Node):
    def __init__(self, token: Token) -> None:
        self.token = token

    def token_literal(self) -> str:
        return self.token.literal

    def string(self) -> str:
        return "\n".join(self.lines(0))

    def lines(self, depth: int) -> List[str]:
        return [INDENT * depth + self.token.literal]

    def expressions(self) -> List[Expression]:
        return []

    def blocks(self) -> List["BlockStatement"]:
        return []


class Identifier(Expression):
    def __init__(self, token: Token, value: str) -> None:
        super().__init__(token)
        self.value = value

    def string(self) -> str:
        return self.value


class IntegerLiteral(Expression):
    def __init__(self, token: Token, value: int) -> None:
        super().__init__(token)
        self.value = value

    def string(self) -> str:
        return str(self.value)


class AddrOf(Expression):
    def __init__(self, token: Token, name: Identifier) -> None:
        super().__init__(token)
        self.name = name

    def string(self) -> str:
        return f"&{self.name.string()}"


class Deref(Expression):
    def __init__(self, token: Token, operand: Expression) -> None:
        super().__init__(token)
        self.operand = operand

    def string(self) -> str:
        return f"*{self.operand.string()}"

    def children(self) -> List[Expression]:
        return [self.operand]


class IndexExpression(Expression):
    def __init__(self, token: Token, array: Identifier, index: Expression) -> None:
        super().__init__(token)

        # Only global arrays can be indexed, so the array is always named.
        self.array = array
        self.index = index

    def string(self) -> str:
        return f"{self.array.string()}[{self.index.string()}]"

    def children(self) -> List[Expression]:
        return [self.index]


class InfixExpression(Expression):
    def __init__(self, token: Token, left: Expression, operator: str, right: Expression) -> None:
        super().__init__(token)
        self.left = left
        self.operator = operator
        self.right = right

    def string(self) -> str:
        return f"({self.left.string()} {self.operator} {self.right.string()})"

    def children(self) -> List[Expression]:
        return [self.left, self.right]


class CallExpression(Expression):
    def __init__(self, token: Token, function: Expression, arguments: List[Expression]) -> None:
        super().__init__(token)
        self.function = function
        self.arguments = arguments or []

    def string(self) -> str:
        args = map(lambda a: a.string(), self.arguments)
        return f"{self.function.string()}({', '.join(args)})"

    def children(self) -> List[Expression]:
        return [self.function] + self.arguments


class BlockStatement(Statement):
    def __init__(self, token: Token, statements: List[Statement]) -> None:
        super().__init__(token)
        self.statements = statements or []

    def lines(self, depth: int) -> List[str]:
        out: List[str] = []
        for stmt in self.statements:
            out.extend(stmt.lines(depth))
        return out


class AssignStatement(Statement):
    def __init__(self, token: Token, name: Identifier, value: Expression) -> None:
        super().__init__(token)
        self.name = name
        self.value = value

    def lines(self, depth: int) -> List[str]:
        return [f"{INDENT * depth}{self.name.string()} = {self.value.string()};"]

    def expressions(self) -> List[Expression]:
        return [self.value]


class StoreStatement(Statement):
    def __init__(self, token: Token, address: Expression, value: Expression) -> None:
        super().__init__(token)
        self.address = address
        self.value = value

    def lines(self, depth: int) -> List[str]:
        return [f"{INDENT * depth}*{self.address.string()} = {self.value.string()};"]

    def expressions(self) -> List[Expression]:
        return [self.address, self.value]


class IndexAssignStatement(Statement):
    def __init__(self, token: Token, array: Identifier, index: Expression, value: Expression) -> None:
        super().__init__(token)
        self.array = array
        self.index = index
        self.value = value

    def lines(self, depth: int) -> List[str]:
        return [f"{INDENT * depth}{self.array.string()}[{self.index.string()}] = {self.value.string()};"]

    def expressions(self) -> List[Expression]:
        return [self.index, self.value]


class CallStatement(Statement):
    def __init__(self, token: Token, dest: Optional[Identifier], call: CallExpression) -> None:
        super().__init__(token)
        self.dest = dest
        self.call = call

    def lines(self, depth: int) -> List[str]:
        prefix = f"{self.dest.string()} = " if self.dest is not None else ""
        return [f"{INDENT * depth}{prefix}{self.call.string()};"]

    def expressions(self) -> List[Expression]:
        return self.call.children()


class IfStatement(Statement):
    def __init__(self, token: Token, condition: Expression,
                 consequence: BlockStatement,
                 alternative: Optional[BlockStatement]) -> None:
        super().__init__(token)
        self.condition = condition
        self.consequence = consequence
        self.alternative = alternative

    def lines(self, depth: int) -> List[str]:
        pad = INDENT * depth
        out = [f"{pad}if {_condition(self.condition)} {{"]
        out.extend(self.consequence.lines(depth + 1))
        if self.alternative is not None:
            out.append(f"{pad}}} else {{")
            out.extend(self.alternative.lines(depth + 1))
        out.append(f"{pad}}}")
        return out

    def expressions(self) -> List[Expression]:
        return [self.condition]

    def blocks(self) -> List[BlockStatement]:
        return [self.consequence] + ([self.alternative] if self.alternative is not None else [])


class WhileStatement(Statement):
    def __init__(self, token: Token, condition: Expression, body: BlockStatement) -> None:
        super().__init__(token)
        self.condition = condition
        self.body = body

    def lines(self, depth: int) -> List[str]:
        pad = INDENT * depth
        return [f"{pad}while {_condition(self.condition)} {{"] + self.body.lines(depth + 1) + [f"{pad}}}"]

    def expressions(self) -> List[Expression]:
        return [self.condition]

    def blocks(self) -> List[BlockStatement]:
        return [self.body]


class ReturnStatement(Statement):
    def __init__(self, token: Token, return_value: Optional[Expression]) -> None:
        super().__init__(token)
        self.return_value = return_value

    def lines(self, depth: int) -> List[str]:
        if self.return_value is None:
            return [f"{INDENT * depth}return;"]
        return [f"{INDENT * depth}return {self.return_value.string()};"]

    def expressions(self) -> List[Expression]:
        return [self.return_value] if self.return_value is not None else []


def _condition(expr: Expression) -> str:
    # Infix expressions already print their own parentheses.
    text = expr.string()
    return text if isinstance(expr, InfixExpression) else f"({text})"


class VarDecl(Node):
    """A parameter or local. Register variables live in the environment
    rather than in a memory block."""

    def __init__(self, token: Token, name: str, type_: Typ, register: bool = False) -> None:
        self.token = token
        self.name = name
        self.type_ = type_
        self.register = register

    def token_literal(self) -> str:
        return self.token.literal

    def string(self) -> str:
        prefix = "register " if self.register else ""
        return f"{prefix}{self.type_.value} {self.name}"


class GlobalDecl(Node):
    def __init__(self, token: Token, name: str, const: bool = False,
                 size: Optional[int] = None, init: Optional[List[int]] = None) -> None:
        self.token = token
        self.name = name
        self.const = const
        # None for a scalar, the element count for an array.
        self.size = size
        self.init = init or []

    @property
    def cells(self) -> int:
        return self.size if self.size is not None else 1

    def token_literal(self) -> str:
        return self.token.literal

    def string(self) -> str:
        out = ("const " if self.const else "") + f"int {self.name}"
        if self.size is not None:
            out += f"[{self.size}]"
        if self.init:
            if self.size is None:
                out += f" = {self.init[0]}"
            else:
                out += " = {" + ", ".join(str(v) for v in self.init) + "}"
        return out + ";"


class ExternDecl(Node):
    def __init__(self, token: Token, name: str, sg: Signature) -> None:
        self.token = token
        self.name = name
        self.sg = sg

    def token_literal(self) -> str:
        return self.token.literal

    def string(self) -> str:
        params = ", ".join(t.value for t in self.sg.params)
        return f"extern {self.sg.result.value} {self.name}({params});"


class FunctionDecl(Node):
    def __init__(self, token: Token, name: str, result: Typ, params: List[VarDecl],
                 locals_: List[VarDecl], body: BlockStatement) -> None:
        self.token = token
        self.name = name
        self.result = result
        self.params = params
        self.locals = locals_
        self.body = body

    @property
    def sg(self) -> Signature:
        return Signature(tuple(p.type_ for p in self.params), self.result)

    def variables(self) -> List[VarDecl]:
        return self.params + self.locals

    def variable(self, name: str) -> Optional[VarDecl]:
        for v in self.variables():
            if v.name == name:
                return v
        return None

    def token_literal(self) -> str:
        return self.token.literal

    def string(self) -> str:
        params = ", ".join(p.string() for p in self.params)
        out = [f"{self.result.value} {self.name}({params}) {{"]
        out.extend(INDENT + v.string() + ";" for v in self.locals)
        out.extend(self.body.lines(1))
        out.append("}")
        return "\n".join(out)


class Program(Node):
    def __init__(self, declarations: List[Node]) -> None:
        self.declarations = declarations or []

    def globals(self) -> List[GlobalDecl]:
        return [d for d in self.declarations if isinstance(d, GlobalDecl)]

    def externs(self) -> List[ExternDecl]:
        return [d for d in self.declarations if isinstance(d, ExternDecl)]

    def functions(self) -> List[FunctionDecl]:
        return [d for d in self.declarations if isinstance(d, FunctionDecl)]

    def function(self, name: str) -> Optional[FunctionDecl]:
        for f in self.functions():
            if f.name == name:
                return f
        return None

    def global_(self, name: str) -> Optional[GlobalDecl]:
        for g in self.globals():
            if g.name == name:
                return g
        return None

    def token_literal(self) -> str:
        decls = self.declarations
        return (decls[0].token_literal() or "") if len(decls) > 0 else ""

    def string(self) -> str:
        return "\n".join(d.string() for d in self.declarations) + ("\n" if self.declarations else "")


def walk_statements(block: BlockStatement) -> Iterator[Statement]:
    for stmt in block.statements:
        yield stmt
        for inner in stmt.blocks():
            yield from walk_statements(inner)


def walk_expressions(expr: Expression) -> Iterator[Expression]:
    yield expr
    for child in expr.children():
        yield from walk_expressions(child)


def addressed_names(fn: FunctionDecl) -> Set[str]:
    """Variables of fn whose address is taken somewhere in its body."""
    out: Set[str] = set()
    for stmt in walk_statements(fn.body):
        for expr in stmt.expressions():
            for sub in walk_expressions(expr):
                if isinstance(sub, AddrOf):
                    out.add(sub.name.value)
    return out
