from enum import Enum, unique
from typing import Callable, Dict, List, Optional, Set, Tuple
import mast
from errors import ParseError
from lexer import Lexer, Token, TokenType
from sem import Signature, Typ

# TIP: Setting a breakpoint in one of the parsing methods and inspecting the
# call stack when it's hit, effectively show the Abstract Syntax Tree at that
# point during parsing.


@unique
class PrecedenceLevel(Enum):
    # It's the relative and not absolute values of levels that matter. As in
    # C, xor binds looser than equality, which binds looser than comparison.
    LOWEST = 0
    XOR = 1          # ^
    EQUALS = 2       # ==
    LESSGREATER = 3  # <
    SUM = 4          # + or -
    PREFIX = 5       # -x, *p or &x
    CALL = 6         # f(x)
    INDEX = 7        # array[index]


# Table of precedence to map token type to precedence level. Lowest serves as
# starting precedence for the Pratt parser while Prefix isn't associated with
# any token but an expression as a whole.
Precedence: dict = {
    TokenType.CARET: PrecedenceLevel.XOR,
    TokenType.EQ: PrecedenceLevel.EQUALS,
    TokenType.LT: PrecedenceLevel.LESSGREATER,
    TokenType.PLUS: PrecedenceLevel.SUM,
    TokenType.MINUS: PrecedenceLevel.SUM,
    TokenType.LPAREN: PrecedenceLevel.CALL,
    TokenType.LBRACKET: PrecedenceLevel.INDEX
}

PrefixParseFn = Callable[[], Optional[mast.Expression]]
InfixParseFn = Callable[[mast.Expression], Optional[mast.Expression]]

TYPE_TOKENS = {
    TokenType.INT_TYPE: Typ.INT,
    TokenType.PTR_TYPE: Typ.PTR,
    TokenType.VOID_TYPE: Typ.VOID,
}


class Parser:
    def __init__(self, lexer: Lexer) -> None:
        self.errors: List[str] = []

        # (line, column) of each entry in errors.
        self.positions: List[Tuple[int, int]] = []
        self._lexer = lexer

        # Acts like _position and _peek_char within the lexer, but instead of
        # pointing to characters in the source they point to current and next
        # tokens. This implements a parser with one token lookahead, which is
        # enough to tell "x = e;" from "x[i] = e;" and "f(x);".
        self._current_token: Token = Token(TokenType.ILLEGAL, "")
        self._peek_token: Token = Token(TokenType.ILLEGAL, "")

        # Functions based on token type called as part of Pratt parsing.
        self._prefix_parse_fns: Dict[TokenType, PrefixParseFn] = {}
        self._infix_parse_fns: Dict[TokenType, InfixParseFn] = {}

        # Read two tokens so _current_token and _peekToken tokens are both set.
        self._next_token()
        self._next_token()

        self._register_prefix(TokenType.IDENT, self._parse_identifier)
        self._register_prefix(TokenType.INT, self._parse_integer_literal)
        self._register_prefix(TokenType.MINUS, self._parse_negation)
        self._register_prefix(TokenType.AMPERSAND, self._parse_addr_of)
        self._register_prefix(TokenType.ASTERISK, self._parse_deref)
        self._register_prefix(TokenType.LPAREN, self._parse_group_expression)

        self._register_infix(TokenType.PLUS, self._parse_infix_expression)
        self._register_infix(TokenType.MINUS, self._parse_infix_expression)
        self._register_infix(TokenType.CARET, self._parse_infix_expression)
        self._register_infix(TokenType.EQ, self._parse_infix_expression)
        self._register_infix(TokenType.LT, self._parse_infix_expression)
        self._register_infix(TokenType.LPAREN, self._parse_call_expression)
        self._register_infix(TokenType.LBRACKET, self._parse_index_expression)

    def _register_prefix(self, type_: TokenType, function: PrefixParseFn) -> None:
        self._prefix_parse_fns[type_] = function

    def _register_infix(self, type_: TokenType, function: InfixParseFn) -> None:
        self._infix_parse_fns[type_] = function

    def _next_token(self) -> None:
        self._current_token = self._peek_token
        self._peek_token = self._lexer.next_token()

    def parse_program(self) -> mast.Program:
        decls: List[mast.Node] = []
        while not self._current_token_is(TokenType.EOF):
            decl = self._parse_declaration()

            # A None declaration has already recorded its error. Skip to the
            # next likely declaration start so later errors still get
            # reported, the way statements are skipped within a block.
            if decl is not None:
                decls.append(decl)
            else:
                self._synchronize()
            self._next_token()
        program = mast.Program(decls)
        if not self.errors:
            self._check_names(program)
        return program

    def _synchronize(self) -> None:
        while not self._current_token_is(TokenType.EOF) and \
                not self._current_token_is(TokenType.SEMICOLON) and \
                not self._current_token_is(TokenType.RBRACE):
            self._next_token()

    def _parse_declaration(self) -> Optional[mast.Node]:
        type_ = self._current_token.type_
        if type_ == TokenType.EXTERN:
            return self._parse_extern()
        if type_ == TokenType.CONST:
            token = self._current_token
            if not self._expect_peek(TokenType.INT_TYPE):
                return None
            return self._parse_global(token, True)
        if type_ in TYPE_TOKENS:
            token = self._current_token
            if not self._expect_peek(TokenType.IDENT):
                return None
            if self._peek_token_is(TokenType.LPAREN):
                return self._parse_function(token)
            if type_ != TokenType.INT_TYPE:
                self._error(f"global {self._current_token.literal} must have type int", token)
                return None
            return self._parse_global_rest(token, False)
        self._error(f"expected a declaration. Got {type_.value} instead", self._current_token)
        return None

    def _parse_global(self, token: Token, const: bool) -> Optional[mast.GlobalDecl]:
        if not self._expect_peek(TokenType.IDENT):
            return None
        return self._parse_global_rest(token, const)

    def _parse_global_rest(self, token: Token, const: bool) -> Optional[mast.GlobalDecl]:
        name = self._current_token.literal
        size: Optional[int] = None
        if self._peek_token_is(TokenType.LBRACKET):
            self._next_token()
            if not self._expect_peek(TokenType.INT):
                return None
            size = int(self._current_token.literal)
            if size <= 0:
                self._error(f"array {name} must have a positive size", self._current_token)
                return None
            if not self._expect_peek(TokenType.RBRACKET):
                return None
        init: List[int] = []
        if self._peek_token_is(TokenType.ASSIGN):
            self._next_token()
            self._next_token()
            values = self._parse_initializer(size is not None)
            if values is None:
                return None
            init = values
        if size is not None and len(init) > size:
            self._error(f"too many initializers for {name}", token)
            return None
        if not self._expect_peek(TokenType.SEMICOLON):
            return None
        return mast.GlobalDecl(token, name, const, size, init)

    def _parse_initializer(self, array: bool) -> Optional[List[int]]:
        if not array:
            value = self._parse_signed_int()
            return [value] if value is not None else None
        if not self._current_token_is(TokenType.LBRACE):
            self._error("array initializer must start with {", self._current_token)
            return None
        values: List[int] = []
        while True:
            self._next_token()
            value = self._parse_signed_int()
            if value is None:
                return None
            values.append(value)
            if self._peek_token_is(TokenType.COMMA):
                self._next_token()
                continue
            if not self._expect_peek(TokenType.RBRACE):
                return None
            return values

    def _parse_signed_int(self) -> Optional[int]:
        sign = 1
        if self._current_token_is(TokenType.MINUS):
            sign = -1
            self._next_token()
        if not self._current_token_is(TokenType.INT):
            self._error(f"expected an integer. Got {self._current_token.type_.value} instead",
                        self._current_token)
            return None
        return sign * int(self._current_token.literal)

    def _parse_type(self, allow_void: bool) -> Optional[Typ]:
        typ = TYPE_TOKENS.get(self._current_token.type_)
        if typ is None or (typ == Typ.VOID and not allow_void):
            self._error(f"expected a type. Got {self._current_token.literal!r} instead",
                        self._current_token)
            return None
        return typ

    def _parse_extern(self) -> Optional[mast.ExternDecl]:
        token = self._current_token
        self._next_token()
        result = self._parse_type(True)
        if result is None:
            return None
        if not self._expect_peek(TokenType.IDENT):
            return None
        name = self._current_token.literal
        if not self._expect_peek(TokenType.LPAREN):
            return None
        params: List[Typ] = []
        if self._peek_token_is(TokenType.RPAREN):
            self._next_token()
        else:
            while True:
                self._next_token()
                typ = self._parse_type(False)
                if typ is None:
                    return None
                params.append(typ)
                if self._peek_token_is(TokenType.COMMA):
                    self._next_token()
                    continue
                if not self._expect_peek(TokenType.RPAREN):
                    return None
                break
        if not self._expect_peek(TokenType.SEMICOLON):
            return None
        return mast.ExternDecl(token, name, Signature(tuple(params), result))

    def _parse_var_decl(self) -> Optional[mast.VarDecl]:
        token = self._current_token
        register = False
        if self._current_token_is(TokenType.REGISTER):
            register = True
            self._next_token()
        typ = self._parse_type(False)
        if typ is None:
            return None
        if not self._expect_peek(TokenType.IDENT):
            return None
        return mast.VarDecl(token, self._current_token.literal, typ, register)

    def _parse_function(self, token: Token) -> Optional[mast.FunctionDecl]:
        result = TYPE_TOKENS[token.type_]
        name = self._current_token.literal
        self._next_token()
        params: List[mast.VarDecl] = []
        if self._peek_token_is(TokenType.RPAREN):
            self._next_token()
        else:
            while True:
                self._next_token()
                param = self._parse_var_decl()
                if param is None:
                    return None
                params.append(param)
                if self._peek_token_is(TokenType.COMMA):
                    self._next_token()
                    continue
                if not self._expect_peek(TokenType.RPAREN):
                    return None
                break
        if not self._expect_peek(TokenType.LBRACE):
            return None
        self._next_token()

        # Locals come first, C89 style.
        locals_: List[mast.VarDecl] = []
        while self._current_token.type_ in (TokenType.REGISTER, TokenType.INT_TYPE, TokenType.PTR_TYPE):
            local = self._parse_var_decl()
            if local is None:
                return None
            if not self._expect_peek(TokenType.SEMICOLON):
                return None
            locals_.append(local)
            self._next_token()
        body = self._parse_statements(self._current_token)
        if body is None:
            return None
        return mast.FunctionDecl(token, name, result, params, locals_, body)

    def _parse_statements(self, token: Token) -> Optional[mast.BlockStatement]:
        # Expects _current_token at the first statement; stops on the
        # closing brace.
        statements: List[mast.Statement] = []
        while not self._current_token_is(TokenType.RBRACE):
            if self._current_token_is(TokenType.EOF):
                self._error("unterminated block", token)
                return None
            stmt = self._parse_statement()
            if stmt is not None:
                statements.append(stmt)
            else:
                self._synchronize()
                if self._current_token_is(TokenType.RBRACE):
                    break
            self._next_token()
        return mast.BlockStatement(token, statements)

    def _parse_block_statement(self) -> Optional[mast.BlockStatement]:
        token = self._current_token
        self._next_token()
        return self._parse_statements(token)

    def _parse_statement(self) -> Optional[mast.Statement]:
        type_ = self._current_token.type_
        if type_ == TokenType.IF:
            return self._parse_if_statement()
        if type_ == TokenType.WHILE:
            return self._parse_while_statement()
        if type_ == TokenType.RETURN:
            return self._parse_return_statement()
        if type_ == TokenType.ASTERISK:
            return self._parse_store_statement()
        if type_ == TokenType.IDENT:
            if self._peek_token_is(TokenType.ASSIGN):
                return self._parse_assign_statement()
            if self._peek_token_is(TokenType.LBRACKET):
                return self._parse_index_assign_statement()
            if self._peek_token_is(TokenType.LPAREN):
                return self._parse_call_statement(None)
        self._error(f"expected a statement. Got {self._current_token.literal!r} instead",
                    self._current_token)
        return None

    def _parse_assign_statement(self) -> Optional[mast.Statement]:
        token = self._current_token
        name = mast.Identifier(token, token.literal)
        self._next_token()
        self._next_token()

        # Either "x = e;" or "x = f(a);"; only the parsed expression tells.
        value = self._parse_expression(PrecedenceLevel.LOWEST)
        if value is None:
            return None
        if isinstance(value, mast.CallExpression):
            if not self._check_no_calls(value.children()):
                return None
            if not self._expect_peek(TokenType.SEMICOLON):
                return None
            return mast.CallStatement(token, name, value)
        if not self._check_no_calls([value]):
            return None
        if not self._expect_peek(TokenType.SEMICOLON):
            return None
        return mast.AssignStatement(token, name, value)

    def _parse_index_assign_statement(self) -> Optional[mast.IndexAssignStatement]:
        token = self._current_token
        array = mast.Identifier(token, token.literal)
        self._next_token()
        self._next_token()
        index = self._parse_expression(PrecedenceLevel.LOWEST)
        if index is None:
            return None
        if not self._expect_peek(TokenType.RBRACKET):
            return None
        if not self._expect_peek(TokenType.ASSIGN):
            return None
        self._next_token()
        value = self._parse_expression(PrecedenceLevel.LOWEST)
        if value is None or not self._check_no_calls([index, value]):
            return None
        if not self._expect_peek(TokenType.SEMICOLON):
            return None
        return mast.IndexAssignStatement(token, array, index, value)

    def _parse_store_statement(self) -> Optional[mast.StoreStatement]:
        token = self._current_token
        self._next_token()

        # Prefix precedence makes "*p = e" store through p itself.
        address = self._parse_expression(PrecedenceLevel.PREFIX)
        if address is None:
            return None
        if not self._expect_peek(TokenType.ASSIGN):
            return None
        self._next_token()
        value = self._parse_expression(PrecedenceLevel.LOWEST)
        if value is None or not self._check_no_calls([address, value]):
            return None
        if not self._expect_peek(TokenType.SEMICOLON):
            return None
        return mast.StoreStatement(token, address, value)

    def _parse_call_statement(self, dest: Optional[mast.Identifier]) -> Optional[mast.CallStatement]:
        token = self._current_token
        call = self._parse_expression(PrecedenceLevel.LOWEST)
        if call is None:
            return None
        if not isinstance(call, mast.CallExpression):
            self._error("expected a call", token)
            return None
        if not self._check_no_calls(call.children()):
            return None
        if not self._expect_peek(TokenType.SEMICOLON):
            return None
        return mast.CallStatement(token, dest, call)

    def _parse_if_statement(self) -> Optional[mast.IfStatement]:
        token = self._current_token
        if not self._expect_peek(TokenType.LPAREN):
            return None
        self._next_token()
        condition = self._parse_expression(PrecedenceLevel.LOWEST)
        if condition is None or not self._check_no_calls([condition]):
            return None
        if not self._expect_peek(TokenType.RPAREN):
            return None
        if not self._expect_peek(TokenType.LBRACE):
            return None
        consequence = self._parse_block_statement()
        if consequence is None:
            return None
        alternative = None
        if self._peek_token_is(TokenType.ELSE):
            self._next_token()
            if not self._expect_peek(TokenType.LBRACE):
                return None
            alternative = self._parse_block_statement()
            if alternative is None:
                return None
        return mast.IfStatement(token, condition, consequence, alternative)

    def _parse_while_statement(self) -> Optional[mast.WhileStatement]:
        token = self._current_token
        if not self._expect_peek(TokenType.LPAREN):
            return None
        self._next_token()
        condition = self._parse_expression(PrecedenceLevel.LOWEST)
        if condition is None or not self._check_no_calls([condition]):
            return None
        if not self._expect_peek(TokenType.RPAREN):
            return None
        if not self._expect_peek(TokenType.LBRACE):
            return None
        body = self._parse_block_statement()
        if body is None:
            return None
        return mast.WhileStatement(token, condition, body)

    def _parse_return_statement(self) -> Optional[mast.ReturnStatement]:
        token = self._current_token
        if self._peek_token_is(TokenType.SEMICOLON):
            self._next_token()
            return mast.ReturnStatement(token, None)
        self._next_token()
        return_value = self._parse_expression(PrecedenceLevel.LOWEST)
        if return_value is None or not self._check_no_calls([return_value]):
            return None
        if not self._expect_peek(TokenType.SEMICOLON):
            return None
        return mast.ReturnStatement(token, return_value)

    def _check_no_calls(self, exprs: List[mast.Expression]) -> bool:
        # MiniC calls are statements: "x = f(a);" but never "x = f(a) + 1;".
        for expr in exprs:
            for sub in mast.walk_expressions(expr):
                if isinstance(sub, mast.CallExpression):
                    self._error("calls are only allowed as statements", sub.token)
                    return False
        return True

    def _parse_expression(self, precedence: PrecedenceLevel) -> Optional[mast.Expression]:
        type_ = self._current_token.type_
        if not type_ in self._prefix_parse_fns:
            self._no_prefix_parse_fn_error(self._current_token)
            return None
        left_expr = self._prefix_parse_fns[type_]()
        if left_expr is None:
            return None

        # precedence.value is what Pratt calls right-binding
        # power and _peek_precedence is left-binding power.
        # For as long as left-binding power > right-binding power, add another
        # level to the abstract syntax tree, signifying operations which need
        # to be carried out first when the expression is evaluated.
        while not self._peek_token_is(TokenType.SEMICOLON) \
              and precedence.value < self._peek_precedence().value:
            peek = self._peek_token.type_
            if not peek in self._infix_parse_fns:
                return left_expr
            self._next_token()
            left_expr = self._infix_parse_fns[peek](left_expr)
            if left_expr is None:
                return None
        return left_expr

    def _parse_identifier(self) -> Optional[mast.Identifier]:
        return mast.Identifier(self._current_token, self._current_token.literal)

    def _parse_integer_literal(self) -> Optional[mast.IntegerLiteral]:
        token = self._current_token
        try:
            value = int(token.literal)
        except ValueError:
            self._error(f"could not parse {token.literal} as integer", token)
            return None
        return mast.IntegerLiteral(token, value)

    def _parse_negation(self) -> Optional[mast.Expression]:
        token = self._current_token

        # A minus directly in front of a number is part of the literal, so
        # that printing a negative constant and parsing it back agree.
        if self._peek_token_is(TokenType.INT):
            self._next_token()
            literal = self._parse_integer_literal()
            if literal is None:
                return None
            return mast.IntegerLiteral(token, -literal.value)
        self._next_token()
        right = self._parse_expression(PrecedenceLevel.PREFIX)
        if right is None:
            return None
        zero = mast.IntegerLiteral(mast.synthetic(TokenType.INT, "0"), 0)
        return mast.InfixExpression(token, zero, "-", right)

    def _parse_addr_of(self) -> Optional[mast.AddrOf]:
        token = self._current_token
        if not self._expect_peek(TokenType.IDENT):
            return None
        return mast.AddrOf(token, mast.Identifier(self._current_token, self._current_token.literal))

    def _parse_deref(self) -> Optional[mast.Deref]:
        token = self._current_token
        self._next_token()
        operand = self._parse_expression(PrecedenceLevel.PREFIX)
        if operand is None:
            return None
        return mast.Deref(token, operand)

    def _parse_group_expression(self) -> Optional[mast.Expression]:
        self._next_token()
        expr = self._parse_expression(PrecedenceLevel.LOWEST)
        if expr is None or not self._expect_peek(TokenType.RPAREN):
            return None
        return expr

    def _parse_expression_list(self, end: TokenType) -> Optional[List[mast.Expression]]:
        list_: List[mast.Expression] = []
        if self._peek_token_is(end):
            self._next_token()
            return list_
        self._next_token()
        expr = self._parse_expression(PrecedenceLevel.LOWEST)
        if expr is None:
            return None
        list_.append(expr)
        while self._peek_token_is(TokenType.COMMA):
            self._next_token()
            self._next_token()
            expr = self._parse_expression(PrecedenceLevel.LOWEST)
            if expr is None:
                return None
            list_.append(expr)
        if not self._expect_peek(end):
            return None
        return list_

    def _parse_call_expression(self, function: mast.Expression) -> Optional[mast.CallExpression]:
        token = self._current_token
        arguments = self._parse_expression_list(TokenType.RPAREN)
        if arguments is None:
            return None
        return mast.CallExpression(token, function, arguments)

    def _parse_index_expression(self, left: mast.Expression) -> Optional[mast.IndexExpression]:
        token = self._current_token
        if not isinstance(left, mast.Identifier):
            self._error("only named global arrays can be indexed", token)
            return None
        self._next_token()
        index = self._parse_expression(PrecedenceLevel.LOWEST)
        if index is None:
            return None
        if not self._expect_peek(TokenType.RBRACKET):
            return None
        return mast.IndexExpression(token, left, index)

    def _parse_infix_expression(self, left: mast.Expression) -> Optional[mast.InfixExpression]:
        token = self._current_token
        precedence = self._current_precedence()
        self._next_token()
        right = self._parse_expression(precedence)
        if right is None:
            return None
        return mast.InfixExpression(token, left, token.literal, right)

    def _check_names(self, program: mast.Program) -> None:
        """Every referenced symbol resolves locally or is declared extern."""
        globals_ = {g.name: g for g in program.globals()}
        functions: Dict[str, Signature] = {}
        seen: Set[str] = set()
        for decl in program.declarations:
            if isinstance(decl, mast.ExternDecl):
                previous = functions.get(decl.name)
                if previous is not None and previous != decl.sg:
                    self._error(f"conflicting declarations of {decl.name}", decl.token)
                functions[decl.name] = decl.sg
                continue
            name = decl.name  # type: ignore
            if name in seen:
                self._error(f"{name} is defined twice", decl.token)  # type: ignore
            seen.add(name)
            if isinstance(decl, mast.FunctionDecl):
                previous = functions.get(name)
                if previous is not None and previous != decl.sg:
                    self._error(f"{name} does not match its extern declaration", decl.token)
                functions[name] = decl.sg
        for name in set(globals_) & set(functions):
            self._error(f"{name} is both a variable and a function", globals_[name].token)
        for fn in program.functions():
            self._check_function(fn, globals_, functions)

    def _check_function(self, fn: mast.FunctionDecl, globals_: Dict[str, mast.GlobalDecl],
                        functions: Dict[str, Signature]) -> None:
        variables: Dict[str, mast.VarDecl] = {}
        for var in fn.variables():
            if var.name in variables:
                self._error(f"{var.name} is declared twice in {fn.name}", var.token)
            variables[var.name] = var

        def assignable(ident: mast.Identifier) -> None:
            g = globals_.get(ident.value)
            if ident.value in variables:
                return
            if g is None and ident.value not in functions:
                self._error(f"{ident.value} is not declared", ident.token)
            elif g is None or g.size is not None:
                self._error(f"cannot assign to {ident.value}", ident.token)
            elif g.const:
                self._error(f"cannot assign to constant {ident.value}", ident.token)

        def check(expr: mast.Expression) -> None:
            for sub in mast.walk_expressions(expr):
                if isinstance(sub, mast.Identifier):
                    if sub.value not in variables and sub.value not in globals_ \
                            and sub.value not in functions:
                        self._error(f"{sub.value} is not declared", sub.token)
                elif isinstance(sub, mast.AddrOf):
                    var = variables.get(sub.name.value)
                    if var is not None and var.register:
                        self._error(f"cannot take the address of register variable {var.name}",
                                    sub.token)
                    elif var is None and sub.name.value not in globals_:
                        self._error(f"cannot take the address of {sub.name.value}", sub.token)
                elif isinstance(sub, mast.IndexExpression):
                    g = globals_.get(sub.array.value)
                    if sub.array.value in variables or g is None or g.size is None:
                        self._error(f"{sub.array.value} is not a global array", sub.token)

        for stmt in mast.walk_statements(fn.body):
            for expr in stmt.expressions():
                check(expr)
            if isinstance(stmt, mast.AssignStatement):
                assignable(stmt.name)
            elif isinstance(stmt, mast.CallStatement) and stmt.dest is not None:
                assignable(stmt.dest)
            elif isinstance(stmt, mast.IndexAssignStatement):
                g = globals_.get(stmt.array.value)
                if stmt.array.value in variables or g is None or g.size is None:
                    self._error(f"{stmt.array.value} is not a global array", stmt.token)
                elif g.const:
                    self._error(f"cannot assign to constant {stmt.array.value}", stmt.token)

    def _current_token_is(self, type_: TokenType) -> bool:
        if self._current_token is None:
            return False
        return self._current_token.type_ == type_

    def _peek_token_is(self, type_: TokenType) -> bool:
        if self._peek_token is None:
            return False
        return self._peek_token.type_ == type_

    def _expect_peek(self, type_: TokenType) -> bool:
        if self._peek_token_is(type_):
            self._next_token()
            return True
        self._peek_error(type_)
        return False

    def _error(self, message: str, token: Token) -> None:
        self.errors.append(message)
        self.positions.append((token.line, token.column))

    def _peek_error(self, type_: TokenType) -> None:
        assert self._peek_token is not None
        message = f"expected next token to be {type_.value}. " + \
                  f"Got {self._peek_token.type_.value} instead"
        self._error(message, self._peek_token)

    def _no_prefix_parse_fn_error(self, token: Token) -> None:
        message = f"no prefix parse function for {token.type_.value} found"
        self._error(message, token)

    def _peek_precedence(self) -> PrecedenceLevel:
        assert self._peek_token is not None
        type_ = self._peek_token.type_

        # Returning LOWEST when precedence level could not be determined enables
        # us to parse grouped expression. The RParen token doesn't have an
        # associated precedence, and returning LOWEST is what causes the parser
        # to finish evaluating a subexpression as a whole.
        if type_ in Precedence:
            return Precedence[type_]
        return PrecedenceLevel.LOWEST

    def _current_precedence(self) -> PrecedenceLevel:
        type_ = self._current_token.type_
        if type_ in Precedence:
            return Precedence[type_]
        return PrecedenceLevel.LOWEST


def parse_minic(source: str) -> mast.Program:
    parser = Parser(Lexer(source))
    program = parser.parse_program()
    if parser.errors:
        line, column = parser.positions[0]
        raise ParseError(parser.errors[0], line, column)
    return program
