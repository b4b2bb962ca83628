from typing import cast
from collections import namedtuple
import unittest
import mast
from errors import ParseError
from mparser import Parser, parse_minic
from lexer import Lexer
from library import PROGRAMS_DIR, load_minic
from sem import Signature, Typ


class ParserTests(unittest.TestCase):
    def _setup_program(self, source: str) -> mast.Program:
        lexer = Lexer(source)
        parser = Parser(lexer)
        program = parser.parse_program()
        self._check_parser_errors(parser)
        return program

    def _check_parser_errors(self, parser: Parser) -> None:
        if len(parser.errors) == 0:
            return
        for message in parser.errors:
            print(message)
        self.fail("See stdout")

    def _body(self, statements: str, decls: str = "") -> mast.BlockStatement:
        # Wraps statements in a function with a few variables in scope.
        source = f"""int g;
                     int a[4];
                     extern int h(int);
                     {decls}
                     int f(int x, ptr p) {{
                       int y;
                       {statements}
                     }}"""
        program = self._setup_program(source)
        fn = program.function("f")
        assert fn is not None
        return fn.body

    def test_global_declarations(self) -> None:
        Case = namedtuple("Case", ["source", "name", "const", "size", "init"])
        tests = [
            Case("int x;", "x", False, None, []),
            Case("int x = 5;", "x", False, None, [5]),
            Case("int x = -5;", "x", False, None, [-5]),
            Case("const int key = 42;", "key", True, None, [42]),
            Case("int a[3];", "a", False, 3, []),
            Case("int a[3] = {1, -2};", "a", False, 3, [1, -2])]

        for test in tests:
            program = self._setup_program(test.source)
            self.assertEqual(len(program.declarations), 1)
            decl = cast(mast.GlobalDecl, program.declarations[0])
            self.assertIsInstance(decl, mast.GlobalDecl)
            self.assertEqual(decl.name, test.name)
            self.assertEqual(decl.const, test.const)
            self.assertEqual(decl.size, test.size)
            self.assertEqual(decl.init, test.init)

    def test_extern_declarations(self) -> None:
        Case = namedtuple("Case", ["source", "expected_signature"])
        tests = [
            Case("extern void encrypt(int, ptr);",
                 Signature((Typ.INT, Typ.PTR), Typ.VOID)),
            Case("extern int g(int);", Signature((Typ.INT,), Typ.INT)),
            Case("extern ptr next();", Signature((), Typ.PTR))]

        for test in tests:
            program = self._setup_program(test.source)
            decl = cast(mast.ExternDecl, program.declarations[0])
            self.assertIsInstance(decl, mast.ExternDecl)
            self.assertEqual(decl.sg, test.expected_signature)

    def test_function_declaration(self) -> None:
        source = """int f(register int i, ptr r) {
                      int sum;
                      register ptr q;
                      return i;
                    }"""
        program = self._setup_program(source)
        fn = cast(mast.FunctionDecl, program.declarations[0])
        self.assertIsInstance(fn, mast.FunctionDecl)
        self.assertEqual(fn.name, "f")
        self.assertEqual(fn.sg, Signature((Typ.INT, Typ.PTR), Typ.INT))
        self.assertEqual([p.name for p in fn.params], ["i", "r"])
        self.assertTrue(fn.params[0].register)
        self.assertFalse(fn.params[1].register)
        self.assertEqual([v.name for v in fn.locals], ["sum", "q"])
        self.assertEqual(fn.locals[1].type_, Typ.PTR)
        self.assertEqual(len(fn.body.statements), 1)
        self.assertIsInstance(fn.body.statements[0], mast.ReturnStatement)

    def test_operator_precedence_parsing(self) -> None:
        Case = namedtuple("Case", ["source", "expected"])
        tests = [
            Case("y = x + 1 - 2;", "y = ((x + 1) - 2);"),
            Case("y = x ^ g + 1;", "y = (x ^ (g + 1));"),
            Case("y = x == 1 ^ g;", "y = ((x == 1) ^ g);"),
            Case("y = x < 1 == 0;", "y = ((x < 1) == 0);"),
            Case("y = x + (g ^ 1);", "y = (x + (g ^ 1));"),
            Case("y = *p + 1;", "y = (*p + 1);"),
            Case("y = a[x - 1] + a[0];", "y = (a[(x - 1)] + a[0]);"),
            Case("y = -x;", "y = (0 - x);"),
            Case("y = -3 + x;", "y = (-3 + x);"),
            Case("y = x - -3;", "y = (x - -3);"),
            Case("p = &y;", "p = &y;"),
            Case("p = &g;", "p = &g;"),
            Case("p = h;", "p = h;")]

        for test in tests:
            body = self._body(test.source)
            self.assertEqual(body.string(), test.expected)

    def test_statements(self) -> None:
        Case = namedtuple("Case", ["source", "expected_type", "expected"])
        tests = [
            Case("*p = x;", mast.StoreStatement, "*p = x;"),
            Case("a[x] = 3;", mast.IndexAssignStatement, "a[x] = 3;"),
            Case("g = x;", mast.AssignStatement, "g = x;"),
            Case("y = h(x + 1);", mast.CallStatement, "y = h((x + 1));"),
            Case("h(x);", mast.CallStatement, "h(x);"),
            Case("p(x);", mast.CallStatement, "p(x);"),
            Case("return;", mast.ReturnStatement, "return;"),
            Case("return x;", mast.ReturnStatement, "return x;")]

        for test in tests:
            body = self._body(test.source)
            self.assertEqual(len(body.statements), 1)
            self.assertIsInstance(body.statements[0], test.expected_type)
            self.assertEqual(body.string(), test.expected)

    def test_call_statement_destination(self) -> None:
        body = self._body("y = h(x);")
        stmt = cast(mast.CallStatement, body.statements[0])
        self.assertIsInstance(stmt, mast.CallStatement)
        assert stmt.dest is not None
        self.assertEqual(stmt.dest.value, "y")
        self.assertEqual(stmt.call.function.string(), "h")
        self.assertEqual(len(stmt.call.arguments), 1)

    def test_if_statement(self) -> None:
        body = self._body("if (x == 0) { y = 1; } else { y = 2; g = y; }")
        stmt = cast(mast.IfStatement, body.statements[0])
        self.assertIsInstance(stmt, mast.IfStatement)
        self.assertEqual(stmt.condition.string(), "(x == 0)")
        self.assertEqual(len(stmt.consequence.statements), 1)
        assert stmt.alternative is not None
        self.assertEqual(len(stmt.alternative.statements), 2)

    def test_if_without_else_and_while(self) -> None:
        body = self._body("if (x) { } while (x < 3) { x = x + 1; }")
        self.assertEqual(len(body.statements), 2)
        if_stmt = cast(mast.IfStatement, body.statements[0])
        self.assertIsNone(if_stmt.alternative)
        self.assertEqual(len(if_stmt.consequence.statements), 0)
        while_stmt = cast(mast.WhileStatement, body.statements[1])
        self.assertIsInstance(while_stmt, mast.WhileStatement)
        self.assertEqual(while_stmt.string(), "while (x < 3) {\n  x = (x + 1);\n}")

    def test_parse_errors(self) -> None:
        Case = namedtuple("Case", ["source", "expected_message"])
        tests = [
            Case("int f() { y = 1; }", "y is not declared"),
            Case("int f() { int y; y = h(1) + 1; }", "calls are only allowed as statements"),
            Case("int f() { int y; if (h(y)) { } }", "calls are only allowed as statements"),
            Case("const int k = 1; void f() { k = 2; }", "cannot assign to constant k"),
            Case("int f(register int x) { ptr p; p = &x; }",
                 "cannot take the address of register variable x"),
            Case("int f(int x) { int y; y = x[0]; }", "x is not a global array"),
            Case("int g; int g;", "g is defined twice"),
            Case("extern int f(int); void f(int x) { }",
                 "f does not match its extern declaration"),
            Case("int f() { return 1 }", "expected next token to be ;. Got } instead"),
            Case("int a[2] = {1, 2, 3};", "too many initializers for a"),
            Case("ptr x;", "global x must have type int"),
            Case("return 1;", "expected a declaration. Got RETURN instead")]

        for test in tests:
            parser = Parser(Lexer(test.source))
            parser.parse_program()
            self.assertIn(test.expected_message, parser.errors)

    def test_parse_minic_raises_with_position(self) -> None:
        with self.assertRaises(ParseError) as ctx:
            parse_minic("int f() {\n  y = 1;\n}")
        self.assertEqual(ctx.exception.line, 2)
        self.assertEqual(ctx.exception.column, 3)

    def test_print_then_parse(self) -> None:
        source = """int result;
                    extern void encrypt(int, ptr);
                    void process(ptr r) {
                      result = *r;
                    }
                    int request(int i) {
                      encrypt(i, process);
                      return i;
                    }"""
        program = parse_minic(source)
        printed = program.string()
        self.assertEqual(parse_minic(printed).string(), printed)
        self.assertIn("void process(ptr r) {\n  result = *r;\n}", printed)
        for path in sorted(PROGRAMS_DIR.glob("*.mc")):
            printed = load_minic(path.name).string()
            self.assertEqual(parse_minic(printed).string(), printed, path.name)
