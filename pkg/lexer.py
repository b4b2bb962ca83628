from enum import Enum, unique
from typing import Dict, Optional


@unique
class TokenType(Enum):
    ILLEGAL = "ILLEGAL"  # Unknown token/character
    EOF = "EOF"          # End of File stops parsing

    # Identifiers and literals
    IDENT = "IDENT"      # request, memoized, i
    INT = "INT"          # 42

    # Operators
    ASSIGN = "="
    PLUS = "+"
    MINUS = "-"
    CARET = "^"
    AMPERSAND = "&"      # Address-of only; MiniC has no bitwise and
    ASTERISK = "*"       # Dereference only; MiniC has no multiplication
    LT = "<"
    EQ = "=="

    # Delimiters
    COMMA = ","
    SEMICOLON = ";"
    LPAREN = "("
    RPAREN = ")"
    LBRACE = "{"
    RBRACE = "}"
    LBRACKET = "["
    RBRACKET = "]"

    # Keywords
    INT_TYPE = "INT_TYPE"
    PTR_TYPE = "PTR_TYPE"
    VOID_TYPE = "VOID_TYPE"
    CONST = "CONST"
    REGISTER = "REGISTER"
    EXTERN = "EXTERN"
    IF = "IF"
    ELSE = "ELSE"
    WHILE = "WHILE"
    RETURN = "RETURN"


class Token:
    def __init__(self, type_: TokenType, literal: str, line: int = 0, column: int = 0) -> None:
        self.type_ = type_
        self.literal = literal
        self.line = line
        self.column = column


class Lexer:
    def __init__(self, source: str) -> None:
        self._source = source
        self._position = 0       # Where last character was read
        self._read_position = 0  # Where next character is read
        self._char: str = ""     # Character under examination
        self._line = 1
        self._column = 0
        self._read_char()

    def next_token(self) -> Token:
        self._skip_whitespace_and_comments()
        line, column = self._line, self._column

        if self._char == "=":
            if self._peek_char() == "=":
                char = self._char
                self._read_char()
                tok = Token(TokenType.EQ, char + self._char, line, column)
            else:
                tok = Token(TokenType.ASSIGN, self._char, line, column)
        elif self._char == "+":
            tok = Token(TokenType.PLUS, self._char, line, column)
        elif self._char == "-":
            tok = Token(TokenType.MINUS, self._char, line, column)
        elif self._char == "^":
            tok = Token(TokenType.CARET, self._char, line, column)
        elif self._char == "&":
            tok = Token(TokenType.AMPERSAND, self._char, line, column)
        elif self._char == "*":
            tok = Token(TokenType.ASTERISK, self._char, line, column)
        elif self._char == "<":
            tok = Token(TokenType.LT, self._char, line, column)
        elif self._char == ",":
            tok = Token(TokenType.COMMA, self._char, line, column)
        elif self._char == ";":
            tok = Token(TokenType.SEMICOLON, self._char, line, column)
        elif self._char == "(":
            tok = Token(TokenType.LPAREN, self._char, line, column)
        elif self._char == ")":
            tok = Token(TokenType.RPAREN, self._char, line, column)
        elif self._char == "{":
            tok = Token(TokenType.LBRACE, self._char, line, column)
        elif self._char == "}":
            tok = Token(TokenType.RBRACE, self._char, line, column)
        elif self._char == "[":
            tok = Token(TokenType.LBRACKET, self._char, line, column)
        elif self._char == "]":
            tok = Token(TokenType.RBRACKET, self._char, line, column)
        elif self._char == "\0":
            tok = Token(TokenType.EOF, "", line, column)
        else:
            if self._is_letter(self._char):
                literal = self._read_identifier()
                type_ = Lexer._lookup_ident(literal)
                return Token(type_, literal, line, column)
            if self._is_digit(self._char):
                literal = self._read_number()
                return Token(TokenType.INT, literal, line, column)
            tok = Token(TokenType.ILLEGAL, self._char, line, column)

        self._read_char()
        return tok

    def _skip_whitespace_and_comments(self) -> None:
        while True:
            while self._char in (' ', '\t', '\n', '\r'):
                self._read_char()

            # Comments run from // to the end of the line.
            if self._char == "/" and self._peek_char() == "/":
                while self._char not in ("\n", "\0"):
                    self._read_char()
                continue
            return

    def _read_char(self) -> None:
        if self._char == "\n":
            self._line += 1
            self._column = 0
        if self._read_position >= len(self._source):
            self._char = "\0"
        else:
            self._char = self._source[self._read_position]

        self._position = self._read_position
        self._read_position += 1
        self._column += 1

    def _read_number(self) -> str:
        position = self._position
        while self._is_digit(self._char):
            self._read_char()
        return self._source[position:self._position]

    def _read_identifier(self) -> str:
        position = self._position

        # Digits may follow the first letter: input0, s1.
        while self._is_letter(self._char) or self._is_digit(self._char):
            self._read_char()
        return self._source[position:self._position]

    def _is_letter(self, char: str) -> bool:
        return "a" <= char <= "z" or "A" <= char <= "Z" or char == "_"

    def _is_digit(self, char: str) -> bool:
        return "0" <= char <= "9"

    def _peek_char(self) -> Optional[str]:
        if self._read_position >= len(self._source):
            return None
        return self._source[self._read_position]

    keywords: Dict[str, TokenType] = {
        "int": TokenType.INT_TYPE,
        "ptr": TokenType.PTR_TYPE,
        "void": TokenType.VOID_TYPE,
        "const": TokenType.CONST,
        "register": TokenType.REGISTER,
        "extern": TokenType.EXTERN,
        "if": TokenType.IF,
        "else": TokenType.ELSE,
        "while": TokenType.WHILE,
        "return": TokenType.RETURN
    }

    @staticmethod
    def _lookup_ident(ident: str) -> TokenType:
        if ident in Lexer.keywords:
            return Lexer.keywords[ident]
        return TokenType.IDENT
