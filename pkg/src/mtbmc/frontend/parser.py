"""Lexer and recursive-descent parser for MTC source text."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional

from . import ast as A


class MtcSyntaxError(Exception):
    def __init__(self, message: str, loc: A.Loc, expected: Iterable[str] = ()):
        self.loc = loc
        self.expected = tuple(sorted(set(expected)))
        detail = f"{loc}: {message}"
        if self.expected:
            detail += f" (expected one of: {', '.join(self.expected)})"
        super().__init__(detail)

    @property
    def line(self) -> int:
        return self.loc.line

    @property
    def col(self) -> int:
        return self.loc.col


@dataclass(frozen=True)
class SourceProgram:
    text: str
    origin: str = "<inline>"

    @classmethod
    def from_file(cls, path) -> "SourceProgram":
        with open(path, encoding="utf-8") as fh:
            return cls(fh.read(), str(path))


KEYWORDS = {
    "int",
    "bool",
    "mutex",
    "cond",
    "thread_t",
    "thread",
    "main",
    "if",
    "else",
    "while",
    "atomic",
    "true",
    "false",
}

TYPE_KEYWORDS = ("int", "bool", "mutex", "cond", "thread_t")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<lcomment>//[^\n]*)
  | (?P<bcomment>/\*.*?\*/)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><<|>>|<=|>=|==|!=|&&|\|\||[-+*/%<>=!&|^~(){}\[\];,])
    """,
    re.VERBOSE | re.DOTALL,
)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "kw", "op", "eof"
    text: str
    loc: A.Loc


def tokenize(src: SourceProgram) -> list[Token]:
    text = src.text
    tokens: list[Token] = []
    pos = 0
    line = 1
    line_start = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        loc = A.Loc(pos, line, pos - line_start + 1, src.origin)
        if m is None:
            raise MtcSyntaxError(f"unexpected character {text[pos]!r}", loc)
        kind = m.lastgroup
        lexeme = m.group()
        if kind == "num":
            tokens.append(Token("num", lexeme, loc))
        elif kind == "ident":
            tokens.append(Token("kw" if lexeme in KEYWORDS else "ident", lexeme, loc))
        elif kind == "op":
            tokens.append(Token("op", lexeme, loc))
        newlines = lexeme.count("\n")
        if newlines:
            line += newlines
            line_start = pos + lexeme.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", A.Loc(pos, line, pos - line_start + 1, src.origin)))
    return tokens


# binary operator precedence, lowest first (C ordering)
_BINARY_LEVELS: list[tuple[str, ...]] = [
    ("||",),
    ("&&",),
    ("|",),
    ("^",),
    ("&",),
    ("==", "!="),
    ("<", "<=", ">", ">="),
    ("<<", ">>"),
    ("+", "-"),
    ("*", "/", "%"),
]


class Parser:
    def __init__(self, src: SourceProgram):
        self.src = src
        self.tokens = tokenize(src)
        self.pos = 0

    # -- token helpers ------------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, offset: int = 1) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def advance(self) -> Token:
        tok = self.tok
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"unexpected {self.describe(self.tok)}", [text])
        return self.advance()

    def expect_ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(f"unexpected {self.describe(self.tok)}", ["identifier"])
        return self.advance()

    def error(self, message: str, expected: Iterable[str] = ()) -> None:
        raise MtcSyntaxError(message, self.tok.loc, expected)

    @staticmethod
    def describe(tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    # -- top level ----------------------------------------------------------

    def parse_program(self) -> A.Program:
        globals_: list[A.GlobalDecl] = []
        threads: list[A.ThreadDef] = []
        main: Optional[A.Block] = None
        while self.tok.kind != "eof":
            if self.tok.kind == "kw" and self.tok.text in TYPE_KEYWORDS:
                if threads or main is not None:
                    self.error("global declarations must precede threads and main")
                globals_.append(self.parse_global())
            elif self.at("thread"):
                if main is not None:
                    self.error("thread definitions must precede main")
                threads.append(self.parse_thread())
            elif self.at("main"):
                if main is not None:
                    self.error("duplicate main block")
                loc = self.advance().loc
                main = self.parse_block()
                main.loc = loc
            else:
                self.error(
                    f"unexpected {self.describe(self.tok)}",
                    list(TYPE_KEYWORDS) + ["thread", "main"],
                )
        if main is None:
            self.error("program has no main block", ["main"])
        return A.Program(globals_, threads, main, origin=self.src.origin)

    def parse_type(self) -> A.MtcType:
        tok = self.tok
        if tok.kind != "kw" or tok.text not in TYPE_KEYWORDS:
            self.error(f"unexpected {self.describe(tok)}", TYPE_KEYWORDS)
        self.advance()
        return A.MtcType(tok.text)

    def parse_array_suffix(self, base: A.MtcType) -> A.MtcType:
        if not self.at("["):
            return base
        self.advance()
        if self.tok.kind != "num":
            self.error(f"unexpected {self.describe(self.tok)}", ["array length"])
        length = int(self.advance().text)
        self.expect("]")
        if base.kind != "int":
            self.error("only int arrays are supported")
        if length < 1:
            self.error("array length must be positive")
        return A.array_of(length)

    def parse_global(self) -> A.GlobalDecl:
        loc = self.tok.loc
        ty = self.parse_type()
        name = self.expect_ident().text
        ty = self.parse_array_suffix(ty)
        init = None
        if self.at("="):
            self.advance()
            init = self.parse_expr()
        self.expect(";")
        return A.GlobalDecl(ty, name, init, loc=loc)

    def parse_thread(self) -> A.ThreadDef:
        loc = self.expect("thread").loc
        name = self.expect_ident().text
        self.expect("(")
        params: list[A.Param] = []
        if not self.at(")"):
            while True:
                ploc = self.tok.loc
                ty = self.parse_type()
                pname = self.expect_ident().text
                params.append(A.Param(ty, pname, loc=ploc))
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        body = self.parse_block()
        return A.ThreadDef(name, params, body, loc=loc)

    # -- statements ---------------------------------------------------------

    def parse_block(self) -> A.Block:
        loc = self.expect("{").loc
        stmts: list[A.Stmt] = []
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.error("unterminated block", ["}"])
            stmts.append(self.parse_stmt())
        self.advance()
        return A.Block(stmts, loc=loc)

    def parse_stmt(self) -> A.Stmt:
        tok = self.tok
        loc = tok.loc
        if tok.kind == "kw":
            if tok.text in TYPE_KEYWORDS:
                ty = self.parse_type()
                name = self.expect_ident().text
                ty = self.parse_array_suffix(ty)
                init = None
                if self.at("="):
                    self.advance()
                    init = self.parse_expr()
                self.expect(";")
                return A.VarDecl(ty, name, init, loc=loc)
            if tok.text == "if":
                self.advance()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                then = self.parse_stmt()
                orelse = None
                if self.at("else"):
                    self.advance()
                    orelse = self.parse_stmt()
                return A.If(cond, then, orelse, loc=loc)
            if tok.text == "while":
                self.advance()
                self.expect("(")
                cond = self.parse_expr()
                self.expect(")")
                body = self.parse_stmt()
                return A.While(cond, body, loc=loc)
            if tok.text == "atomic":
                self.advance()
                body = self.parse_block()
                return A.Atomic(body, loc=loc)
        if self.at("{"):
            return self.parse_block()
        if self.at(";"):
            self.advance()
            return A.Empty(loc=loc)
        if tok.kind == "ident" and self.peek().text == "(" and tok.text in A.INTRINSICS:
            name = self.advance().text
            args = self.parse_args()
            self.expect(";")
            return A.CallStmt(name, args, loc=loc)
        if tok.kind == "ident":
            target = self.parse_lvalue()
            self.expect("=")
            value = self.parse_expr()
            self.expect(";")
            return A.Assign(target, value, loc=loc)
        self.error(
            f"unexpected {self.describe(tok)}",
            ["statement", "identifier", "if", "while", "{", ";"],
        )
        raise AssertionError("unreachable")

    def parse_lvalue(self) -> A.Expr:
        tok = self.expect_ident()
        base = A.Name(tok.text, loc=tok.loc)
        if self.at("["):
            self.advance()
            index = self.parse_expr()
            self.expect("]")
            return A.Index(base, index, loc=tok.loc)
        return base

    def parse_args(self) -> list[A.Expr]:
        self.expect("(")
        args: list[A.Expr] = []
        if not self.at(")"):
            while True:
                args.append(self.parse_expr())
                if self.at(","):
                    self.advance()
                    continue
                break
        self.expect(")")
        return args

    # -- expressions --------------------------------------------------------

    def parse_expr(self) -> A.Expr:
        # assignment expressions bind loosest and associate to the right
        if self.tok.kind == "ident":
            save = self.pos
            try:
                target = self.parse_lvalue()
            except MtcSyntaxError:
                target = None
            if target is not None and self.at("="):
                loc = self.advance().loc
                value = self.parse_expr()
                return A.AssignExpr(target, value, loc=target.loc)
            self.pos = save
        return self.parse_binary(0)

    def parse_binary(self, level: int) -> A.Expr:
        if level == len(_BINARY_LEVELS):
            return self.parse_unary()
        left = self.parse_binary(level + 1)
        ops = _BINARY_LEVELS[level]
        while self.tok.kind == "op" and self.tok.text in ops:
            op_tok = self.advance()
            right = self.parse_binary(level + 1)
            left = A.Binary(op_tok.text, left, right, loc=op_tok.loc)
        return left

    def parse_unary(self) -> A.Expr:
        tok = self.tok
        if tok.kind == "op" and tok.text in ("-", "!", "~"):
            self.advance()
            operand = self.parse_unary()
            return A.Unary(tok.text, operand, loc=tok.loc)
        return self.parse_primary()

    def parse_primary(self) -> A.Expr:
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return A.IntLit(int(tok.text), loc=tok.loc)
        if tok.kind == "kw" and tok.text in ("true", "false"):
            self.advance()
            return A.BoolLit(tok.text == "true", loc=tok.loc)
        if tok.kind == "ident":
            if self.peek().text == "(":
                name = self.advance().text
                args = self.parse_args()
                return A.Call(name, args, loc=tok.loc)
            return self.parse_lvalue()
        if self.at("("):
            self.advance()
            inner = self.parse_expr()
            self.expect(")")
            return inner
        self.error(
            f"unexpected {self.describe(tok)}",
            ["expression", "identifier", "integer literal", "(", "-", "!", "~"],
        )
        raise AssertionError("unreachable")


def parse(src: SourceProgram | str, origin: str = "<inline>") -> A.Program:
    """Parse MTC text into an untyped syntax tree."""
    if isinstance(src, str):
        src = SourceProgram(src, origin)
    return Parser(src).parse_program()
