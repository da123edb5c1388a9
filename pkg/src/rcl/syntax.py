"""Concrete syntax: lexer, parsers and printers.

Grammar (UTF-8 text)::

    Term := Var | "\\" Var "." Term | Term Term | "del" Var "." Term
          | "dup" Var "as" "(" Var "," Var ")" "." Term | "(" Term ")"

Application is left-associative, binders extend right as far as possible,
identifiers match ``[a-zA-Z][a-zA-Z0-9_']*``.  The substitution-operator
extension adds a tightest-binding postfix ``M[N/x]``.  The parser enforces
the convention that no name is bound twice or both bound and free.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .subst import Sub, STerm
from .terms import Abs, App, Dup, Era, Term, Var

KEYWORDS = {"del", "dup", "as"}

_TOKEN_RE = re.compile(r"[a-zA-Z][a-zA-Z0-9_']*|[\\.()\[\]/,]|\S")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident' | literal symbol | 'eof'
    value: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    for lineno, line in enumerate(text.splitlines() or [""], start=1):
        for m in _TOKEN_RE.finditer(line):
            value = m.group(0)
            col = m.start() + 1
            if value[0].isalpha():
                kind = value if value in KEYWORDS else "ident"
            elif value in "\\.()[]/,":
                kind = value
            else:
                raise ParseError(f"unexpected character {value!r}", lineno, col)
            tokens.append(Token(kind, value, lineno, col))
    last_line = text.count("\n") + 1
    tokens.append(Token("eof", "", last_line, len(text.splitlines()[-1]) + 1 if text.splitlines() else 1))
    return tokens


class _Parser:
    def __init__(self, text: str, allow_sub: bool):
        self.tokens = tokenize(text)
        self.i = 0
        self.allow_sub = allow_sub
        self.binders: dict[str, Token] = {}

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str) -> Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(f"expected {kind!r}, found {tok.value or 'end of input'!r}",
                             tok.line, tok.col)
        return self.next()

    def ident(self) -> Token:
        tok = self.peek()
        if tok.kind != "ident":
            raise ParseError(f"expected identifier, found {tok.value or 'end of input'!r}",
                             tok.line, tok.col)
        return self.next()

    def bind(self, tok: Token) -> str:
        if tok.value in self.binders:
            raise ParseError(f"binder {tok.value!r} shadows an earlier binder", tok.line, tok.col)
        self.binders[tok.value] = tok
        return tok.value

    def term(self):
        tok = self.peek()
        if tok.kind == "\\":
            self.next()
            x = self.bind(self.ident())
            self.expect(".")
            return Abs(x, self.term())
        if tok.kind == "del":
            self.next()
            x = self.ident().value
            self.expect(".")
            return Era(x, self.term())
        if tok.kind == "dup":
            self.next()
            x = self.ident().value
            self.expect("as")
            self.expect("(")
            l_tok = self.ident()
            self.expect(",")
            r_tok = self.ident()
            self.expect(")")
            left = self.bind(l_tok)
            if r_tok.value == left:
                raise ParseError("duplication split names must differ", r_tok.line, r_tok.col)
            right = self.bind(r_tok)
            self.expect(".")
            return Dup(x, left, right, self.term())
        return self.application()

    def application(self):
        t = self.atom()
        while True:
            tok = self.peek()
            if tok.kind in ("ident", "("):
                t = App(t, self.atom())
            elif tok.kind in ("\\", "del", "dup"):
                # trailing binder extends to the end of the application
                t = App(t, self.term())
            else:
                return t

    def atom(self):
        tok = self.peek()
        if tok.kind == "ident":
            t: STerm = Var(self.next().value)
        elif tok.kind == "(":
            self.next()
            t = self.term()
            self.expect(")")
        else:
            raise ParseError(f"expected a term, found {tok.value or 'end of input'!r}",
                             tok.line, tok.col)
        while self.peek().kind == "[":
            if not self.allow_sub:
                tok = self.peek()
                raise ParseError("substitution operator not allowed here", tok.line, tok.col)
            self.next()
            replacement = self.term()
            self.expect("/")
            target_tok = self.ident()
            self.expect("]")
            self.bind(target_tok)  # M[N/x] binds x in M
            t = Sub(t, replacement, target_tok.value)
        return t

    def finish(self, t):
        tok = self.peek()
        if tok.kind != "eof":
            raise ParseError(f"unexpected {tok.value!r} after term", tok.line, tok.col)
        free = _free_names(t)
        for x in free:
            if x in self.binders:
                btok = self.binders[x]
                raise ParseError(f"name {x!r} is both bound and free", btok.line, btok.col)
        return t


def _free_names(t) -> set[str]:
    match t:
        case Var(x):
            return {x}
        case Abs(x, body):
            return _free_names(body) - {x}
        case App(fun, arg):
            return _free_names(fun) | _free_names(arg)
        case Era(x, body):
            return _free_names(body) | {x}
        case Dup(s, l, r, body):
            return (_free_names(body) - {l, r}) | {s}
        case Sub(body, repl, target):
            return (_free_names(body) - {target}) | _free_names(repl)
    raise TypeError(f"not a term: {t!r}")


def parse_term(text: str) -> Term:
    p = _Parser(text, allow_sub=False)
    return p.finish(p.term())


def parse_sterm(text: str) -> STerm:
    p = _Parser(text, allow_sub=True)
    return p.finish(p.term())


# ---------------------------------------------------------------------------
# Printing

def _atom_str(t) -> str:
    s = term_str(t)
    if isinstance(t, (Var, Sub)):
        return s
    return f"({s})"


def term_str(t) -> str:
    match t:
        case Var(x):
            return x
        case Abs(x, body):
            return f"\\{x}. {term_str(body)}"
        case Era(x, body):
            return f"del {x}. {term_str(body)}"
        case Dup(s, l, r, body):
            return f"dup {s} as ({l},{r}). {term_str(body)}"
        case App(fun, arg):
            if isinstance(fun, (Var, App, Sub)):
                fun_s = term_str(fun)
            else:
                fun_s = f"({term_str(fun)})"
            return f"{fun_s} {_atom_str(arg)}"
        case Sub(body, repl, target):
            body_s = term_str(body) if isinstance(body, (Var, Sub)) else f"({term_str(body)})"
            return f"{body_s}[{term_str(repl)}/{target}]"
    raise TypeError(f"not a term: {t!r}")
