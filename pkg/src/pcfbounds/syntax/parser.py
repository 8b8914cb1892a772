"""Concrete syntax.

    type  ::= atype ('->' type)?          atype ::= 'nat' | '(' type ')'
    term  ::= '\\' x ':' type '.' term
            | 'if' term 'then' term 'else' term
            | 'let' x '=' term 'in' term
            | app
    app   ::= head head* [binder-form]      (left associative)
    head  ::= ('succ' | 'pred' | 'fix') head | atom
    atom  ::= x | n | 'coin' '(' p '/' q ')' | 'err-' | 'err+' | '(' term ')'

``#`` starts a comment running to the end of the line.  ``λ`` and ``→`` are
accepted as synonyms of ``\\`` and ``->``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from pcfbounds.syntax.terms import (
    ERRCONV,
    ERRDIV,
    NAT,
    Abs,
    App,
    Arrow,
    Coin,
    Errconv,
    Errdiv,
    Fix,
    If,
    Let,
    Nat,
    Num,
    Pred,
    Succ,
    Term,
    Type,
    Var,
)

KEYWORDS = {"if", "then", "else", "let", "in", "fix", "succ", "pred", "coin", "nat"}


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        self.line, self.col = line, col
        super().__init__(f"{line}:{col}: {message}")


@dataclass(frozen=True)
class Token:
    kind: str  # ident, num, kw, sym, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<err>err[+-])
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<num>[0-9]+(?:\.[0-9]*)?)
  | (?P<sym>->|→|λ|\\|[().:=/])
    """,
    re.VERBOSE,
)


def tokenize(text: str) -> list[Token]:
    tokens, pos, line, line_start = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind, lexeme = m.lastgroup, m.group()
        if kind == "ws":
            newlines = lexeme.count("\n")
            if newlines:
                line += newlines
                line_start = pos + lexeme.rfind("\n") + 1
        elif kind == "ident" and lexeme in KEYWORDS:
            tokens.append(Token("kw", lexeme, line, col))
        elif kind == "num" and "." in lexeme:
            raise ParseError(f"decimal literal {lexeme!r}: only exact rationals p/q are allowed", line, col)
        else:
            sym = {"→": "->", "λ": "\\"}.get(lexeme, lexeme)
            tokens.append(Token("sym" if kind == "sym" else kind, sym, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def fail(self, message: str):
        raise ParseError(message, self.tok.line, self.tok.col)

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("kw", "sym", "err")

    def eat(self, text: str) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            self.fail(f"expected {text!r}, found {found!r}")
        tok = self.tok
        self.i += 1
        return tok

    def ident(self) -> str:
        if self.tok.kind != "ident":
            self.fail(f"expected an identifier, found {self.tok.text or 'end of input'!r}")
        name = self.tok.text
        self.i += 1
        return name

    def number(self) -> int:
        if self.tok.kind != "num":
            self.fail(f"expected a natural number, found {self.tok.text or 'end of input'!r}")
        n = int(self.tok.text)
        self.i += 1
        return n

    # types
    def type_(self) -> Type:
        left = self.atype()
        if self.at("->"):
            self.i += 1
            return Arrow(left, self.type_())
        return left

    def atype(self) -> Type:
        if self.at("nat"):
            self.i += 1
            return NAT
        if self.at("("):
            self.i += 1
            ty = self.type_()
            self.eat(")")
            return ty
        self.fail(f"expected a type, found {self.tok.text or 'end of input'!r}")

    # terms
    def term(self) -> Term:
        if self.at("\\"):
            self.i += 1
            x = self.ident()
            self.eat(":")
            ty = self.type_()
            self.eat(".")
            return Abs(x, ty, self.term())
        if self.at("if"):
            self.i += 1
            c = self.term()
            self.eat("then")
            p = self.term()
            self.eat("else")
            return If(c, p, self.term())
        if self.at("let"):
            self.i += 1
            x = self.ident()
            self.eat("=")
            m = self.term()
            self.eat("in")
            return Let(x, m, self.term())
        return self.app()

    def starts_head(self) -> bool:
        t = self.tok
        return t.kind in ("ident", "num", "err") or (
            t.text in ("succ", "pred", "fix", "coin", "(") and t.kind in ("kw", "sym")
        )

    def app(self) -> Term:
        if not self.starts_head():
            self.fail(f"expected a term, found {self.tok.text or 'end of input'!r}")
        t = self.head()
        while True:
            if self.starts_head():
                t = App(t, self.head())
            elif self.at("\\") or self.at("if") or self.at("let"):
                return App(t, self.term())
            else:
                return t

    def head(self) -> Term:
        for kw, ctor in (("succ", Succ), ("pred", Pred), ("fix", Fix)):
            if self.at(kw):
                self.i += 1
                if not self.starts_head():
                    self.fail(f"{kw} expects an argument")
                return ctor(self.head())
        return self.atom()

    def atom(self) -> Term:
        tok = self.tok
        if tok.kind == "ident":
            self.i += 1
            return Var(tok.text)
        if tok.kind == "num":
            return Num(self.number())
        if tok.kind == "err":
            self.i += 1
            return ERRCONV if tok.text == "err+" else ERRDIV
        if self.at("coin"):
            self.i += 1
            self.eat("(")
            p = self.number()
            q = 1
            if self.at("/"):
                self.i += 1
                q = self.number()
                if q == 0:
                    self.fail("zero denominator")
            self.eat(")")
            r = Fraction(p, q)
            if r > 1:
                raise ParseError(f"coin bias {r} exceeds 1", tok.line, tok.col)
            return Coin(r)
        if self.at("("):
            self.i += 1
            t = self.term()
            self.eat(")")
            return t
        self.fail(f"expected a term, found {tok.text or 'end of input'!r}")


def parse(text: str) -> Term:
    p = _Parser(text)
    t = p.term()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r} after a complete term")
    return t


def parse_type(text: str) -> Type:
    p = _Parser(text)
    ty = p.type_()
    if p.tok.kind != "eof":
        p.fail(f"unexpected {p.tok.text!r} after a complete type")
    return ty


# --- rendering -----------------------------------------------------------

# precedence levels: 0 = binder forms, 1 = application, 2 = prefix operand,
# 3 = application argument
def render(t: Term) -> str:
    return _render(t, 0)


def _render(t: Term, ctx: int) -> str:
    match t:
        case Var(x):
            return x
        case Num(n):
            return str(n)
        case Coin(r):
            return f"coin({r.numerator}/{r.denominator})"
        case Errdiv():
            return "err-"
        case Errconv():
            return "err+"
        case Succ(a) | Pred(a) | Fix(a):
            kw = {Succ: "succ", Pred: "pred", Fix: "fix"}[type(t)]
            return _paren(f"{kw} {_render(a, 2)}", ctx > 2)
        case App(f, a):
            return _paren(f"{_render(f, 1)} {_render(a, 3)}", ctx > 1)
        case Abs(x, ty, body):
            return _paren(f"\\{x}: {ty}. {_render(body, 0)}", ctx > 0)
        case If(c, p, q):
            return _paren(f"if {_render(c, 0)} then {_render(p, 0)} else {_render(q, 0)}", ctx > 0)
        case Let(x, m, body):
            return _paren(f"let {x} = {_render(m, 0)} in {_render(body, 0)}", ctx > 0)
    raise AssertionError(f"unexpected node {t!r}")


def _paren(s: str, wrap: bool) -> str:
    return f"({s})" if wrap else s
