"""Recursive-descent expression parser for morphism files and the CLI.

Grammar (precedence: ^ above unary minus above * above + and -):

    expr     := term (('+' | '-') term)*
    term     := factor ('*' factor)*
    factor   := '-' factor | power
    power    := atom ('^' ['-'] INT)?
    atom     := NUMBER | IDENT | '(' expr ')'

Numbers are exact rationals `a` or `a/b`, optionally suffixed with `i` for an
imaginary literal (so rendered coefficients like `(3/2 + 1/2i)` parse back).
The bare identifier `i` is the imaginary unit and `h` is Planck's constant;
everything else must name a context variable.  Errors carry 1-based columns.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import ContextError, ParseError
from .exactring import Context, GaussRat, I, Poly
from .biseries import BiSeries, Truncation


# -- tokens ------------------------------------------------------------------

_NUMBER = re.compile(r"\d+(?:/\d+)?i?")
_IDENT = re.compile(r"[a-z]+\d*")
_SYMBOLS = "+-*^()"


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'ident', one of _SYMBOLS, or 'end'
    text: str
    column: int  # 1-based


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        m = _NUMBER.match(text, pos)
        if m:
            tokens.append(Token("num", m.group(), pos + 1))
            pos = m.end()
            continue
        m = _IDENT.match(text, pos)
        if m:
            tokens.append(Token("ident", m.group(), pos + 1))
            pos = m.end()
            continue
        if ch in _SYMBOLS:
            tokens.append(Token(ch, ch, pos + 1))
            pos += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", pos + 1)
    tokens.append(Token("end", "", n + 1))
    return tokens


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: GaussRat


@dataclass(frozen=True)
class Var:
    name: str
    column: int


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*'
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exponent: int
    column: int


def _literal(tok: Token) -> GaussRat:
    text = tok.text
    imag = text.endswith("i")
    if imag:
        text = text[:-1]
    try:
        value = Fraction(text)
    except ZeroDivisionError:
        raise ParseError("zero denominator in rational literal", tok.column) from None
    return GaussRat(0, value) if imag else GaussRat(value)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tok
        self.pos += 1
        return t

    def expect(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            raise ParseError(f"expected {what}", self.tok.column)
        return self.advance()

    def parse(self):
        node = self.expr()
        if self.tok.kind != "end":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.column)
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.tok.kind == "*":
            self.advance()
            node = BinOp("*", node, self.factor())
        return node

    def factor(self):
        if self.tok.kind == "-":
            self.advance()
            return Neg(self.factor())
        return self.power()

    def power(self):
        node = self.atom()
        if self.tok.kind == "^":
            col = self.advance().column
            sign = 1
            if self.tok.kind == "-":
                self.advance()
                sign = -1
            tok = self.expect("num", "integer exponent")
            if not tok.text.isdigit():
                raise ParseError("exponent must be an integer", tok.column)
            node = Pow(node, sign * int(tok.text), col)
        return node

    def atom(self):
        tok = self.tok
        if tok.kind == "num":
            self.advance()
            return Lit(_literal(tok))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "i":
                return Lit(I)
            return Var(tok.text, tok.column)
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")", "closing parenthesis")
            return node
        raise ParseError("expected a value", tok.column)


def parse_expression(text: str):
    """Parse to an AST; raises ParseError with a 1-based column on bad input."""
    return _Parser(tokenize(text)).parse()


# -- evaluation ----------------------------------------------------------------

def eval_series(node, ctx: Context, trunc: Truncation) -> BiSeries:
    """Evaluate an AST over a variable context, with `h` as Planck's constant.

    Exponents must be nonnegative: negative powers of h cannot live at
    coupling grade zero, and coordinates have no inverses.
    """
    if isinstance(node, Lit):
        return BiSeries.const(trunc, ctx, node.value)
    if isinstance(node, Var):
        if node.name == "h":
            return BiSeries.hbar(trunc, ctx)
        if node.name not in ctx:
            raise ContextError(
                f"unknown variable {node.name!r} at column {node.column}"
                f" (context: {', '.join(ctx.names) or 'empty'})")
        return BiSeries.from_poly(trunc, Poly.variable(ctx, node.name))
    if isinstance(node, Neg):
        return -eval_series(node.operand, ctx, trunc)
    if isinstance(node, BinOp):
        left = eval_series(node.left, ctx, trunc)
        right = eval_series(node.right, ctx, trunc)
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        return left * right
    if isinstance(node, Pow):
        if node.exponent < 0:
            raise ParseError("negative exponents are not representable here",
                             node.column)
        return eval_series(node.base, ctx, trunc) ** node.exponent
    raise TypeError(f"not an expression node: {node!r}")


def eval_poly(node, ctx: Context) -> Poly:
    """Evaluate an h-free AST to a plain polynomial."""
    # generous hbar room so stray h terms are detected instead of truncated away
    series = eval_series(node, ctx, Truncation(0, 16, K=1))
    out = Poly.zero(ctx)
    for (m, j), p in series.coeffs.items():
        if (m, j) != (0, 0):
            raise ContextError("expression is not a plain polynomial")
        out = out + p
    return out


def eval_constant(text: str) -> GaussRat:
    """Parse and evaluate a variable-free expression to a number."""
    p = eval_poly(parse_expression(text), Context(()))
    return p.constant_value()
