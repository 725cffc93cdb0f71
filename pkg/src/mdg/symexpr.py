"""Integer affine expressions for shapes, ranges, and memlet subsets.

An Affine is c0 + sum(ci * var_i) with integer coefficients, stored in a
canonical form (terms sorted by variable, zero coefficients dropped) so that
printing is deterministic and structural equality is plain equality. Range
upper bounds may additionally be a two-way min, which is what clamped
boundary tiles need; nothing else in the IR requires min.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

__all__ = ["Affine", "MinExpr", "RangeEnd", "parse_affine", "parse_range_end"]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|([()+\-*,]))")


def is_identifier(name: str) -> bool:
    return bool(_IDENT.fullmatch(name))


@dataclass(frozen=True)
class Affine:
    """c0 + sum(ci * vi); terms sorted by variable name, no zero ci."""

    const: int = 0
    terms: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def of(value) -> "Affine":
        if isinstance(value, Affine):
            return value
        if isinstance(value, int):
            return Affine(const=value)
        if isinstance(value, str):
            if not is_identifier(value):
                raise ParseError(f"not an identifier: {value!r}")
            return Affine(terms=((value, 1),))
        raise ParseError(f"cannot coerce {value!r} to an affine expression")

    @staticmethod
    def _build(const: int, coeffs: dict[str, int]) -> "Affine":
        terms = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return Affine(const=const, terms=terms)

    def coeffs(self) -> dict[str, int]:
        return dict(self.terms)

    def vars(self) -> set[str]:
        return {v for v, _ in self.terms}

    @property
    def is_const(self) -> bool:
        return not self.terms

    def __add__(self, other) -> "Affine":
        other = Affine.of(other)
        coeffs = self.coeffs()
        for v, c in other.terms:
            coeffs[v] = coeffs.get(v, 0) + c
        return Affine._build(self.const + other.const, coeffs)

    def __sub__(self, other) -> "Affine":
        other = Affine.of(other)
        coeffs = self.coeffs()
        for v, c in other.terms:
            coeffs[v] = coeffs.get(v, 0) - c
        return Affine._build(self.const - other.const, coeffs)

    def scaled(self, factor: int) -> "Affine":
        return Affine._build(
            self.const * factor, {v: c * factor for v, c in self.terms}
        )

    def substitute(self, name: str, value) -> "Affine":
        coeffs = self.coeffs()
        c = coeffs.pop(name, 0)
        base = Affine._build(self.const, coeffs)
        if c == 0:
            return base
        return base + Affine.of(value).scaled(c)

    def rename(self, old: str, new: str) -> "Affine":
        if old not in self.vars():
            return self
        return self.substitute(old, Affine.of(new))

    def evaluate(self, env: dict[str, int]) -> int:
        total = self.const
        for v, c in self.terms:
            total += c * env[v]
        return total

    def __str__(self) -> str:
        if not self.terms:
            return str(self.const)
        parts: list[str] = []
        for v, c in self.terms:
            mag = v if abs(c) == 1 else f"{abs(c)}*{v}"
            if not parts:
                parts.append(mag if c > 0 else f"-{mag}")
            else:
                parts.append(f"+ {mag}" if c > 0 else f"- {mag}")
        if self.const != 0:
            parts.append(
                f"+ {self.const}" if self.const > 0 else f"- {-self.const}"
            )
        return " ".join(parts)


@dataclass(frozen=True)
class MinExpr:
    """min(a, b); used only as a range upper bound for clamped tiles."""

    a: Affine
    b: Affine

    def vars(self) -> set[str]:
        return self.a.vars() | self.b.vars()

    @property
    def is_const(self) -> bool:
        return self.a.is_const and self.b.is_const

    def substitute(self, name: str, value) -> "RangeEnd":
        return _fold_min(self.a.substitute(name, value), self.b.substitute(name, value))

    def rename(self, old: str, new: str) -> "RangeEnd":
        return _fold_min(self.a.rename(old, new), self.b.rename(old, new))

    def evaluate(self, env: dict[str, int]) -> int:
        return min(self.a.evaluate(env), self.b.evaluate(env))

    def __str__(self) -> str:
        return f"min({self.a}, {self.b})"


RangeEnd = Affine | MinExpr


def _fold_min(a: Affine, b: Affine) -> RangeEnd:
    if a.is_const and b.is_const:
        return Affine(const=min(a.const, b.const))
    if a == b:
        return a
    return MinExpr(a, b)


def make_min(a, b) -> RangeEnd:
    return _fold_min(Affine.of(a), Affine.of(b))


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        if self.pos >= len(self.text):
            return None
        m = _TOKEN.match(self.text, self.pos)
        if m is None or not m.group(0).strip():
            if self.text[self.pos :].strip():
                raise ParseError(
                    f"bad token in expression {self.text!r}", offset=self.pos
                )
            return None
        if m.group(1) is not None:
            return ("int", m.group(1))
        if m.group(2) is not None:
            return ("ident", m.group(2))
        return ("op", m.group(3))

    def next(self) -> tuple[str, str] | None:
        tok = self.peek()
        if tok is not None:
            m = _TOKEN.match(self.text, self.pos)
            self.pos = m.end()
        return tok

    def expect_op(self, op: str):
        tok = self.next()
        if tok is None or tok[0] != "op" or tok[1] != op:
            raise ParseError(
                f"expected {op!r} in expression {self.text!r}", offset=self.pos
            )


def _parse_term(toks: _Tokens, sign: int) -> Affine:
    tok = toks.next()
    if tok is None:
        raise ParseError(f"unexpected end of expression {toks.text!r}", offset=toks.pos)
    kind, text = tok
    if kind == "int":
        value = int(text)
        nxt = toks.peek()
        if nxt == ("op", "*"):
            toks.next()
            ident = toks.next()
            if ident is None or ident[0] != "ident":
                raise ParseError(
                    f"expected identifier after '*' in {toks.text!r}", offset=toks.pos
                )
            return Affine(terms=((ident[1], sign * value),)) if value else Affine()
        return Affine(const=sign * value)
    if kind == "ident":
        nxt = toks.peek()
        if nxt == ("op", "*"):
            toks.next()
            num = toks.next()
            if num is None or num[0] != "int":
                raise ParseError(
                    f"expected integer after '*' in {toks.text!r}", offset=toks.pos
                )
            value = int(num[1])
            return Affine(terms=((text, sign * value),)) if value else Affine()
        return Affine(terms=((text, sign),))
    raise ParseError(f"unexpected token {text!r} in {toks.text!r}", offset=toks.pos)


def _parse_sum(toks: _Tokens) -> Affine:
    sign = 1
    tok = toks.peek()
    if tok == ("op", "-"):
        toks.next()
        sign = -1
    result = _parse_term(toks, sign)
    while True:
        tok = toks.peek()
        if tok == ("op", "+"):
            toks.next()
            result = result + _parse_term(toks, 1)
        elif tok == ("op", "-"):
            toks.next()
            result = result + _parse_term(toks, -1)
        else:
            return result


def parse_affine(text: str) -> Affine:
    """Parse a canonical affine expression like '2*kt + i - 1'."""
    toks = _Tokens(text)
    result = _parse_sum(toks)
    if toks.peek() is not None:
        raise ParseError(f"trailing input in expression {text!r}", offset=toks.pos)
    return result


def parse_range_end(text: str) -> RangeEnd:
    """Parse a range upper bound: an affine expression or min(a, b)."""
    stripped = text.strip()
    if stripped.startswith("min(") or stripped.startswith("min ("):
        toks = _Tokens(stripped)
        tok = toks.next()
        if tok != ("ident", "min"):
            raise ParseError(f"malformed min expression {text!r}", offset=0)
        toks.expect_op("(")
        a = _parse_sum(toks)
        toks.expect_op(",")
        b = _parse_sum(toks)
        toks.expect_op(")")
        if toks.peek() is not None:
            raise ParseError(f"trailing input in expression {text!r}", offset=toks.pos)
        return _fold_min(a, b)
    return parse_affine(text)
