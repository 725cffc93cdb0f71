"""The tasklet arithmetic language: assignments over scalar connectors.

Grammar (one statement per line or semicolon-separated):

    stmt   := IDENT '=' expr
    expr   := ['-'] term (('+'|'-') term)*
    term   := factor ('*' factor)*
    factor := NUMBER | IDENT | '(' expr ')'

No division, no comparisons, no branches. Evaluation is left to right with
the usual precedence; the compiled forms (Python callable, C statements)
preserve the association of every operation exactly, which is what makes
bit-exact comparison between interpreter and generated code possible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ParseError

__all__ = ["Stmt", "parse_body", "body_connectors", "check_body", "compile_body"]

_TOKEN = re.compile(
    r"\s*(?:(\d+\.\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?|\d+(?:[eE][-+]?\d+)?)"
    r"|([A-Za-z_][A-Za-z_0-9]*)"
    r"|([()+\-*=]))"
)

# Expression AST: ("const", float) | ("var", name) | ("add"|"sub"|"mul", a, b)
# | ("neg", a)
Expr = tuple


@dataclass(frozen=True)
class Stmt:
    target: str
    expr: Expr


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def peek(self):
        if self.pos >= len(self.text):
            return None
        m = _TOKEN.match(self.text, self.pos)
        if m is None or not m.group(0).strip():
            if self.text[self.pos :].strip():
                raise ParseError(
                    f"bad token in tasklet body near {self.text[self.pos:self.pos+10]!r}",
                    offset=self.pos,
                )
            return None
        if m.group(1) is not None:
            return ("num", m.group(1), m.end())
        if m.group(2) is not None:
            return ("ident", m.group(2), m.end())
        return ("op", m.group(3), m.end())

    def next(self):
        tok = self.peek()
        if tok is not None:
            self.pos = tok[2]
        return tok


def _parse_factor(lx: _Lexer) -> Expr:
    tok = lx.next()
    if tok is None:
        raise ParseError("unexpected end of tasklet expression", offset=lx.pos)
    kind, text, _ = tok
    if kind == "num":
        return ("const", float(text))
    if kind == "ident":
        return ("var", text)
    if kind == "op" and text == "(":
        inner = _parse_expr(lx)
        closing = lx.next()
        if closing is None or closing[1] != ")":
            raise ParseError("missing ')' in tasklet expression", offset=lx.pos)
        return inner
    if kind == "op" and text == "-":
        return ("neg", _parse_factor(lx))
    raise ParseError(f"unexpected {text!r} in tasklet expression", offset=lx.pos)


def _parse_term(lx: _Lexer) -> Expr:
    node = _parse_factor(lx)
    while lx.peek() is not None and lx.peek()[:2] == ("op", "*"):
        lx.next()
        node = ("mul", node, _parse_factor(lx))
    return node


def _parse_expr(lx: _Lexer) -> Expr:
    tok = lx.peek()
    if tok is not None and tok[:2] == ("op", "-"):
        lx.next()
        node: Expr = ("neg", _parse_term(lx))
    else:
        node = _parse_term(lx)
    while True:
        tok = lx.peek()
        if tok is not None and tok[:2] == ("op", "+"):
            lx.next()
            node = ("add", node, _parse_term(lx))
        elif tok is not None and tok[:2] == ("op", "-"):
            lx.next()
            node = ("sub", node, _parse_term(lx))
        else:
            return node


def parse_body(body: str) -> list[Stmt]:
    """Parse a tasklet body into a statement list."""
    stmts: list[Stmt] = []
    offset = 0
    for raw in re.split(r"[;\n]", body):
        line = raw.strip()
        if line:
            lx = _Lexer(line)
            head = lx.next()
            if head is None or head[0] != "ident":
                raise ParseError(
                    f"statement must start with a connector name: {line!r}",
                    offset=offset,
                )
            eq = lx.next()
            if eq is None or eq[:2] != ("op", "="):
                raise ParseError(f"expected '=' in statement {line!r}", offset=offset)
            expr = _parse_expr(lx)
            if lx.peek() is not None:
                raise ParseError(f"trailing input in statement {line!r}", offset=offset)
            stmts.append(Stmt(target=head[1], expr=expr))
        offset += len(raw) + 1
    if not stmts:
        raise ParseError("empty tasklet body")
    return stmts


def _expr_vars(expr: Expr, out: set[str]):
    if expr[0] == "var":
        out.add(expr[1])
    elif expr[0] in ("add", "sub", "mul"):
        _expr_vars(expr[1], out)
        _expr_vars(expr[2], out)
    elif expr[0] == "neg":
        _expr_vars(expr[1], out)


def body_connectors(stmts: list[Stmt]) -> tuple[set[str], set[str]]:
    """(read connector names, written connector names)."""
    reads: set[str] = set()
    writes: set[str] = set()
    for s in stmts:
        _expr_vars(s.expr, reads)
        writes.add(s.target)
    return reads, writes


def check_body(body: str, ins: set[str], outs: set[str]) -> list[str]:
    """Static checks; returns human-readable problems (empty = ok)."""
    problems: list[str] = []
    try:
        stmts = parse_body(body)
    except ParseError as exc:
        return [f"body does not parse: {exc}"]
    assigned: set[str] = set()
    for s in stmts:
        if s.target not in outs:
            problems.append(f"assignment to undeclared output connector '{s.target}'")
        elif s.target in assigned:
            problems.append(f"output connector '{s.target}' assigned more than once")
        used: set[str] = set()
        _expr_vars(s.expr, used)
        for name in sorted(used):
            if name in ins:
                continue
            if name in assigned:
                continue
            if name in outs:
                problems.append(
                    f"output connector '{name}' read before it is assigned"
                )
            else:
                problems.append(f"undeclared connector '{name}' referenced")
        assigned.add(s.target)
    for name in sorted(outs - assigned):
        problems.append(f"output connector '{name}' never assigned")
    return problems


def _expr_to_python(expr: Expr) -> str:
    kind = expr[0]
    if kind == "const":
        return repr(expr[1])
    if kind == "var":
        return expr[1]
    if kind == "neg":
        return f"(-{_expr_to_python(expr[1])})"
    op = {"add": "+", "sub": "-", "mul": "*"}[kind]
    return f"({_expr_to_python(expr[1])} {op} {_expr_to_python(expr[2])})"


def compile_body(body: str, in_names: list[str], out_names: list[str]):
    """Compile to a callable(*ins) -> tuple(outs in out_names order).

    The generated source parenthesizes every operation, so the evaluation
    order is exactly the parsed association for floats and numpy arrays
    alike.
    """
    stmts = parse_body(body)
    lines = [f"def _tasklet({', '.join(in_names)}):"]
    for s in stmts:
        lines.append(f"    {s.target} = {_expr_to_python(s.expr)}")
    lines.append(f"    return ({', '.join(out_names)}{',' if len(out_names) == 1 else ''})")
    namespace: dict = {}
    exec(compile("\n".join(lines), "<tasklet>", "exec"), namespace)
    return namespace["_tasklet"]


def expr_to_c(expr: Expr) -> str:
    """Render an expression as C, parenthesized to pin association."""
    kind = expr[0]
    if kind == "const":
        value = expr[1]
        text = repr(value)
        return text if ("." in text or "e" in text or "E" in text) else text + ".0"
    if kind == "var":
        return expr[1]
    if kind == "neg":
        return f"(-{expr_to_c(expr[1])})"
    op = {"add": "+", "sub": "-", "mul": "*"}[kind]
    return f"({expr_to_c(expr[1])} {op} {expr_to_c(expr[2])})"
