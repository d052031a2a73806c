"""Canonical pretty-printer for MJ.

Formatting is deterministic: two-space indent, blocks always braced,
one statement per line, minimal parentheses (a child is parenthesized
only when its operator binds weaker than its parent, or equally on the
right of a left-associative operator). parse(to_source(m)) reproduces m.

Hole leaves print as their reserved lexeme, bare for identifiers and
quoted for string literals, so sketches round-trip through the same
grammar as complete programs.
"""

from __future__ import annotations

from .nodes import (
    Assign,
    Binary,
    Call,
    BoolLit,
    Expr,
    ExprStmt,
    FieldAccess,
    Ident,
    If,
    IntLit,
    MethodAst,
    Print,
    Return,
    Stmt,
    StrLit,
    Throw,
    TryCatch,
    VarDecl,
    While,
)

_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3,
    "!=": 3,
    "<": 4,
    ">": 4,
    "+": 5,
    "-": 5,
    "*": 6,
    "/": 6,
}


def expr_source(e: Expr) -> str:
    return _expr(e, 0, False)


def _expr(e: Expr, parent_prec: int, is_right: bool) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, StrLit):
        return f'"{e.value}"'
    if isinstance(e, Ident):
        return e.name
    if isinstance(e, FieldAccess):
        return f"self.{e.name}"
    if isinstance(e, Call):
        args = ", ".join(_expr(a, 0, False) for a in e.args)
        return f"{e.func}({args})"
    assert isinstance(e, Binary)
    prec = _PREC[e.op]
    text = f"{_expr(e.left, prec, False)} {e.op} {_expr(e.right, prec, True)}"
    if prec < parent_prec or (prec == parent_prec and is_right):
        return f"({text})"
    return text


def _stmt_lines(s: Stmt, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(s, VarDecl):
        out.append(f"{pad}var {s.name}: {s.ty} = {expr_source(s.init)};")
    elif isinstance(s, Assign):
        out.append(f"{pad}{expr_source(s.target)} = {expr_source(s.value)};")
    elif isinstance(s, If):
        out.append(f"{pad}if ({expr_source(s.cond)}) {{")
        for inner in s.then:
            _stmt_lines(inner, indent + 1, out)
        if s.orelse:
            out.append(f"{pad}}} else {{")
            for inner in s.orelse:
                _stmt_lines(inner, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, While):
        out.append(f"{pad}while ({expr_source(s.cond)}) {{")
        for inner in s.body:
            _stmt_lines(inner, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, Return):
        out.append(f"{pad}return {expr_source(s.value)};")
    elif isinstance(s, Print):
        out.append(f"{pad}print({expr_source(s.value)});")
    elif isinstance(s, TryCatch):
        out.append(f"{pad}try {{")
        for inner in s.body:
            _stmt_lines(inner, indent + 1, out)
        out.append(f"{pad}}} catch ({s.catch_var}) {{")
        for inner in s.handler:
            _stmt_lines(inner, indent + 1, out)
        out.append(f"{pad}}}")
    elif isinstance(s, Throw):
        out.append(f"{pad}throw {expr_source(s.value)};")
    else:
        assert isinstance(s, ExprStmt)
        out.append(f"{pad}{expr_source(s.value)};")


def body_source(method: MethodAst) -> str:
    """Field declarations plus statements, without the signature."""
    lines: list[str] = []
    for name, ty in method.fields_decl:
        lines.append(f"field {name}: {ty};")
    for s in method.body:
        _stmt_lines(s, 0, lines)
    return "\n".join(lines)


def to_source(method: MethodAst) -> str:
    params = ", ".join(f"{n}: {t}" for n, t in method.params)
    lines = [f"method {method.name}({params}) {{"]
    for name, ty in method.fields_decl:
        lines.append(f"  field {name}: {ty};")
    for s in method.body:
        _stmt_lines(s, 1, lines)
    lines.append("}")
    return "\n".join(lines) + "\n"
