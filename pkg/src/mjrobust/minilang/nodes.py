"""AST nodes for MJ.

All nodes are frozen dataclasses with tuple children, so trees compare
structurally with `==` and can be shared freely between passes.

Holes (unknown leaves of partially applied transformations) are carried
in-band: an identifier whose name is the reserved lexeme `⟦Hi⟧`, or a
string literal whose value is that lexeme. `hole_index` recognizes both.
The brackets cannot appear in ordinary identifiers or string literals,
so holes never collide with program text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

SCALAR_TYPES = ("int", "bool", "string")

# Reserved words; none may be used as an identifier or a hole fill.
KEYWORDS = frozenset(
    {
        "method",
        "field",
        "var",
        "if",
        "else",
        "while",
        "return",
        "try",
        "catch",
        "throw",
        "print",
        "len",
        "self",
        "true",
        "false",
        "int",
        "bool",
        "string",
    }
)

_HOLE_RE = re.compile(r"⟦H([1-9][0-9]*)⟧\Z")


def hole_lexeme(index: int) -> str:
    return f"⟦H{index}⟧"


def hole_index(text: str) -> int | None:
    """Return the hole index if `text` is a hole lexeme, else None."""
    m = _HOLE_RE.match(text)
    return int(m.group(1)) if m else None


# --- expressions ---


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class FieldAccess:
    """`self.<name>`; the receiver is implicit."""

    name: str


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / < > == != && ||
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    """Builtin call; `len` is the only callable expression."""

    func: str
    args: tuple["Expr", ...]


Expr = IntLit | BoolLit | StrLit | Ident | FieldAccess | Binary | Call


# --- statements ---


@dataclass(frozen=True)
class VarDecl:
    name: str
    ty: str
    init: Expr


@dataclass(frozen=True)
class Assign:
    target: Ident | FieldAccess
    value: Expr


@dataclass(frozen=True)
class If:
    cond: Expr
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...]


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple["Stmt", ...]


@dataclass(frozen=True)
class Return:
    value: Expr


@dataclass(frozen=True)
class Print:
    value: Expr


@dataclass(frozen=True)
class TryCatch:
    body: tuple["Stmt", ...]
    catch_var: str
    handler: tuple["Stmt", ...]


@dataclass(frozen=True)
class Throw:
    value: Expr


@dataclass(frozen=True)
class ExprStmt:
    value: Expr


Stmt = VarDecl | Assign | If | While | Return | Print | TryCatch | Throw | ExprStmt


@dataclass(frozen=True)
class MethodAst:
    """One MJ method: the unit of parsing, transformation and execution."""

    name: str
    params: tuple[tuple[str, str], ...]  # (name, type)
    fields_decl: tuple[tuple[str, str], ...]  # (name, type), implicit receiver
    body: tuple[Stmt, ...]


def child_blocks(stmt: Stmt) -> tuple[tuple[Stmt, ...], ...]:
    """Nested statement blocks of a statement, in source order."""
    if isinstance(stmt, If):
        return (stmt.then, stmt.orelse)
    if isinstance(stmt, While):
        return (stmt.body,)
    if isinstance(stmt, TryCatch):
        return (stmt.body, stmt.handler)
    return ()


def stmt_exprs(stmt: Stmt) -> tuple[Expr, ...]:
    """Immediate expression children of a statement."""
    if isinstance(stmt, VarDecl):
        return (stmt.init,)
    if isinstance(stmt, Assign):
        return (stmt.target, stmt.value)
    if isinstance(stmt, (If, While)):
        return (stmt.cond,)
    if isinstance(stmt, (Return, Print, Throw, ExprStmt)):
        return (stmt.value,)
    return ()


def iter_stmts(body: tuple[Stmt, ...]):
    """Pre-order iteration over all statements, descending into blocks."""
    for s in body:
        yield s
        for block in child_blocks(s):
            yield from iter_stmts(block)


def iter_exprs(body: tuple[Stmt, ...]):
    """Pre-order iteration over all expressions in all statements."""

    def walk(e: Expr):
        yield e
        if isinstance(e, Binary):
            yield from walk(e.left)
            yield from walk(e.right)
        elif isinstance(e, Call):
            for a in e.args:
                yield from walk(a)

    for s in iter_stmts(body):
        for e in stmt_exprs(s):
            yield from walk(e)
