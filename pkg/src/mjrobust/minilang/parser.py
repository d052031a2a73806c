"""Recursive-descent parser and scope checker for MJ.

Scope rules:
  * params are method-scoped and may not be shadowed;
  * `var` declarations and catch variables are block-scoped, distinct
    within their own block, and may shadow bindings of enclosing blocks
    (loop-body duplication therefore stays well-scoped);
  * fields form a separate namespace, reachable only through `self.`.

Hole lexemes are accepted wherever an identifier is expected and in string
literal position; they behave as ordinary names for scoping purposes.
"""

from __future__ import annotations

from .lexer import Token, tokenize
from .nodes import (
    Assign,
    Binary,
    BoolLit,
    Call,
    Expr,
    ExprStmt,
    FieldAccess,
    Ident,
    If,
    IntLit,
    MethodAst,
    Print,
    Return,
    SCALAR_TYPES,
    Stmt,
    StrLit,
    Throw,
    TryCatch,
    VarDecl,
    While,
    child_blocks,
    hole_lexeme,
    stmt_exprs,
)


class ParseError(Exception):
    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        detail = f" (expected one of {', '.join(expected)})" if expected else ""
        super().__init__(f"{message}{detail} (byte offset {offset})")
        self.offset = offset
        self.expected = expected


class ScopeError(Exception):
    pass


class _Stream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    def peek(self, ahead: int = 0) -> Token | None:
        i = self.pos + ahead
        return self.tokens[i] if i < len(self.tokens) else None

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.peek()
        return t is not None and t.kind == kind and (text is None or t.text == text)

    def take(self) -> Token:
        t = self.peek()
        if t is None:
            raise ParseError("unexpected end of input", self._end_offset())
        self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        want = text if text is not None else kind
        if t is None:
            raise ParseError("unexpected end of input", self._end_offset(), (want,))
        if t.kind != kind or (text is not None and t.text != text):
            raise ParseError(f"unexpected token {t.text!r}", t.offset, (want,))
        self.pos += 1
        return t

    def _end_offset(self) -> int:
        if self.tokens:
            last = self.tokens[-1]
            return last.offset + len(last.text.encode("utf-8"))
        return 0


def _name(ts: _Stream) -> str:
    """An identifier or a hole lexeme."""
    t = ts.peek()
    if t is not None and t.kind == "ident":
        ts.take()
        return t.text
    if t is not None and t.kind == "hole":
        ts.take()
        return hole_lexeme(t.value)
    offset = t.offset if t is not None else ts._end_offset()
    raise ParseError("expected identifier", offset, ("ident",))


def _type(ts: _Stream) -> str:
    t = ts.peek()
    if t is not None and t.kind == "kw" and t.text in SCALAR_TYPES:
        ts.take()
        return t.text
    offset = t.offset if t is not None else ts._end_offset()
    raise ParseError("expected type", offset, SCALAR_TYPES)


# precedence-climbing table: op -> binding power, all left-associative
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


def _expr(ts: _Stream, min_prec: int = 1) -> Expr:
    left = _atom(ts)
    while True:
        t = ts.peek()
        if t is None or t.kind not in _PREC or _PREC[t.kind] < min_prec:
            return left
        ts.take()
        right = _expr(ts, _PREC[t.kind] + 1)
        left = Binary(t.kind, left, right)


def _atom(ts: _Stream) -> Expr:
    t = ts.peek()
    if t is None:
        raise ParseError("unexpected end of input", ts._end_offset(), ("expression",))
    if t.kind == "int":
        ts.take()
        return IntLit(t.value)
    if t.kind == "bool":
        ts.take()
        return BoolLit(t.value)
    if t.kind == "str":
        ts.take()
        return StrLit(t.value)
    if t.kind == "hole":
        ts.take()
        return Ident(hole_lexeme(t.value))
    if t.kind == "(":
        ts.take()
        e = _expr(ts)
        ts.expect(")")
        return e
    if t.kind == "kw" and t.text == "self":
        ts.take()
        ts.expect(".")
        return FieldAccess(_name(ts))
    if t.kind == "kw" and t.text == "len":
        ts.take()
        ts.expect("(")
        arg = _expr(ts)
        ts.expect(")")
        return Call("len", (arg,))
    if t.kind == "ident":
        ts.take()
        if ts.at("("):
            raise ParseError(f"{t.text!r} is not callable", t.offset)
        return Ident(t.text)
    raise ParseError(f"unexpected token {t.text!r}", t.offset, ("expression",))


def _block_or_stmt(ts: _Stream) -> tuple[Stmt, ...]:
    if ts.at("{"):
        ts.take()
        stmts = []
        while not ts.at("}"):
            stmts.append(_stmt(ts))
        ts.expect("}")
        return tuple(stmts)
    return (_stmt(ts),)


def _stmt(ts: _Stream) -> Stmt:
    t = ts.peek()
    if t is None:
        raise ParseError("unexpected end of input", ts._end_offset(), ("statement",))
    if t.kind == "kw":
        if t.text == "var":
            ts.take()
            name = _name(ts)
            ts.expect(":")
            ty = _type(ts)
            ts.expect("=")
            init = _expr(ts)
            ts.expect(";")
            return VarDecl(name, ty, init)
        if t.text == "if":
            ts.take()
            ts.expect("(")
            cond = _expr(ts)
            ts.expect(")")
            then = _block_or_stmt(ts)
            orelse: tuple[Stmt, ...] = ()
            if ts.at("kw", "else"):
                ts.take()
                orelse = _block_or_stmt(ts)
            return If(cond, then, orelse)
        if t.text == "while":
            ts.take()
            ts.expect("(")
            cond = _expr(ts)
            ts.expect(")")
            body = _block_or_stmt(ts)
            return While(cond, body)
        if t.text == "return":
            ts.take()
            value = _expr(ts)
            ts.expect(";")
            return Return(value)
        if t.text == "print":
            ts.take()
            ts.expect("(")
            value = _expr(ts)
            ts.expect(")")
            ts.expect(";")
            return Print(value)
        if t.text == "throw":
            ts.take()
            value = _expr(ts)
            ts.expect(";")
            return Throw(value)
        if t.text == "try":
            ts.take()
            ts.expect("{")
            body = []
            while not ts.at("}"):
                body.append(_stmt(ts))
            ts.expect("}")
            ts.expect("kw", "catch")
            ts.expect("(")
            var = _name(ts)
            ts.expect(")")
            ts.expect("{")
            handler = []
            while not ts.at("}"):
                handler.append(_stmt(ts))
            ts.expect("}")
            return TryCatch(tuple(body), var, tuple(handler))
        if t.text == "self":
            target = _atom(ts)
            assert isinstance(target, FieldAccess)
            ts.expect("=")
            value = _expr(ts)
            ts.expect(";")
            return Assign(target, value)
    # assignment to a local, or a bare expression statement
    e = _expr(ts)
    if ts.at("="):
        if not isinstance(e, Ident):
            raise ParseError("invalid assignment target", ts.peek().offset)
        ts.take()
        value = _expr(ts)
        ts.expect(";")
        return Assign(e, value)
    ts.expect(";")
    return ExprStmt(e)


def parse(tokens: list[Token]) -> MethodAst:
    """Parse one method and scope-check it."""
    ts = _Stream(tokens)
    ts.expect("kw", "method")
    name = _name(ts)
    ts.expect("(")
    params: list[tuple[str, str]] = []
    if not ts.at(")"):
        while True:
            pname = _name(ts)
            ts.expect(":")
            params.append((pname, _type(ts)))
            if ts.at(","):
                ts.take()
                continue
            break
    ts.expect(")")
    ts.expect("{")
    fields: list[tuple[str, str]] = []
    while ts.at("kw", "field"):
        ts.take()
        fname = _name(ts)
        ts.expect(":")
        fields.append((fname, _type(ts)))
        ts.expect(";")
    body = []
    while not ts.at("}"):
        body.append(_stmt(ts))
    ts.expect("}")
    extra = ts.peek()
    if extra is not None:
        raise ParseError(f"trailing input {extra.text!r}", extra.offset)
    method = MethodAst(name, tuple(params), tuple(fields), tuple(body))
    scope_check(method)
    return method


def parse_source(source: str) -> MethodAst:
    return parse(tokenize(source))


def scope_check(method: MethodAst) -> None:
    """Raise ScopeError on duplicate declarations or unresolved references."""
    param_names = [n for n, _ in method.params]
    if len(set(param_names)) != len(param_names):
        raise ScopeError(f"duplicate parameter in {method.name}")
    field_names = [n for n, _ in method.fields_decl]
    if len(set(field_names)) != len(field_names):
        raise ScopeError(f"duplicate field in {method.name}")
    params = set(param_names)
    fields = set(field_names)

    def check_expr(e: Expr, visible: tuple[frozenset[str], ...]) -> None:
        if isinstance(e, Ident):
            if e.name not in params and not any(e.name in s for s in visible):
                raise ScopeError(f"undeclared identifier {e.name!r}")
        elif isinstance(e, FieldAccess):
            if e.name not in fields:
                raise ScopeError(f"undeclared field {e.name!r}")
        elif isinstance(e, Binary):
            check_expr(e.left, visible)
            check_expr(e.right, visible)
        elif isinstance(e, Call):
            for a in e.args:
                check_expr(a, visible)

    def declare(name: str, local: set[str]) -> None:
        if name in params:
            raise ScopeError(f"{name!r} shadows a parameter")
        if name in local:
            raise ScopeError(f"duplicate declaration of {name!r} in one block")
        local.add(name)

    def check_block(
        stmts: tuple[Stmt, ...],
        outer: tuple[frozenset[str], ...],
        seeded: frozenset[str] = frozenset(),
    ) -> None:
        local: set[str] = set(seeded)
        for s in stmts:
            visible = outer + (frozenset(local),)
            for e in stmt_exprs(s):
                check_expr(e, visible)
            if isinstance(s, VarDecl):
                declare(s.name, local)
            elif isinstance(s, TryCatch):
                check_block(s.body, visible)
                if s.catch_var in params:
                    raise ScopeError(f"{s.catch_var!r} shadows a parameter")
                check_block(s.handler, visible, frozenset({s.catch_var}))
            else:
                for block in child_blocks(s):
                    check_block(block, visible)

    check_block(method.body, ())


def scope_names(method: MethodAst) -> frozenset[str]:
    """Every identifier bound or referenced anywhere in the method.

    Used as the freshness set when filling holes: a fill token colliding
    with any of these names could capture or be captured.
    """
    from .nodes import iter_exprs, iter_stmts

    names = {n for n, _ in method.params} | {n for n, _ in method.fields_decl}
    for s in iter_stmts(method.body):
        if isinstance(s, VarDecl):
            names.add(s.name)
        elif isinstance(s, TryCatch):
            names.add(s.catch_var)
    for e in iter_exprs(method.body):
        if isinstance(e, Ident):
            names.add(e.name)
        elif isinstance(e, FieldAccess):
            names.add(e.name)
    return frozenset(names)
