"""Semantics-preserving transformations producing sketches with holes.

Each transform is a partial application: it rewrites the tree and leaves
at most one fresh hole index where its parameter would go (renames put
the same index at every occurrence of the renamed name; the true/false
replacement shares one index between the two string leaves it creates).
Sequences compose left to right; a step that does not apply to its
intermediate contributes identity, so every sequence is defined on every
program. `fill` closes a sketch back into a runnable method.

Random choices inside a transform (which name, begin or end) are driven
entirely by its selection seed, so applying the same (id, seed) to the
same tree is deterministic.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field

from .minilang.nodes import (
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
    KEYWORDS,
    MethodAst,
    Print,
    Return,
    Stmt,
    StrLit,
    Throw,
    TryCatch,
    VarDecl,
    While,
    hole_index,
    hole_lexeme,
    iter_exprs,
    iter_stmts,
)
from .minilang.parser import scope_check, scope_names

TRANSFORM_IDS = (
    "AddDeadCode",
    "InsertPrintStatement",
    "RenameField",
    "RenameLocalVariable",
    "RenameParameter",
    "ReplaceTrueFalse",
    "UnrollWhile",
    "WrapTryCatch",
)

IDENT_KIND = "identifier"
STRING_KIND = "string"

# a fill token must look like a plain lowercase word
_FILL_TOKEN_RE = re.compile(r"[a-z][a-z0-9]*\Z")


class NotApplicable(Exception):
    pass


class IncompleteAssignment(Exception):
    pass


class KindMismatch(Exception):
    pass


class CollisionError(Exception):
    pass


@dataclass(frozen=True)
class Transform:
    id: str
    selection_seed: int

    def __post_init__(self):
        if self.id not in TRANSFORM_IDS:
            raise ValueError(f"unknown transform id {self.id!r}")


@dataclass(frozen=True)
class TransformSeq:
    steps: tuple[Transform, ...] = ()

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Sketch:
    ast: MethodAst
    hole_kinds: dict[int, str] = field(default_factory=dict)
    provenance: TransformSeq = TransformSeq()

    @property
    def hole_count(self) -> int:
        return len(self.hole_kinds)


def hole_kinds_of(method: MethodAst) -> dict[int, str]:
    """Derive the hole index -> kind map from the tree itself.

    Identifier positions (declarations, uses, field names, catch vars)
    and string-literal values are scanned; an index occurring as both
    kinds would be malformed and raises ValueError.
    """
    kinds: dict[int, str] = {}

    def note(idx: int | None, kind: str) -> None:
        if idx is None:
            return
        if kinds.setdefault(idx, kind) != kind:
            raise ValueError(f"hole {idx} occurs with conflicting kinds")

    for name, _ in method.params:
        note(hole_index(name), IDENT_KIND)
    for name, _ in method.fields_decl:
        note(hole_index(name), IDENT_KIND)
    for s in iter_stmts(method.body):
        if isinstance(s, VarDecl):
            note(hole_index(s.name), IDENT_KIND)
        elif isinstance(s, TryCatch):
            note(hole_index(s.catch_var), IDENT_KIND)
    for e in iter_exprs(method.body):
        if isinstance(e, Ident):
            note(hole_index(e.name), IDENT_KIND)
        elif isinstance(e, FieldAccess):
            note(hole_index(e.name), IDENT_KIND)
        elif isinstance(e, StrLit):
            note(hole_index(e.value), STRING_KIND)
    return kinds


def _validate_sketch(sk: Sketch) -> Sketch:
    derived = hole_kinds_of(sk.ast)
    if derived != sk.hole_kinds:
        raise ValueError("hole kind map does not match tree")
    if sorted(derived) != list(range(1, len(derived) + 1)):
        raise ValueError("hole indices must be contiguous from 1")
    return sk


def as_sketch(method: MethodAst) -> Sketch:
    """View a complete method as the zero-hole sketch of the empty sequence."""
    return Sketch(method, hole_kinds_of(method), TransformSeq())


# --- target enumeration (shared by applicable/apply; holes are never targets) ---


def _local_names(method: MethodAst) -> list[str]:
    seen: list[str] = []
    for s in iter_stmts(method.body):
        if isinstance(s, VarDecl) and hole_index(s.name) is None and s.name not in seen:
            seen.append(s.name)
    return seen


def _param_names(method: MethodAst) -> list[str]:
    return [n for n, _ in method.params if hole_index(n) is None]


def _field_names(method: MethodAst) -> list[str]:
    return [n for n, _ in method.fields_decl if hole_index(n) is None]


def _count_bools(method: MethodAst) -> int:
    return sum(1 for e in iter_exprs(method.body) if isinstance(e, BoolLit))


def _count_whiles(method: MethodAst) -> int:
    return sum(1 for s in iter_stmts(method.body) if isinstance(s, While))


def applicable(transform: Transform, method: MethodAst) -> bool:
    """True iff applying the transform would change the tree."""
    tid = transform.id
    if tid in ("AddDeadCode", "InsertPrintStatement", "WrapTryCatch"):
        return True
    if tid == "RenameLocalVariable":
        return bool(_local_names(method))
    if tid == "RenameParameter":
        return bool(_param_names(method))
    if tid == "RenameField":
        return bool(_field_names(method))
    if tid == "ReplaceTrueFalse":
        return _count_bools(method) > 0
    assert tid == "UnrollWhile"
    return _count_whiles(method) > 0


# --- renaming and positional rewrites ---


def _rewrite_expr(e: Expr, fn) -> Expr:
    e = fn(e)
    if isinstance(e, Binary):
        return Binary(e.op, _rewrite_expr(e.left, fn), _rewrite_expr(e.right, fn))
    if isinstance(e, Call):
        return Call(e.func, tuple(_rewrite_expr(a, fn) for a in e.args))
    return e


def _rewrite_body(body: tuple[Stmt, ...], expr_fn, stmt_fn=None) -> tuple[Stmt, ...]:
    def walk_stmt(s: Stmt) -> Stmt:
        if isinstance(s, VarDecl):
            s = VarDecl(s.name, s.ty, _rewrite_expr(s.init, expr_fn))
        elif isinstance(s, Assign):
            s = Assign(_rewrite_expr(s.target, expr_fn), _rewrite_expr(s.value, expr_fn))
        elif isinstance(s, If):
            s = If(
                _rewrite_expr(s.cond, expr_fn),
                tuple(walk_stmt(x) for x in s.then),
                tuple(walk_stmt(x) for x in s.orelse),
            )
        elif isinstance(s, While):
            s = While(_rewrite_expr(s.cond, expr_fn), tuple(walk_stmt(x) for x in s.body))
        elif isinstance(s, Return):
            s = Return(_rewrite_expr(s.value, expr_fn))
        elif isinstance(s, Print):
            s = Print(_rewrite_expr(s.value, expr_fn))
        elif isinstance(s, TryCatch):
            s = TryCatch(
                tuple(walk_stmt(x) for x in s.body),
                s.catch_var,
                tuple(walk_stmt(x) for x in s.handler),
            )
        elif isinstance(s, Throw):
            s = Throw(_rewrite_expr(s.value, expr_fn))
        elif isinstance(s, ExprStmt):
            s = ExprStmt(_rewrite_expr(s.value, expr_fn))
        if stmt_fn is not None:
            s = stmt_fn(s)
        return s

    return tuple(walk_stmt(s) for s in body)


def _rename_ident(method: MethodAst, old: str, new: str) -> MethodAst:
    """Rename every binding and use of a param/local/catch name."""

    def on_expr(e: Expr) -> Expr:
        if isinstance(e, Ident) and e.name == old:
            return Ident(new)
        return e

    def on_stmt(s: Stmt) -> Stmt:
        if isinstance(s, VarDecl) and s.name == old:
            return VarDecl(new, s.ty, s.init)
        if isinstance(s, TryCatch) and s.catch_var == old:
            return TryCatch(s.body, new, s.handler)
        return s

    params = tuple((new if n == old else n, t) for n, t in method.params)
    body = _rewrite_body(method.body, on_expr, on_stmt)
    return MethodAst(method.name, params, method.fields_decl, body)


def _rename_field(method: MethodAst, old: str, new: str) -> MethodAst:
    def on_expr(e: Expr) -> Expr:
        if isinstance(e, FieldAccess) and e.name == old:
            return FieldAccess(new)
        return e

    fields = tuple((new if n == old else n, t) for n, t in method.fields_decl)
    body = _rewrite_body(method.body, on_expr)
    return MethodAst(method.name, method.params, fields, body)


def _replace_nth_bool(method: MethodAst, n: int, hole: str) -> MethodAst:
    counter = [0]

    def on_expr(e: Expr) -> Expr:
        if isinstance(e, BoolLit):
            if counter[0] == n:
                counter[0] += 1
                op = "==" if e.value else "!="
                return Binary(op, StrLit(hole), StrLit(hole))
            counter[0] += 1
        return e

    body = _rewrite_body(method.body, on_expr)
    return MethodAst(method.name, method.params, method.fields_decl, body)


def _unroll_nth_while(method: MethodAst, n: int) -> MethodAst:
    counter = [0]

    def walk(stmts: tuple[Stmt, ...]) -> tuple[Stmt, ...]:
        out = []
        for s in stmts:
            if isinstance(s, While):
                if counter[0] == n:
                    counter[0] += 1
                    inner = While(s.cond, walk(s.body))
                    out.append(If(s.cond, s.body + (inner,), ()))
                    continue
                counter[0] += 1
                out.append(While(s.cond, walk(s.body)))
            elif isinstance(s, If):
                out.append(If(s.cond, walk(s.then), walk(s.orelse)))
            elif isinstance(s, TryCatch):
                out.append(TryCatch(walk(s.body), s.catch_var, walk(s.handler)))
            else:
                out.append(s)
        return tuple(out)

    body = walk(method.body)
    return MethodAst(method.name, method.params, method.fields_decl, body)


# --- the transforms themselves ---


def apply_one(transform: Transform, sketch: Sketch) -> Sketch:
    """Apply one transform to a (possibly holey) tree, adding <= 1 hole."""
    method = sketch.ast
    if not applicable(transform, method):
        raise NotApplicable(f"{transform.id} does not apply")
    rng = random.Random(transform.selection_seed)
    next_index = max(sketch.hole_kinds, default=0) + 1
    hole = hole_lexeme(next_index)
    kinds = dict(sketch.hole_kinds)
    tid = transform.id

    if tid == "AddDeadCode":
        dead = If(BoolLit(False), (VarDecl(hole, "int", IntLit(0)),), ())
        at_begin = rng.choice((True, False))
        body = (dead,) + method.body if at_begin else method.body + (dead,)
        ast = MethodAst(method.name, method.params, method.fields_decl, body)
        kinds[next_index] = IDENT_KIND
    elif tid == "InsertPrintStatement":
        stmt = Print(StrLit(hole))
        at_begin = rng.choice((True, False))
        body = (stmt,) + method.body if at_begin else method.body + (stmt,)
        ast = MethodAst(method.name, method.params, method.fields_decl, body)
        kinds[next_index] = STRING_KIND
    elif tid == "RenameLocalVariable":
        target = rng.choice(_local_names(method))
        ast = _rename_ident(method, target, hole)
        kinds[next_index] = IDENT_KIND
    elif tid == "RenameParameter":
        target = rng.choice(_param_names(method))
        ast = _rename_ident(method, target, hole)
        kinds[next_index] = IDENT_KIND
    elif tid == "RenameField":
        target = rng.choice(_field_names(method))
        ast = _rename_field(method, target, hole)
        kinds[next_index] = IDENT_KIND
    elif tid == "ReplaceTrueFalse":
        pos = rng.randrange(_count_bools(method))
        ast = _replace_nth_bool(method, pos, hole)
        kinds[next_index] = STRING_KIND
    elif tid == "UnrollWhile":
        pos = rng.randrange(_count_whiles(method))
        ast = _unroll_nth_while(method, pos)
    else:
        assert tid == "WrapTryCatch"
        wrapped = TryCatch(method.body, hole, (Throw(Ident(hole)),))
        ast = MethodAst(method.name, method.params, method.fields_decl, (wrapped,))
        kinds[next_index] = IDENT_KIND

    out = Sketch(ast, kinds, TransformSeq(sketch.provenance.steps + (transform,)))
    return _validate_sketch(out)


def apply_sequence(seq: TransformSeq, method: MethodAst) -> Sketch:
    """Fold the sequence over the method; inapplicable steps are skipped."""
    current = as_sketch(method)
    for t in seq.steps:
        if applicable(t, current.ast):
            current = apply_one(t, current)
    return _validate_sketch(Sketch(current.ast, current.hole_kinds, seq))


# --- closing a sketch ---


def valid_fill_token(token: str) -> bool:
    """Shape check shared by both hole kinds: lowercase word, not reserved."""
    return bool(_FILL_TOKEN_RE.match(token)) and token not in KEYWORDS


def fill(sketch: Sketch, assignment: dict[int, str]) -> MethodAst:
    """Replace every hole occurrence by its assigned token.

    The assignment must cover exactly the sketch's hole indices, each
    token must be a plain lowercase word (valid both as an identifier and
    inside a string literal) that is not a reserved word, all tokens must
    be pairwise distinct, and none may collide with a name already in the
    sketch.
    """
    want = set(sketch.hole_kinds)
    got = set(assignment)
    if want != got:
        missing, extra = sorted(want - got), sorted(got - want)
        raise IncompleteAssignment(f"missing holes {missing}, unknown holes {extra}")
    for idx, token in assignment.items():
        if not valid_fill_token(token):
            raise KindMismatch(f"token {token!r} is not a valid fill for hole {idx}")
    values = list(assignment.values())
    if len(set(values)) != len(values):
        raise CollisionError("distinct holes must receive distinct tokens")
    taken = scope_names(sketch.ast)
    for idx, token in assignment.items():
        if token in taken:
            raise CollisionError(f"token {token!r} collides with an existing name")

    by_lexeme = {hole_lexeme(i): tok for i, tok in assignment.items()}

    def sub(name: str) -> str:
        return by_lexeme.get(name, name)

    def on_expr(e: Expr) -> Expr:
        if isinstance(e, Ident):
            return Ident(sub(e.name))
        if isinstance(e, FieldAccess):
            return FieldAccess(sub(e.name))
        if isinstance(e, StrLit):
            return StrLit(sub(e.value))
        return e

    def on_stmt(s: Stmt) -> Stmt:
        if isinstance(s, VarDecl):
            return VarDecl(sub(s.name), s.ty, s.init)
        if isinstance(s, TryCatch):
            return TryCatch(s.body, sub(s.catch_var), s.handler)
        return s

    m = sketch.ast
    params = tuple((sub(n), t) for n, t in m.params)
    fields = tuple((sub(n), t) for n, t in m.fields_decl)
    body = _rewrite_body(m.body, on_expr, on_stmt)
    out = MethodAst(m.name, params, fields, body)
    scope_check(out)
    return out
