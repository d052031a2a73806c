"""Tree-walking reference interpreter for MJ.

Observable behavior of a run is the ExecOutcome: the result (a returned
value or a thrown exception tag), the final field state, and the stdout
trace. Equivalence checks compare result and field state only, because
print-inserting rewrites change stdout by construction; `functional_eq`
implements that comparison.

Exceptions are string tags. `throw` of a string and division by zero
(tag "div0") are the only MJ-level exception sources; try/catch catches
both. Exhausting the fuel budget yields the outcome Threw("timeout"),
which is not catchable, so a run that returns under some fuel returns
identically under any larger fuel.
"""

from __future__ import annotations

from dataclasses import dataclass

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
    Stmt,
    StrLit,
    Throw,
    TryCatch,
    VarDecl,
    While,
)

Value = int | bool | str

DEFAULT_FUEL = 100_000


class ArityError(Exception):
    pass


class EvalTypeError(Exception):
    pass


@dataclass(frozen=True)
class Returned:
    value: Value | None


@dataclass(frozen=True)
class Threw:
    tag: str


@dataclass(frozen=True)
class ExecOutcome:
    result: Returned | Threw
    field_state: dict[str, Value]
    stdout_trace: tuple[str, ...]


def functional_eq(a: ExecOutcome, b: ExecOutcome) -> bool:
    """Equality on (result, field_state); the stdout trace is ignored.

    Field states are compared positionally (declaration order) rather
    than by name: fields denote the same storage locations across a
    field renaming, and the state dict preserves declaration order.
    """
    return a.result == b.result and tuple(a.field_state.values()) == tuple(
        b.field_state.values()
    )


class _Return(Exception):
    def __init__(self, value):
        self.value = value


class _Throw(Exception):
    def __init__(self, tag: str):
        self.tag = tag


class _OutOfFuel(Exception):
    pass


def _type_of(v: Value) -> str:
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    return "string"


_DEFAULTS: dict[str, Value] = {"int": 0, "bool": False, "string": ""}


def _to_print(v: Value) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def interpret(
    method: MethodAst,
    args: list[Value],
    field_init: dict[str, Value] | None = None,
    fuel: int = DEFAULT_FUEL,
) -> ExecOutcome:
    """Run `method` on `args`; deterministic, evaluation order left-to-right."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    if len(args) != len(method.params):
        raise ArityError(f"{method.name} takes {len(method.params)} args, got {len(args)}")
    for v, (pname, ty) in zip(args, method.params):
        if _type_of(v) != ty:
            raise EvalTypeError(f"argument {pname!r} expects {ty}, got {_type_of(v)}")

    field_types = dict(method.fields_decl)
    fields: dict[str, Value] = {}
    for name, ty in method.fields_decl:
        init = (field_init or {}).get(name, _DEFAULTS[ty])
        if _type_of(init) != ty:
            raise EvalTypeError(f"field {name!r} expects {ty}, got {_type_of(init)}")
        fields[name] = init

    # each env entry maps name -> [declared type, value]
    base = {p: [ty, v] for (p, ty), v in zip(method.params, args)}
    env: list[dict[str, list]] = [base]
    trace: list[str] = []
    budget = [fuel]

    def spend() -> None:
        budget[0] -= 1
        if budget[0] < 0:
            raise _OutOfFuel()

    def lookup(name: str) -> list:
        for scope in reversed(env):
            if name in scope:
                return scope[name]
        raise EvalTypeError(f"unbound identifier {name!r}")

    def ev(e: Expr) -> Value:
        spend()
        if isinstance(e, IntLit):
            return e.value
        if isinstance(e, BoolLit):
            return e.value
        if isinstance(e, StrLit):
            return e.value
        if isinstance(e, Ident):
            return lookup(e.name)[1]
        if isinstance(e, FieldAccess):
            return fields[e.name]
        if isinstance(e, Call):
            if e.func != "len":
                raise EvalTypeError(f"unknown builtin {e.func!r}")
            if len(e.args) != 1:
                raise ArityError("len takes 1 argument")
            arg = ev(e.args[0])
            if not isinstance(arg, str):
                raise EvalTypeError("len expects a string")
            return len(arg)
        assert isinstance(e, Binary)
        if e.op in ("&&", "||"):
            left = ev(e.left)
            if not isinstance(left, bool):
                raise EvalTypeError(f"{e.op} expects bool operands")
            if e.op == "&&" and not left:
                return False
            if e.op == "||" and left:
                return True
            right = ev(e.right)
            if not isinstance(right, bool):
                raise EvalTypeError(f"{e.op} expects bool operands")
            return right
        left = ev(e.left)
        right = ev(e.right)
        if e.op in ("==", "!="):
            if _type_of(left) != _type_of(right):
                raise EvalTypeError(f"{e.op} on mixed types")
            return (left == right) if e.op == "==" else (left != right)
        if e.op == "+":
            if isinstance(left, bool) or isinstance(right, bool):
                raise EvalTypeError("+ expects int or string operands")
            if isinstance(left, int) and isinstance(right, int):
                return left + right
            if isinstance(left, str) and isinstance(right, str):
                return left + right
            raise EvalTypeError("+ on mixed types")
        if not (isinstance(left, int) and not isinstance(left, bool)):
            raise EvalTypeError(f"{e.op} expects int operands")
        if not (isinstance(right, int) and not isinstance(right, bool)):
            raise EvalTypeError(f"{e.op} expects int operands")
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        if e.op == "/":
            if right == 0:
                raise _Throw("div0")
            q = abs(left) // abs(right)  # truncation toward zero
            return q if (left >= 0) == (right >= 0) else -q
        if e.op == "<":
            return left < right
        assert e.op == ">"
        return left > right

    def run_block(stmts: tuple[Stmt, ...], seeded: dict[str, list] | None = None) -> None:
        env.append(seeded if seeded is not None else {})
        try:
            for s in stmts:
                run_stmt(s)
        finally:
            env.pop()

    def run_stmt(s: Stmt) -> None:
        spend()
        if isinstance(s, VarDecl):
            v = ev(s.init)
            if _type_of(v) != s.ty:
                raise EvalTypeError(f"var {s.name!r} expects {s.ty}, got {_type_of(v)}")
            env[-1][s.name] = [s.ty, v]
        elif isinstance(s, Assign):
            v = ev(s.value)
            if isinstance(s.target, Ident):
                binding = lookup(s.target.name)
                if _type_of(v) != binding[0]:
                    raise EvalTypeError(
                        f"assigning {_type_of(v)} to {binding[0]} variable {s.target.name!r}"
                    )
                binding[1] = v
            else:
                ty = field_types[s.target.name]
                if _type_of(v) != ty:
                    raise EvalTypeError(
                        f"assigning {_type_of(v)} to {ty} field {s.target.name!r}"
                    )
                fields[s.target.name] = v
        elif isinstance(s, If):
            cond = ev(s.cond)
            if not isinstance(cond, bool):
                raise EvalTypeError("if condition must be bool")
            run_block(s.then if cond else s.orelse)
        elif isinstance(s, While):
            while True:
                cond = ev(s.cond)
                if not isinstance(cond, bool):
                    raise EvalTypeError("while condition must be bool")
                if not cond:
                    break
                run_block(s.body)
        elif isinstance(s, Return):
            raise _Return(ev(s.value))
        elif isinstance(s, Print):
            trace.append(_to_print(ev(s.value)))
        elif isinstance(s, TryCatch):
            try:
                run_block(s.body)
            except _Throw as exc:
                run_block(s.handler, {s.catch_var: ["string", exc.tag]})
        elif isinstance(s, Throw):
            v = ev(s.value)
            if not isinstance(v, str):
                raise EvalTypeError("throw expects a string tag")
            raise _Throw(v)
        else:
            assert isinstance(s, ExprStmt)
            ev(s.value)

    try:
        run_block(method.body)
        result: Returned | Threw = Returned(None)
    except _Return as r:
        result = Returned(r.value)
    except _Throw as t:
        result = Threw(t.tag)
    except _OutOfFuel:
        result = Threw("timeout")
    return ExecOutcome(result, dict(fields), tuple(trace))
