"""The MJ mini-language: AST, lexer, parser, printer, interpreter, subtokenizer.

One compilation unit is a single method. Scalar types are int, bool and
string; fields live on an implicit receiver and are accessed as `self.f`.
The reference interpreter is the semantics oracle for every transformation
in this package. See docs/grammar.md for the canonical text grammar.
"""

from .nodes import (
    Assign,
    Binary,
    BoolLit,
    Call,
    ExprStmt,
    FieldAccess,
    Ident,
    If,
    IntLit,
    KEYWORDS,
    MethodAst,
    Print,
    Return,
    StrLit,
    Throw,
    TryCatch,
    VarDecl,
    While,
    hole_index,
    hole_lexeme,
)
from .lexer import LexError, Token, tokenize
from .parser import ParseError, ScopeError, parse, parse_source, scope_check, scope_names
from .printer import body_source, expr_source, to_source
from .interp import (
    ArityError,
    DEFAULT_FUEL,
    EvalTypeError,
    ExecOutcome,
    Returned,
    Threw,
    functional_eq,
    interpret,
)
from .subtok import subtokenize

__all__ = [
    "ArityError",
    "Assign",
    "Binary",
    "BoolLit",
    "Call",
    "DEFAULT_FUEL",
    "EvalTypeError",
    "ExecOutcome",
    "ExprStmt",
    "FieldAccess",
    "Ident",
    "If",
    "IntLit",
    "KEYWORDS",
    "LexError",
    "MethodAst",
    "ParseError",
    "Print",
    "Return",
    "Returned",
    "ScopeError",
    "StrLit",
    "Threw",
    "Throw",
    "Token",
    "TryCatch",
    "VarDecl",
    "While",
    "body_source",
    "expr_source",
    "functional_eq",
    "hole_index",
    "hole_lexeme",
    "interpret",
    "parse",
    "parse_source",
    "scope_check",
    "scope_names",
    "subtokenize",
    "to_source",
    "tokenize",
]
