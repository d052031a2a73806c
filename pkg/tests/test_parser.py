import pytest
from hypothesis import given, settings, strategies as st

from mjrobust import corpusgen
from mjrobust.adversary import sample_sequences
from mjrobust.minilang import (
    Assign,
    Binary,
    BoolLit,
    Ident,
    If,
    IntLit,
    ParseError,
    Return,
    ScopeError,
    parse,
    parse_source,
    to_source,
    tokenize,
)
from mjrobust.transforms import TRANSFORM_IDS, apply_sequence


def test_minimal_method():
    m = parse_source("method f() { return 0; }")
    assert m.name == "f"
    assert m.body == (Return(IntLit(0)),)


def test_unbraced_if_parses_like_braced():
    unbraced = parse_source(
        "method f(x: int) { var y: bool = true; if (x > 0) y = false; return y; }"
    )
    braced = parse_source(
        "method f(x: int) { var y: bool = true; if (x > 0) { y = false; } return y; }"
    )
    assert unbraced == braced
    cond_stmt = unbraced.body[1]
    assert cond_stmt == If(
        Binary(">", Ident("x"), IntLit(0)),
        (Assign(Ident("y"), BoolLit(False)),),
        (),
    )


def test_duplicate_params_rejected():
    with pytest.raises(ScopeError):
        parse_source("method f(a: int, a: int) { return a; }")


def test_undeclared_identifier_rejected():
    with pytest.raises(ScopeError):
        parse_source("method f() { return zap; }")


def test_local_may_not_shadow_param():
    with pytest.raises(ScopeError):
        parse_source("method f(a: int) { var a: int = 0; return a; }")


def test_sibling_blocks_may_reuse_names():
    src = """method f(n: int) {
      if (n > 0) { var t: int = 1; n = t; }
      if (n > 1) { var t: int = 2; n = t; }
      return n;
    }"""
    parse_source(src)


def test_nested_shadowing_of_local_allowed():
    src = """method f(n: int) {
      var t: int = 1;
      while (n > 0) { var t: int = 2; n = n - t; }
      return t;
    }"""
    parse_source(src)


def test_duplicate_in_same_block_rejected():
    with pytest.raises(ScopeError):
        parse_source("method f() { var t: int = 1; var t: int = 2; return t; }")


def test_undeclared_field_rejected():
    with pytest.raises(ScopeError):
        parse_source("method f() { return self.x; }")


def test_catch_var_scoping():
    src = """method f() {
      try { throw "boom"; } catch (e) { return e; }
      return "ok";
    }"""
    parse_source(src)
    with pytest.raises(ScopeError):
        parse_source('method f() { try { return "a"; } catch (e) { return x; } return "b"; }')


def test_parse_error_reports_offset_and_expectation():
    with pytest.raises(ParseError):
        parse(tokenize("method f( { return 0; }"))
    with pytest.raises(ParseError):
        parse(tokenize("method f() { return 0; } extra"))


def test_calls_limited_to_builtins():
    with pytest.raises(ParseError):
        parse_source("method f(g: int) { return g(); }")


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_roundtrip_generated_methods(seed):
    _, method = corpusgen.generate_one(seed)
    assert parse_source(to_source(method)) == method


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 3), st.integers(1, 5))
def test_roundtrip_transformed_sketches(seed, seq_seed, k):
    _, method = corpusgen.generate_one(seed)
    (seq,) = sample_sequences(TRANSFORM_IDS, k, 1, seq_seed)
    sketch = apply_sequence(seq, method)
    assert parse_source(to_source(sketch.ast)) == sketch.ast
