import pytest
from hypothesis import given, settings, strategies as st

from mjrobust import corpusgen
from mjrobust.minilang import (
    ArityError,
    EvalTypeError,
    Returned,
    Threw,
    functional_eq,
    interpret,
    parse_source,
)


def run(src, args=(), fields=None, fuel=100_000):
    return interpret(parse_source(src), list(args), fields, fuel)


def test_addition():
    out = run("method f() { return 1 + 2; }")
    assert out.result == Returned(3)


def test_division_by_zero_throws():
    assert run("method f() { return 1 / 0; }").result == Threw("div0")


def test_division_truncates_toward_zero():
    src = "method f(a: int, b: int) { return (0 - a) / b; }"
    assert run(src, [7, 2]).result == Returned(-3)


def test_while_loop_sum():
    src = "method f(x: int, s: int) { while (x > 0) { s = s + x; x = x - 1; } return s; }"
    assert run(src, [3, 0]).result == Returned(6)


def test_fields_default_and_final_state():
    src = """method f(n: int) {
      field total: int;
      self.total = self.total + n;
      return self.total;
    }"""
    out = run(src, [5])
    assert out.result == Returned(5)
    assert out.field_state == {"total": 5}
    out = run(src, [5], {"total": 10})
    assert out.result == Returned(15)


def test_print_trace_recorded_but_not_functional():
    with_print = run('method f() { print("x"); return 1; }')
    without = run("method f() { return 1; }")
    assert with_print.stdout_trace == ("x",)
    assert functional_eq(with_print, without)


def test_print_formats_values():
    out = run("method f() { print(true); print(3); print(\"s\"); return 0; }")
    assert out.stdout_trace == ("true", "3", "s")


def test_throw_and_catch():
    src = """method f() {
      try { throw "boom"; } catch (e) { return e; }
      return "no";
    }"""
    assert run(src).result == Returned("boom")


def test_catch_rethrow_preserves_tag():
    src = """method f() {
      try { return 1 / 0; } catch (e) { throw e; }
      return 0;
    }"""
    assert run(src).result == Threw("div0")


def test_uncaught_throw():
    assert run('method f() { throw "bad"; }').result == Threw("bad")


def test_short_circuit_avoids_division():
    src = "method f(b: bool) { if (b && 1 / 0 == 1) { return 1; } return 0; }"
    assert run(src, [False]).result == Returned(0)
    assert run(src, [True]).result == Threw("div0")


def test_len_builtin():
    assert run('method f() { return len("abcd"); }').result == Returned(4)
    with pytest.raises(EvalTypeError):
        run("method f() { return len(3); }")


def test_arity_and_type_errors():
    with pytest.raises(ArityError):
        run("method f(a: int) { return a; }", [])
    with pytest.raises(EvalTypeError):
        run("method f(a: int) { return a; }", [True])
    with pytest.raises(EvalTypeError):
        run("method f() { return 1 + true; }")
    with pytest.raises(EvalTypeError):
        run('method f() { return "a" == 1; }')
    with pytest.raises(EvalTypeError):
        run("method f() { throw 3; }")


def test_string_concat_and_comparison():
    assert run('method f() { return "ab" + "cd"; }').result == Returned("abcd")
    assert run('method f() { return "x" == "x"; }').result == Returned(True)


def test_fuel_timeout_is_not_catchable():
    src = """method f() {
      try { while (true) { var x: int = 0; } } catch (e) { return e; }
      return "done";
    }"""
    assert run(src, fuel=500).result == Threw("timeout")


def test_fuel_must_be_positive():
    with pytest.raises(ValueError):
        run("method f() { return 0; }", fuel=0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9), st.integers(0, 5), st.integers(0, 100))
def test_determinism_and_fuel_monotonicity(seed, battery, extra_fuel):
    _, method = corpusgen.generate_one(seed)
    ((args, fields),) = corpusgen.sample_inputs(method, 1, battery)
    base = interpret(method, args, fields, fuel=50_000)
    again = interpret(method, args, fields, fuel=50_000)
    assert base == again
    if isinstance(base.result, Returned):
        bigger = interpret(method, args, fields, fuel=50_000 + extra_fuel)
        assert bigger == base
