import pytest

from mjrobust.minilang import LexError, hole_lexeme, tokenize


def kinds(source):
    return [t.kind for t in tokenize(source)]


def test_empty_input():
    assert tokenize("") == []


def test_simple_assignment_tokens():
    toks = tokenize("x = 1")
    assert [(t.kind, t.text) for t in toks] == [("ident", "x"), ("=", "="), ("int", "1")]
    assert toks[2].value == 1


def test_if_snippet_token_stream():
    # hand count against the grammar: if ( x > 0 ) { y = false ; } is 12 tokens
    toks = tokenize("if (x > 0) { y = false; }")
    assert len(toks) == 12
    assert [t.kind for t in toks[-3:]] == ["bool", ";", "}"]
    assert toks[-3].value is False


def test_keywords_and_identifiers():
    toks = tokenize("while whileLoop true truthy")
    assert [(t.kind, t.text) for t in toks] == [
        ("kw", "while"),
        ("ident", "whileLoop"),
        ("bool", "true"),
        ("ident", "truthy"),
    ]


def test_two_char_operators_max_munch():
    assert kinds("== = != < > && ||") == ["==", "=", "!=", "<", ">", "&&", "||"]


def test_string_literal():
    (tok,) = tokenize('"hello there"')
    assert tok.kind == "str" and tok.value == "hello there"


def test_hole_lexemes():
    toks = tokenize(f"{hole_lexeme(1)} \"{hole_lexeme(12)}\"")
    assert toks[0].kind == "hole" and toks[0].value == 1
    assert toks[1].kind == "str" and toks[1].value == hole_lexeme(12)


def test_illegal_character_offset_is_bytes():
    # the hole bracket is 3 bytes in utf-8, so '?' sits at byte offset 8
    source = f"{hole_lexeme(1)} ?"
    with pytest.raises(LexError) as exc:
        tokenize(source)
    assert exc.value.offset == len(source[:-1].encode("utf-8"))


def test_unterminated_string():
    with pytest.raises(LexError) as exc:
        tokenize('x = "abc')
    assert exc.value.offset == 4


def test_newline_terminates_string_illegally():
    with pytest.raises(LexError):
        tokenize('"ab\ncd"')


def test_hole_bracket_inside_ordinary_string_rejected():
    with pytest.raises(LexError):
        tokenize('"ab⟦cd"')


def test_malformed_hole():
    for bad in ("⟦H0⟧", "⟦H⟧", "⟦X1⟧"):
        with pytest.raises(LexError):
            tokenize(bad)


def test_lone_ampersand_rejected():
    with pytest.raises(LexError):
        tokenize("a & b")
