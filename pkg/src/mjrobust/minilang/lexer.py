"""Lexer for MJ source text.

Token kinds:
    kw      reserved word (value = lexeme); true/false lex as `bool` instead
    ident   identifier
    int     non-negative integer literal (value: int)
    bool    `true` or `false` (value: bool)
    str     double-quoted string literal (value: content, no escapes)
    hole    `⟦Hi⟧` (value: index)
    punctuation and operators use the lexeme itself as the kind:
    ( ) { } ; , : . = == != < > + - * / && ||

Offsets are byte offsets into the UTF-8 encoding of the source, both on
tokens and in LexError.
"""

from __future__ import annotations

from dataclasses import dataclass

from .nodes import KEYWORDS, hole_index, hole_lexeme

_TWO_CHAR = ("==", "!=", "&&", "||")
_ONE_CHAR = "(){};,:.=<>+-*/"

# Characters allowed inside a string literal. Quotes, backslashes, newlines
# and the hole brackets are excluded; there are no escape sequences.
_STR_FORBIDDEN = {'"', "\\", "\n", "\r", "⟦", "⟧"}


class LexError(Exception):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    offset: int
    value: object = None


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    i = 0
    byte_off = 0
    n = len(source)

    def advance(text: str) -> None:
        nonlocal i, byte_off
        i += len(text)
        byte_off += len(text.encode("utf-8"))

    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            advance(ch)
            continue
        start = byte_off
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            text = source[i:j]
            if text == "true" or text == "false":
                tokens.append(Token("bool", text, start, text == "true"))
            elif text in KEYWORDS:
                tokens.append(Token("kw", text, start, text))
            else:
                tokens.append(Token("ident", text, start))
            advance(text)
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            text = source[i:j]
            tokens.append(Token("int", text, start, int(text)))
            advance(text)
            continue
        if ch == '"':
            j = i + 1
            while j < n and source[j] != '"':
                if source[j] in ("\n", "\r"):
                    raise LexError("unterminated string", start)
                j += 1
            if j >= n:
                raise LexError("unterminated string", start)
            content = source[i + 1 : j]
            bad = set(content) & _STR_FORBIDDEN
            if bad and hole_index(content) is None:
                # the sole string containing hole brackets is a hole itself
                raise LexError(f"character {sorted(bad)[0]!r} not allowed in string", start)
            text = source[i : j + 1]
            tokens.append(Token("str", text, start, content))
            advance(text)
            continue
        if ch == "⟦":
            j = i + 1
            if j < n and source[j] == "H":
                j += 1
                k = j
                while k < n and source[k].isdigit():
                    k += 1
                if k > j and k < n and source[k] == "⟧" and source[j] != "0":
                    index = int(source[j:k])
                    text = hole_lexeme(index)
                    tokens.append(Token("hole", text, start, index))
                    advance(text)
                    continue
            raise LexError("malformed hole lexeme", start)
        two = source[i : i + 2]
        if two in _TWO_CHAR:
            tokens.append(Token(two, two, start))
            advance(two)
            continue
        if ch in _ONE_CHAR:
            tokens.append(Token(ch, ch, start))
            advance(ch)
            continue
        raise LexError(f"illegal character {ch!r}", start)
    return tokens
