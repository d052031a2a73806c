"""Subtokenization of identifiers and literals.

Splits camelCase, snake_case and digit/letter boundaries, lowercases the
pieces, and drops anything empty. Non-alphanumeric characters separate
pieces. "indexOfTarget" -> [index, of, target]; "get_file2Name" ->
[get, file, 2, name]; "HTTPServer" -> [http, server].
"""

from __future__ import annotations


def subtokenize(text: str) -> list[str]:
    pieces: list[str] = []
    current: list[str] = []

    def flush() -> None:
        if current:
            pieces.append("".join(current).lower())
            current.clear()

    prev = ""
    for i, ch in enumerate(text):
        if not ch.isalnum():
            flush()
            prev = ""
            continue
        if current:
            nxt = text[i + 1] if i + 1 < len(text) else ""
            if ch.isupper() and (prev.islower() or prev.isdigit()):
                flush()  # fooBar / 2Bar
            elif ch.isupper() and prev.isupper() and nxt.islower():
                flush()  # HTTPServer -> HTTP | Server
            elif ch.isdigit() != prev.isdigit() and prev != "":
                flush()  # file2 -> file | 2
        current.append(ch)
        prev = ch
    flush()
    return pieces
