"""Deterministic JSONL reading and writing shared by stores and reports."""

from __future__ import annotations

import json
from pathlib import Path


class FormatError(Exception):
    def __init__(self, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line


def dumps(obj) -> str:
    """Canonical single-line JSON: sorted keys, no trailing whitespace."""
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, separators=(",", ": "))


def write_jsonl(path: str | Path, records: list[dict]) -> None:
    text = "".join(dumps(r) + "\n" for r in records)
    Path(path).write_text(text, encoding="utf-8")


def read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"bad JSON: {exc.msg}", lineno) from exc
    return out
