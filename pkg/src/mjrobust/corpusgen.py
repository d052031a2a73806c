"""Synthetic labeled corpus of MJ methods.

Each record is one method whose name is composed from a template verb
and a sampled noun, so the summarization task (body -> name subtokens)
is learnable: the noun appears in the parameter names (and often in a
second identifier), and each template has a distinctive body lexicon.
Templates randomize identifier pools, literal values and distractor
declarations, and every template exercises a loop or a conditional so
the transformation suite finds targets in aggregate.

All generated methods parse, scope-check and terminate on the small
input batteries `sample_inputs` produces, which is what makes the
interpreter usable as an equivalence oracle for every record.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .jsonl import FormatError, dumps, read_jsonl
from .minilang.interp import Value
from .minilang.nodes import MethodAst
from .minilang.parser import parse_source
from .minilang.printer import to_source
from .minilang.subtok import subtokenize
from .seeding import derive_seed
from .summodel import INPUT_SPECIALS, OUTPUT_SPECIALS, Vocab, model_tokens

SPLITS = ("train", "valid", "test")

NOUNS = (
    "items",
    "values",
    "scores",
    "entries",
    "tokens",
    "nodes",
    "cells",
    "rows",
    "words",
    "marks",
    "bytes",
    "units",
    "files",
    "keys",
    "names",
    "slots",
    "parts",
    "links",
    "tags",
    "steps",
    "bits",
    "pages",
    "lines",
    "forms",
)

_DISTRACTOR_NAMES = ("temp", "probe", "cursor", "stash", "gauge", "ratio", "depth", "width")
_ECHO_SUFFIXES = ("Left", "Seen", "Copy", "Cache")
_STRING_WORDS = ("", "ax", "bok", "dot", "elm", "frame", "sol")


@dataclass(frozen=True)
class CorpusRecord:
    id: str
    method: MethodAst
    gold_subtokens: tuple[str, ...]
    split: str


def _cap(word: str) -> str:
    return word[0].upper() + word[1:]


def _echo_decl(rng: random.Random, noun: str) -> str:
    suffix = rng.choice(_ECHO_SUFFIXES)
    return f"var {noun}{suffix}: int = {rng.randrange(10)};"


def _distractors(rng: random.Random, noun: str) -> list[str]:
    lines = []
    if rng.random() < 0.6:
        lines.append(_echo_decl(rng, noun))
    for _ in range(rng.randrange(3)):
        name = rng.choice(_DISTRACTOR_NAMES)
        if any(f"var {name}:" in l for l in lines):
            continue
        lines.append(f"var {name}: int = {rng.randrange(10)};")
    return lines


# every template: (rng, noun) -> (name, list of body lines, params, fields)


def _t_sum(rng, noun):
    lines = [
        "var total: int = 0;",
        "var i: int = 0;",
        f"while (i < {noun}) {{",
        "  i = i + 1;",
        "  total = total + i;",
        "}",
        "return total;",
    ]
    return f"sum{_cap(noun)}", lines, [(noun, "int")], []


def _t_count_even(rng, noun):
    lines = [
        "var tally: int = 0;",
        "var v: int = 0;",
        f"while (v < {noun}) {{",
        "  if (v / 2 * 2 == v) {",
        "    tally = tally + 1;",
        "  }",
        "  v = v + 1;",
        "}",
        "return tally;",
    ]
    return f"countEven{_cap(noun)}", lines, [(noun, "int")], []


def _t_find_max(rng, noun):
    lines = [
        f"var best: int = {noun};",
        "if (other > best) {",
        "  best = other;",
        "}",
        "if (extra > best) {",
        "  best = extra;",
        "}",
        "return best;",
    ]
    return f"findMax{_cap(noun)}", lines, [(noun, "int"), ("other", "int"), ("extra", "int")], []


def _t_find_min(rng, noun):
    lines = [
        f"var least: int = {noun};",
        "if (other < least) {",
        "  least = other;",
        "}",
        "return least;",
    ]
    return f"findMin{_cap(noun)}", lines, [(noun, "int"), ("other", "int")], []


def _t_clamp(rng, noun):
    lines = [
        f"if ({noun} < low) {{",
        "  return low;",
        "}",
        f"if (high < {noun}) {{",
        "  return high;",
        "}",
        f"return {noun};",
    ]
    return f"clamp{_cap(noun)}", lines, [(noun, "int"), ("low", "int"), ("high", "int")], []


def _t_double(rng, noun):
    lines = [
        f"var twice: int = {noun} + {noun};",
        f"if (twice < {noun}) {{",
        f"  twice = {noun};",
        "}",
        "return twice;",
    ]
    return f"double{_cap(noun)}", lines, [(noun, "int")], []


def _t_scale(rng, noun):
    lines = [
        "var acc: int = 0;",
        "var i: int = 0;",
        "while (i < factor) {",
        f"  acc = acc + {noun};",
        "  i = i + 1;",
        "}",
        "return acc;",
    ]
    return f"scale{_cap(noun)}", lines, [(noun, "int"), ("factor", "int")], []


def _t_square(rng, noun):
    lines = [
        "var area: int = 0;",
        "var i: int = 0;",
        f"while (i < {noun}) {{",
        f"  area = area + {noun};",
        "  i = i + 1;",
        "}",
        "return area;",
    ]
    return f"square{_cap(noun)}", lines, [(noun, "int")], []


def _t_diff(rng, noun):
    lines = [
        f"var gap: int = {noun} - other;",
        "if (gap < 0) {",
        "  gap = 0 - gap;",
        "}",
        "return gap;",
    ]
    return f"diff{_cap(noun)}", lines, [(noun, "int"), ("other", "int")], []


def _t_pick(rng, noun):
    lines = [
        "if (flag) {",
        f"  return {noun};",
        "}",
        "return fallback;",
    ]
    return f"pick{_cap(noun)}", lines, [("flag", "bool"), (noun, "int"), ("fallback", "int")], []


def _t_toggle(rng, noun):
    lines = [
        f"if ({noun}) {{",
        "  return false;",
        "}",
        "return true;",
    ]
    return f"toggle{_cap(noun)}", lines, [(noun, "bool")], []


def _t_match(rng, noun):
    lines = [
        f"if ({noun} == target) {{",
        "  return true;",
        "}",
        "return false;",
    ]
    return f"match{_cap(noun)}", lines, [(noun, "string"), ("target", "string")], []


def _t_is_empty(rng, noun):
    lines = [
        f"if (len({noun}) == 0) {{",
        "  return true;",
        "}",
        "return false;",
    ]
    return f"is{_cap(noun)}Empty", lines, [(noun, "string")], []


def _t_get_length(rng, noun):
    lines = [
        f"var size: int = len({noun});",
        "if (size < 0) {",
        "  size = 0;",
        "}",
        "return size;",
    ]
    return f"get{_cap(noun)}Length", lines, [(noun, "string")], []


def _t_repeat(rng, noun):
    lines = [
        'var piece: string = "";',
        "var i: int = 0;",
        "while (i < times) {",
        f"  piece = piece + {noun};",
        "  i = i + 1;",
        "}",
        "return piece;",
    ]
    return f"repeat{_cap(noun)}", lines, [(noun, "string"), ("times", "int")], []


def _t_join(rng, noun):
    glue = rng.choice(("dash", "dot", "plus"))
    lines = [
        f'var glue: string = "{glue}";',
        f"if (len({noun}) == 0) {{",
        "  return other;",
        "}",
        f"return {noun} + glue + other;",
    ]
    return f"join{_cap(noun)}", lines, [(noun, "string"), ("other", "string")], []


def _t_track(rng, noun):
    lines = [
        "var i: int = 0;",
        f"while (i < {noun}) {{",
        "  self.total = self.total + i;",
        "  i = i + 1;",
        "}",
        "return self.total;",
    ]
    return f"track{_cap(noun)}", lines, [(noun, "int")], [("total", "int")]


def _t_reset(rng, noun):
    lines = [
        "if (flag) {",
        f"  self.{noun} = 0;",
        "}",
        f"return self.{noun};",
    ]
    return f"reset{_cap(noun)}", lines, [("flag", "bool")], [(noun, "int")]


def _t_grow(rng, noun):
    lines = [
        "var i: int = 0;",
        "while (i < rounds) {",
        f"  self.size = self.size + {noun};",
        "  i = i + 1;",
        "}",
        "return self.size;",
    ]
    return f"grow{_cap(noun)}", lines, [(noun, "int"), ("rounds", "int")], [("size", "int")]


def _t_mark(rng, noun):
    lines = [
        f"self.label = {noun};",
        f"if (len({noun}) == 0) {{",
        '  self.label = "none";',
        "}",
        "return self.label;",
    ]
    return f"mark{_cap(noun)}", lines, [(noun, "string")], [("label", "string")]


def _t_echo(rng, noun):
    lines = [
        "if (shout) {",
        f"  print({noun});",
        "}",
        f"return {noun};",
    ]
    return f"echo{_cap(noun)}", lines, [(noun, "string"), ("shout", "bool")], []


def _t_compare(rng, noun):
    lines = [
        f"if ({noun} > other) {{",
        "  return true;",
        "}",
        "return false;",
    ]
    return f"compare{_cap(noun)}", lines, [(noun, "int"), ("other", "int")], []


TEMPLATES = (
    _t_sum,
    _t_count_even,
    _t_find_max,
    _t_find_min,
    _t_clamp,
    _t_double,
    _t_scale,
    _t_square,
    _t_diff,
    _t_pick,
    _t_toggle,
    _t_match,
    _t_is_empty,
    _t_get_length,
    _t_repeat,
    _t_join,
    _t_track,
    _t_reset,
    _t_grow,
    _t_mark,
    _t_echo,
    _t_compare,
)


def generate_one(seed: int) -> tuple[str, MethodAst]:
    """One (name, method) pair, deterministic in the seed."""
    rng = random.Random(seed)
    template = rng.choice(TEMPLATES)
    noun = rng.choice(NOUNS)
    name, lines, params, fields = template(rng, noun)
    prelude = _distractors(rng, noun)
    param_text = ", ".join(f"{n}: {t}" for n, t in params)
    src_lines = [f"method {name}({param_text}) {{"]
    for fname, fty in fields:
        src_lines.append(f"  field {fname}: {fty};")
    for line in prelude + lines:
        src_lines.append("  " + line)
    src_lines.append("}")
    return name, parse_source("\n".join(src_lines))


def split_counts(n: int, ratios: tuple[float, float, float]) -> tuple[int, int, int]:
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    floors = [int(n * r) for r in ratios]
    remainder = n - sum(floors)
    fracs = sorted(range(3), key=lambda i: (-(n * ratios[i] - floors[i]), i))
    for i in range(remainder):
        floors[fracs[i % 3]] += 1
    return tuple(floors)  # type: ignore[return-value]


def generate_corpus(
    n: int, seed: int, split_ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
) -> list[CorpusRecord]:
    if n < 1:
        raise ValueError("n must be >= 1")
    n_train, n_valid, _ = split_counts(n, split_ratios)
    records = []
    for i in range(n):
        rid = f"m{i:06d}"
        name, method = generate_one(derive_seed(seed, rid))
        split = "train" if i < n_train else ("valid" if i < n_train + n_valid else "test")
        records.append(CorpusRecord(rid, method, tuple(subtokenize(name)), split))
    return records


def sample_inputs(method: MethodAst, n: int, seed: int) -> list[tuple[list[Value], dict]]:
    """Small argument/field batteries on which every template terminates."""
    batteries = []
    for j in range(n):
        rng = random.Random(derive_seed(seed, j))

        def draw(ty: str) -> Value:
            if ty == "int":
                return rng.randint(0, 6)
            if ty == "bool":
                return rng.choice((True, False))
            return rng.choice(_STRING_WORDS)

        args = [draw(ty) for _, ty in method.params]
        field_init = {name: draw(ty) for name, ty in method.fields_decl}
        batteries.append((args, field_init))
    return batteries


def rekey_field_init(field_init: dict, src: MethodAst, dst: MethodAst) -> dict:
    """Carry a field battery across a renaming: fields map by position."""
    return {
        dst_name: field_init[src_name]
        for (src_name, _), (dst_name, _) in zip(src.fields_decl, dst.fields_decl)
    }


def build_vocab(train_records, limits: tuple[int, int] = (1500, 500)) -> Vocab:
    """Frequency vocabularies from the train split; ties break lexicographically."""
    in_limit, out_limit = limits
    in_counts: Counter[str] = Counter()
    out_counts: Counter[str] = Counter()
    for rec in train_records:
        for piece in model_tokens(rec.method):
            if piece not in INPUT_SPECIALS:
                in_counts[piece] += 1
        out_counts.update(rec.gold_subtokens)

    def ranked(counts: Counter, cap: int) -> list[str]:
        ordered = sorted(counts, key=lambda t: (-counts[t], t))
        return ordered[:cap]

    input_tokens = INPUT_SPECIALS + tuple(ranked(in_counts, in_limit - len(INPUT_SPECIALS)))
    output_tokens = OUTPUT_SPECIALS + tuple(ranked(out_counts, out_limit - len(OUTPUT_SPECIALS)))
    return Vocab(input_tokens, output_tokens)


def save_corpus(records, path: str | Path) -> None:
    rows = [
        {"id": r.id, "src": to_source(r.method), "name": r.method.name, "split": r.split}
        for r in records
    ]
    Path(path).write_text("".join(dumps(r) + "\n" for r in rows), encoding="utf-8")


def load_corpus(path: str | Path) -> list[CorpusRecord]:
    records = []
    for lineno, row in enumerate(read_jsonl(path), start=1):
        try:
            rid, src, name, split = row["id"], row["src"], row["name"], row["split"]
        except KeyError as exc:
            raise FormatError(f"missing corpus field {exc}", lineno) from exc
        if split not in SPLITS:
            raise FormatError(f"record {rid}: unknown split {split!r}", lineno)
        try:
            method = parse_source(src)
        except Exception as exc:
            raise FormatError(f"record {rid}: unparseable source ({exc})", lineno) from exc
        if method.name != name:
            raise FormatError(f"record {rid}: name field disagrees with source", lineno)
        records.append(CorpusRecord(rid, method, tuple(subtokenize(name)), split))
    return records
