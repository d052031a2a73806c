"""Offline pre-generation and persistence of per-program sketch sets.

Training and evaluation never run AST transformations: the sketches a
program admits are produced once, up front, and stored as canonical MJ
text plus a hole-kind sidecar. Loading re-parses every sketch through
the real grammar, so a stored sketch is interchangeable with applying
its sequence on the fly (the round trip is enforced by tests).

Store file: JSONL, UTF-8. First line is a header record
  {"version": "v1", "meta": {...}}
followed by one record per program:
  {"id", "clean_src", "sketches": [{"seq": [{"id", "seed"}], "src",
                                    "holes": {"1": "identifier", ...}}]}
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .adversary import sample_sequences
from .jsonl import FormatError, dumps, read_jsonl
from .minilang.parser import parse_source
from .minilang.printer import to_source
from .minilang.nodes import MethodAst
from .seeding import derive_seed
from .transforms import (
    Sketch,
    TRANSFORM_IDS,
    Transform,
    TransformSeq,
    applicable,
    apply_sequence,
    hole_kinds_of,
)

STORE_VERSION = "v1"


@dataclass(frozen=True)
class SketchSet:
    program_id: str
    clean: MethodAst
    sketches: tuple[Sketch, ...]  # provenance of each is its sequence

    def pairs(self) -> tuple[tuple[TransformSeq, Sketch], ...]:
        return tuple((s.provenance, s) for s in self.sketches)


def pregenerate(
    records,
    registry: tuple[str, ...] = TRANSFORM_IDS,
    k: int = 1,
    seed: int = 0,
    samples: int = 10,
    sequences: list[TransformSeq] | None = None,
) -> dict[str, SketchSet]:
    """Build the sketch set of every corpus record.

    k=0 stores the clean program only. k=1 stores one sketch per
    applicable transform, with per-(program, transform) selection seeds
    derived from `seed`. For k>1 a sampled sequence list is used (or the
    supplied one), since exhausting the sequence space is intractable.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    store: dict[str, SketchSet] = {}
    for rec in records:
        rseed = derive_seed(seed, rec.id)
        sketches: list[Sketch] = []
        if k == 1 and sequences is None:
            for tid in registry:
                t = Transform(tid, derive_seed(rseed, tid))
                if applicable(t, rec.method):
                    sketches.append(apply_sequence(TransformSeq((t,)), rec.method))
        elif k >= 1:
            seqs = sequences
            if seqs is None:
                seqs = sample_sequences(registry, k, samples, derive_seed(rseed, "seq"))
            for q in seqs:
                sketches.append(apply_sequence(q, rec.method))
        store[rec.id] = SketchSet(rec.id, rec.method, tuple(sketches))
    return store


def _sketch_record(sk: Sketch) -> dict:
    return {
        "seq": [{"id": t.id, "seed": t.selection_seed} for t in sk.provenance.steps],
        "src": to_source(sk.ast),
        "holes": {str(i): kind for i, kind in sorted(sk.hole_kinds.items())},
    }


def save_store(store: dict[str, SketchSet], path: str | Path, meta: dict | None = None) -> None:
    lines = [dumps({"version": STORE_VERSION, "meta": meta or {}})]
    for pid, ss in store.items():
        lines.append(
            dumps(
                {
                    "id": pid,
                    "clean_src": to_source(ss.clean),
                    "sketches": [_sketch_record(sk) for sk in ss.sketches],
                }
            )
        )
    Path(path).write_text("".join(line + "\n" for line in lines), encoding="utf-8")


def load_store(path: str | Path) -> dict[str, SketchSet]:
    rows = read_jsonl(path)
    if not rows:
        raise FormatError("empty store file", 1)
    header = rows[0]
    if header.get("version") != STORE_VERSION:
        raise FormatError(f"unsupported store version {header.get('version')!r}", 1)
    store: dict[str, SketchSet] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        try:
            pid = row["id"]
            clean = parse_source(row["clean_src"])
            sketches = []
            for sk_row in row["sketches"]:
                seq = TransformSeq(
                    tuple(Transform(s["id"], s["seed"]) for s in sk_row["seq"])
                )
                ast = parse_source(sk_row["src"])
                kinds = {int(i): kind for i, kind in sk_row["holes"].items()}
                if kinds != hole_kinds_of(ast):
                    raise FormatError("hole sidecar disagrees with sketch text", lineno)
                sketches.append(Sketch(ast, kinds, seq))
            store[pid] = SketchSet(pid, clean, tuple(sketches))
        except FormatError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed store record: {exc}", lineno) from exc
    return store


def store_meta(path: str | Path) -> dict:
    rows = read_jsonl(path)
    if not rows:
        raise FormatError("empty store file", 1)
    return rows[0].get("meta", {})
