"""Clean and adversarial F1 over a test set, and regime-vs-adversary reports.

F1 is micro-averaged on the 0-100 scale: true/false positives and false
negatives are counted per subtoken and summed over the whole set before
the precision/recall ratio is formed. An adversary cell attacks every
record through its stored sketch set and scores the returned program.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .adversary import AttackConfig, attack
from .jsonl import dumps
from .minilang.printer import to_source
from .summodel import ModelState, encode, loss, predict
from .transforms import TransformSeq


class CoverageError(Exception):
    pass


def f1_micro(pairs) -> float:
    """pairs: (predicted subtoken set, gold subtoken set) per record."""
    tp = fp = fn = 0
    for pred, gold in pairs:
        pred, gold = set(pred), set(gold)
        tp += len(pred & gold)
        fp += len(pred - gold)
        fn += len(gold - pred)
    if tp + fp == 0 or tp + fn == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    if precision + recall == 0:
        return 0.0
    return 100.0 * 2 * precision * recall / (precision + recall)


def evaluate_clean(model: ModelState, records) -> float:
    records = list(records)
    if not records:
        raise ValueError("cannot evaluate an empty test set")
    pairs = []
    for rec in records:
        x = encode(rec.method, model.vocab, model.hyper.max_len)
        pairs.append((set(predict(model, x)), set(rec.gold_subtokens)))
    return f1_micro(pairs)


@dataclass
class AttackRow:
    id: str
    clean_loss: float
    adv_loss: float
    seq: TransformSeq
    fill: dict[int, str]
    clean_pred: list[str]
    adv_pred: list[str]
    gold: tuple[str, ...]
    adv_src: str

    def to_row(self) -> dict:
        return {
            "id": self.id,
            "clean_loss": self.clean_loss,
            "adv_loss": self.adv_loss,
            "seq": [{"id": t.id, "seed": t.selection_seed} for t in self.seq.steps],
            "fill": {str(i): tok for i, tok in sorted(self.fill.items())},
            "clean_pred": self.clean_pred,
            "adv_pred": self.adv_pred,
        }


def _check_coverage(records, store, config: AttackConfig) -> None:
    for rec in records:
        ss = store.get(rec.id)
        if ss is None:
            raise CoverageError(f"store lacks sketches for record {rec.id}")
        for sk in ss.sketches:
            if len(sk.provenance.steps) != config.k:
                raise CoverageError(
                    f"record {rec.id}: store holds k={len(sk.provenance.steps)} "
                    f"sequences but the attack asks for k={config.k}"
                )


def attack_records(
    model: ModelState, records, store, config: AttackConfig, only_transforms=None
) -> list[AttackRow]:
    """Attack every record; optionally restrict to a subset of transforms."""
    records = list(records)
    if not records:
        raise ValueError("cannot attack an empty test set")
    _check_coverage(records, store, config)
    rows = []
    for rec in records:
        ss = store[rec.id]
        if only_transforms is not None:
            kept = tuple(
                sk
                for sk in ss.sketches
                if all(t.id in only_transforms for t in sk.provenance.steps)
            )
            ss = type(ss)(ss.program_id, ss.clean, kept)
        outcome = attack(model, ss, rec.gold_subtokens, config)
        clean_x = encode(rec.method, model.vocab, model.hyper.max_len)
        adv_x = encode(outcome.adv_program, model.vocab, model.hyper.max_len)
        rows.append(
            AttackRow(
                id=rec.id,
                clean_loss=outcome.clean_loss,
                adv_loss=outcome.adv_loss,
                seq=outcome.chosen_seq,
                fill=outcome.chosen_fill,
                clean_pred=predict(model, clean_x),
                adv_pred=predict(model, adv_x),
                gold=tuple(rec.gold_subtokens),
                adv_src=to_source(outcome.adv_program),
            )
        )
    return rows


def adv_f1_of_rows(rows: list[AttackRow]) -> float:
    return f1_micro([(set(r.adv_pred), set(r.gold)) for r in rows])


def clean_f1_of_rows(rows: list[AttackRow]) -> float:
    return f1_micro([(set(r.clean_pred), set(r.gold)) for r in rows])


def evaluate_adversarial(
    model: ModelState, records, store, config: AttackConfig, only_transforms=None
) -> float:
    """Micro F1 of the model's predictions on attacked programs."""
    return adv_f1_of_rows(attack_records(model, records, store, config, only_transforms))


def test_set_hash(records) -> str:
    h = hashlib.sha256()
    for rec in records:
        h.update(rec.id.encode("utf-8"))
        h.update(to_source(rec.method).encode("utf-8"))
        h.update(" ".join(rec.gold_subtokens).encode("utf-8"))
    return h.hexdigest()


@dataclass(frozen=True)
class RunResult:
    regime: str
    adversary: str  # e.g. "clean", "random-k1", "gradient-k5"
    clean_f1: float
    adv_f1: float
    n_records: int
    test_hash: str
    meta: dict = field(default_factory=dict)


@dataclass
class EvalReport:
    cells: dict[tuple[str, str], dict]
    regimes: tuple[str, ...]
    adversaries: tuple[str, ...]
    test_hash: str
    metadata: dict

    def to_json_obj(self) -> dict:
        return {
            "test_hash": self.test_hash,
            "regimes": list(self.regimes),
            "adversaries": list(self.adversaries),
            "cells": {
                f"{regime}/{adversary}": cell
                for (regime, adversary), cell in sorted(self.cells.items())
            },
            "metadata": self.metadata,
        }

    def to_text(self) -> str:
        """Aligned table: regime rows, adversary columns, adv F1 (delta)."""
        width = 22
        header = "regime".ljust(14) + "".join(a.rjust(width) for a in self.adversaries)
        lines = [header, "-" * len(header)]
        for regime in self.regimes:
            cells = []
            for adversary in self.adversaries:
                cell = self.cells.get((regime, adversary))
                if cell is None:
                    cells.append("-".rjust(width))
                else:
                    text = f"{cell['adv_f1']:7.2f} (d {cell['delta_f1']:6.2f})"
                    cells.append(text.rjust(width))
            lines.append(regime.ljust(14) + "".join(cells))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        cols = ["regime", "clean_f1"] + [f"adv_f1[{a}]" for a in self.adversaries]
        lines = [",".join(cols)]
        for regime in self.regimes:
            clean = ""
            values = []
            for adversary in self.adversaries:
                cell = self.cells.get((regime, adversary))
                values.append(f"{cell['adv_f1']:.2f}" if cell else "")
                if cell:
                    clean = f"{cell['clean_f1']:.2f}"
            lines.append(",".join([regime, clean] + values))
        return "\n".join(lines) + "\n"


def build_report(runs: list[RunResult]) -> EvalReport:
    if not runs:
        raise ValueError("build_report needs at least one run")
    hashes = {r.test_hash for r in runs}
    if len(hashes) != 1:
        raise ValueError(f"runs evaluate different test sets: {sorted(hashes)}")
    cells = {}
    regimes: list[str] = []
    adversaries: list[str] = []
    for r in runs:
        key = (r.regime, r.adversary)
        if key in cells:
            raise ValueError(f"duplicate cell {key}")
        cells[key] = {
            "clean_f1": r.clean_f1,
            "adv_f1": r.adv_f1,
            "delta_f1": r.clean_f1 - r.adv_f1,
            "n_records": r.n_records,
        }
        if r.regime not in regimes:
            regimes.append(r.regime)
        if r.adversary not in adversaries:
            adversaries.append(r.adversary)
    metadata = {f"{r.regime}/{r.adversary}": r.meta for r in runs if r.meta}
    return EvalReport(cells, tuple(regimes), tuple(adversaries), runs[0].test_hash, metadata)


def report_rows_jsonl(rows: list[AttackRow]) -> str:
    return "".join(dumps(r.to_row()) + "\n" for r in rows)
