"""Worst-case transformed programs: enumerative search over sequences,
random or gradient hole filling.

The attack walks the pre-generated sketches of a program (exhaustive
singletons for budget 1, a sampled sequence list for larger budgets),
fills each sketch's holes, scores the filled program, and keeps the
strict maximum; the clean program is the initial candidate, so the
returned loss never drops below the clean loss.

Gradient filling: the sketch is encoded with one special token per hole
index, the loss gradient is taken at the one-hot input layer, gradient
rows are averaged over the occurrences of each special, a step of size
eta is added to the one-hot row, and the replacement is the argmax over
eligible vocabulary entries. Holes are processed in index order and
already-chosen tokens are masked out, so distinct holes always receive
distinct replacements.

Eligible fill tokens are plain lowercase words in the input vocabulary
that are not specials, not reserved words, and not names already bound
in the sketch; anything else could produce an ill-formed program.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

import numpy as np

from .minilang.nodes import MethodAst
from .minilang.parser import scope_names
from .seeding import derive_seed
from .summodel import (
    HOLE_SPECIALS,
    ModelState,
    Vocab,
    encode,
    hole_special,
    input_grad_direction,
    loss,
)
from .transforms import (
    Sketch,
    Transform,
    TransformSeq,
    fill,
    valid_fill_token,
)


class ExhaustedVocab(Exception):
    pass


@dataclass(frozen=True)
class AttackConfig:
    k: int = 1
    mode: str = "gradient"  # random | gradient | exhaustive
    eta: float = 1.0
    samples: int = 10  # sequence sample count for k > 1
    seed: int = 0

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.mode not in ("random", "gradient", "exhaustive"):
            raise ValueError(f"unknown attack mode {self.mode!r}")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")


@dataclass(frozen=True)
class AttackOutcome:
    chosen_seq: TransformSeq
    chosen_fill: dict[int, str]
    adv_program: MethodAst
    clean_loss: float
    adv_loss: float


def sample_sequences(
    registry: tuple[str, ...], k: int, n: int, seed: int
) -> list[TransformSeq]:
    """Length-k sequences with fresh selection seeds; exhaustive singletons
    when k=1 and n covers the registry, else n uniform samples."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)

    def seed64() -> int:
        return rng.getrandbits(63)

    if k == 1 and n >= len(registry):
        return [TransformSeq((Transform(tid, seed64()),)) for tid in registry]
    out = []
    for _ in range(n):
        steps = tuple(Transform(rng.choice(registry), seed64()) for _ in range(k))
        out.append(TransformSeq(steps))
    return out


def eligible_token_ids(vocab: Vocab, sketch: Sketch) -> list[int]:
    """Vocabulary ids usable as a fill for this sketch, ascending."""
    base = _base_eligible(vocab)
    taken = scope_names(sketch.ast)
    return [i for i in base if vocab.input_tokens[i] not in taken]


_BASE_CACHE: dict[int, list[int]] = {}


def _base_eligible(vocab: Vocab) -> list[int]:
    cached = _BASE_CACHE.get(id(vocab))
    if cached is None:
        cached = [
            i
            for i, tok in enumerate(vocab.input_tokens)
            if valid_fill_token(tok) and tok not in HOLE_SPECIALS
        ]
        _BASE_CACHE[id(vocab)] = cached
    return cached


def random_fill(sketch: Sketch, vocab: Vocab, seed: int) -> dict[int, str]:
    """Uniform choice among eligible tokens, distinct across holes."""
    rng = random.Random(seed)
    remaining = eligible_token_ids(vocab, sketch)
    assignment: dict[int, str] = {}
    for idx in sorted(sketch.hole_kinds):
        if not remaining:
            raise ExhaustedVocab(f"no eligible token left for hole {idx}")
        pick = remaining[rng.randrange(len(remaining))]
        remaining.remove(pick)
        assignment[idx] = vocab.input_tokens[pick]
    return assignment


def gradient_fill(
    model: ModelState, sketch: Sketch, gold_subtokens, config: AttackConfig
) -> dict[int, str]:
    """One gradient-ascent step at the input layer, then argmax per hole."""
    vocab = model.vocab
    x = encode(sketch, vocab, model.hyper.max_len)
    # all unmasked rows share one gradient direction under mean pooling;
    # a hole's occurrence average is that direction or zero if truncated away
    row_dir = input_grad_direction(model, x, gold_subtokens)
    eligible = eligible_token_ids(vocab, sketch)
    assignment: dict[int, str] = {}
    chosen: set[int] = set()
    for idx in sorted(sketch.hole_kinds):
        sid = vocab.in_id(hole_special(idx))
        occurrences = int(((x.ids == sid) & x.mask).sum())
        avg_grad = row_dir if occurrences > 0 else np.zeros(vocab.n_in)
        v_prime = config.eta * avg_grad
        v_prime = v_prime.copy()
        v_prime[sid] += 1.0  # the ascent step starts from the one-hot row
        candidates = [i for i in eligible if i not in chosen]
        if not candidates:
            raise ExhaustedVocab(f"no eligible token left for hole {idx}")
        best = max(candidates, key=lambda i: (v_prime[i], -i))
        chosen.add(best)
        assignment[idx] = vocab.input_tokens[best]
    return assignment


def exhaustive_fill(
    model: ModelState,
    sketch: Sketch,
    gold_subtokens,
    limit: int = 200_000,
) -> dict[int, str]:
    """Loss-maximizing assignment by full enumeration (tiny vocabularies only).

    Candidates are ordered permutations of eligible ids; ties keep the
    earliest enumerated assignment.
    """
    vocab = model.vocab
    holes = sorted(sketch.hole_kinds)
    eligible = eligible_token_ids(vocab, sketch)
    if not holes:
        return {}
    total = 1
    for j in range(len(holes)):
        total *= max(len(eligible) - j, 0)
    if total > limit:
        raise ValueError(f"{total} assignments exceed the exhaustive-fill limit")
    if total == 0:
        raise ExhaustedVocab("not enough eligible tokens for all holes")
    best_assignment: dict[int, str] | None = None
    best_loss = -np.inf
    for combo in itertools.permutations(eligible, len(holes)):
        assignment = {idx: vocab.input_tokens[i] for idx, i in zip(holes, combo)}
        candidate = fill(sketch, assignment)
        value = loss(model, encode(candidate, vocab, model.hyper.max_len), gold_subtokens)
        if value > best_loss:
            best_loss = value
            best_assignment = assignment
    assert best_assignment is not None
    return best_assignment


def attack(
    model: ModelState, sketch_set, gold_subtokens, config: AttackConfig
) -> AttackOutcome:
    """Strict-improvement search over the stored sketches of one program."""
    vocab = model.vocab
    clean = sketch_set.clean
    clean_loss = loss(model, encode(clean, vocab, model.hyper.max_len), gold_subtokens)
    best_seq = TransformSeq()
    best_fill: dict[int, str] = {}
    best_program = clean
    best_loss = clean_loss

    for pos, sketch in enumerate(sketch_set.sketches):
        try:
            if config.mode == "random":
                fill_seed = derive_seed(config.seed, sketch_set.program_id, pos)
                assignment = random_fill(sketch, vocab, fill_seed)
            elif config.mode == "gradient":
                assignment = gradient_fill(model, sketch, gold_subtokens, config)
            else:
                assignment = exhaustive_fill(model, sketch, gold_subtokens)
        except ExhaustedVocab:
            continue
        candidate = fill(sketch, assignment)
        value = loss(model, encode(candidate, vocab, model.hyper.max_len), gold_subtokens)
        if value > best_loss:
            best_loss = value
            best_seq = sketch.provenance
            best_fill = assignment
            best_program = candidate
    return AttackOutcome(best_seq, best_fill, best_program, clean_loss, best_loss)
