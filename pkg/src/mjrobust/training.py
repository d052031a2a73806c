"""Training regimes: normal, augmented, random- and gradient-adversarial.

Adversarial regimes optimize the composite objective
    lam * clean loss + (1 - lam) * adversarial loss
where the adversarial term uses, for every record in a mini-batch, the
single transformation whose summed loss over the batch is highest
(batch-worst rule); records a transformation does not apply to
contribute their clean loss to that transformation's column. Hole fills
are recomputed every `reattack_period` epochs (gradient fills against
the current parameters) and cached in between. The augmented regime
adds one randomly transformed, randomly filled variant per record,
refreshed each epoch, as an unweighted sum.

Sketch encodings are cached once per run; refreshing a fill rewrites the
hole-special positions of the cached id array instead of re-encoding,
which is equivalent because eligible fill tokens are single subtokens
(tests pin the equivalence).
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .adversary import eligible_token_ids
from .seeding import derive_seed
from .summodel import (
    Grads,
    ModelState,
    batch_de_pooled,
    batch_grads,
    batch_input_row_dirs,
    batch_losses,
    batch_losses_pooled,
    encode,
    encode_gold,
    hole_special,
    loss,
    sgd_step,
)
from .transforms import TRANSFORM_IDS

REGIMES = ("normal", "augment", "adv_random", "adv_gradient")

_REFRESH_ETA = 1.0  # ascent step size used when refreshing gradient fills


@dataclass(frozen=True)
class TrainConfig:
    regime: str = "normal"
    lam: float = 0.4  # composite-loss weight on the clean term
    epochs: int = 30
    batch_size: int = 32
    lr: float = 0.1
    reattack_period: int = 1
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        if self.reattack_period < 1:
            raise ValueError("reattack_period must be >= 1")
        if self.regime in ("adv_random", "adv_gradient") and self.k != 1:
            raise ValueError("adversarial training uses the k=1 store")


@dataclass
class EpochLog:
    epoch: int
    regime: str
    clean_loss: float
    adv_loss: float
    chosen_transform_histogram: dict[str, int] = field(default_factory=dict)

    def to_row(self) -> dict:
        return {
            "epoch": self.epoch,
            "regime": self.regime,
            "clean_loss": self.clean_loss,
            "adv_loss": self.adv_loss,
            "chosen_transform_histogram": self.chosen_transform_histogram,
        }


def composite_loss(state: ModelState, clean_x, adv_x, gold_subtokens, lam: float) -> float:
    if not 0.0 <= lam <= 1.0:
        raise ValueError("lambda must lie in [0, 1]")
    return lam * loss(state, clean_x, gold_subtokens) + (1.0 - lam) * loss(
        state, adv_x, gold_subtokens
    )


def _combine(parts: list[tuple[float, Grads]]) -> Grads:
    first = parts[0][1]
    embed = np.zeros_like(first.embed)
    head_w = np.zeros_like(first.head_w)
    head_b = np.zeros_like(first.head_b)
    for weight, g in parts:
        embed += weight * g.embed
        head_w += weight * g.head_w
        head_b += weight * g.head_b
    return Grads(embed, head_w, head_b)


class _Encoded:
    """Clean corpus encodings stacked into arrays, in record order."""

    def __init__(self, records, state: ModelState):
        vocab, hyper = state.vocab, state.hyper
        self.records = list(records)
        xs = [encode(r.method, vocab, hyper.max_len) for r in self.records]
        self.ids = np.stack([x.ids for x in xs])
        self.mask = np.stack([x.mask for x in xs])
        self.gold = np.stack(
            [encode_gold(r.gold_subtokens, vocab, hyper.heads) for r in self.records]
        )


@dataclass
class _CachedSketch:
    sketch: object
    ids: np.ndarray
    mask: np.ndarray
    special_id: int | None  # id of <h1> when the sketch has a hole
    eligible: np.ndarray  # eligible fill token ids, ascending

    def filled(self, token_id: int | None) -> np.ndarray:
        if self.special_id is None or token_id is None:
            return self.ids
        out = self.ids.copy()
        out[self.ids == self.special_id] = token_id
        return out


class _SketchCache:
    """Per-record map transform-id -> cached k=1 sketch encoding."""

    def __init__(self, records, store, state: ModelState):
        vocab, hyper = state.vocab, state.hyper
        self.vocab = vocab
        self.by_record: list[dict[str, _CachedSketch]] = []
        present: set[str] = set()
        for rec in records:
            ss = store.get(rec.id)
            if ss is None:
                raise ValueError(f"store lacks record {rec.id}")
            row: dict[str, _CachedSketch] = {}
            for sk in ss.sketches:
                if len(sk.provenance.steps) != 1 or len(sk.hole_kinds) > 1:
                    raise ValueError("adversarial training expects a k=1 store")
                tid = sk.provenance.steps[0].id
                x = encode(sk, vocab, hyper.max_len)
                sid = vocab.in_id(hole_special(1)) if sk.hole_kinds else None
                elig = np.asarray(eligible_token_ids(vocab, sk), dtype=np.int64)
                row[tid] = _CachedSketch(sk, x.ids, x.mask, sid, elig)
                present.add(tid)
            self.by_record.append(row)
        self.transform_ids = tuple(t for t in TRANSFORM_IDS if t in present)
        self._counts: dict[str, tuple] = {}
        self._pooling: dict[str, tuple] = {}

    def counts_for(self, tid: str) -> tuple:
        """(record positions, csr token counts, denominators) for a transform.

        Refresh gradients are taken at the special-filled sketch, whose
        encoding never changes, so the count matrix is fixed for the whole
        run and pooling at refresh time is one sparse matmul.
        """
        cached = self._counts.get(tid)
        if cached is None:
            from scipy import sparse

            rows = [
                (pos, self.by_record[pos][tid])
                for pos in range(len(self.by_record))
                if tid in self.by_record[pos]
            ]
            positions = np.asarray([pos for pos, _ in rows], dtype=np.int64)
            indptr = [0]
            indices: list[np.ndarray] = []
            data: list[np.ndarray] = []
            denom = np.empty(len(rows))
            for i, (_, entry) in enumerate(rows):
                uniq, cnt = np.unique(entry.ids[entry.mask], return_counts=True)
                indices.append(uniq)
                data.append(cnt.astype(float))
                indptr.append(indptr[-1] + len(uniq))
                denom[i] = max(float(entry.mask.sum()), 1.0)
            mat = sparse.csr_matrix(
                (
                    np.concatenate(data) if data else np.empty(0),
                    np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
                    np.asarray(indptr, dtype=np.int64),
                ),
                shape=(len(rows), self.vocab.n_in),
            )
            cached = (positions, mat, denom)
            self._counts[tid] = cached
        return cached

    def variant_pooling(self, tid: str, data: "_Encoded"):
        """Pooling pieces for one transform's corpus-wide variant.

        Returns (csr counts without the hole-special column, denominators,
        special occurrence counts), all over every record; records the
        transform does not apply to fall back to their clean encoding, so
        the pooled vector of the filled variant of record b is
            (csr[b] @ embed + c[b] * embed[fill token]) / denom[b].
        """
        cached = self._pooling.get(tid)
        if cached is not None:
            return cached
        from scipy import sparse

        n = len(self.by_record)
        indptr = [0]
        indices: list[np.ndarray] = []
        values: list[np.ndarray] = []
        denom = np.empty(n)
        c_special = np.zeros(n)
        for pos in range(n):
            entry = self.by_record[pos].get(tid)
            if entry is None:
                ids, mask = data.ids[pos], data.mask[pos]
                sid = None
            else:
                ids, mask, sid = entry.ids, entry.mask, entry.special_id
            uniq, cnt = np.unique(ids[mask], return_counts=True)
            cnt = cnt.astype(float)
            if sid is not None:
                at = np.searchsorted(uniq, sid)
                if at < len(uniq) and uniq[at] == sid:
                    c_special[pos] = cnt[at]
                    uniq = np.delete(uniq, at)
                    cnt = np.delete(cnt, at)
            indices.append(uniq)
            values.append(cnt)
            indptr.append(indptr[-1] + len(uniq))
            denom[pos] = max(float(mask.sum()), 1.0)
        mat = sparse.csr_matrix(
            (
                np.concatenate(values) if values else np.empty(0),
                np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
                np.asarray(indptr, dtype=np.int64),
            ),
            shape=(n, self.vocab.n_in),
        )
        cached = (mat, denom, c_special)
        self._pooling[tid] = cached
        return cached


def _batches(n: int, batch_size: int, seed: int, epoch: int) -> list[np.ndarray]:
    order = list(range(n))
    random.Random(derive_seed(seed, "order", epoch)).shuffle(order)
    return [
        np.asarray(order[i : i + batch_size], dtype=np.int64)
        for i in range(0, n, batch_size)
    ]


def train_normal(records, state: ModelState, config: TrainConfig):
    """Mini-batch SGD on the clean loss. Returns (state, per-epoch logs)."""
    data = _Encoded(records, state)
    logs: list[EpochLog] = []
    for epoch in range(config.epochs):
        for batch in _batches(len(data.records), config.batch_size, config.seed, epoch):
            _, grads, _ = batch_grads(
                state, data.ids[batch], data.mask[batch], data.gold[batch]
            )
            state = sgd_step(state, grads, config.lr)
        mean_clean = float(batch_losses(state, data.ids, data.mask, data.gold).mean())
        logs.append(EpochLog(epoch, config.regime, mean_clean, mean_clean))
    return state, logs


def train_augment(records, store, state: ModelState, config: TrainConfig):
    """Per record, clean loss plus the loss of one random transformation
    (random sequence and random fill, refreshed each epoch), unweighted."""
    data = _Encoded(records, state)
    cache = _SketchCache(data.records, store, state)
    logs: list[EpochLog] = []
    n = len(data.records)
    for epoch in range(config.epochs):
        aug_ids = data.ids.copy()
        aug_mask = data.mask.copy()
        for pos, rec in enumerate(data.records):
            row = cache.by_record[pos]
            if not row:
                continue
            rng = random.Random(derive_seed(config.seed, "aug", epoch, rec.id))
            tid = sorted(row)[rng.randrange(len(row))]
            entry = row[tid]
            token_id = None
            if entry.special_id is not None:
                # same draw as random_fill over the same eligible list
                fill_rng = random.Random(rng.getrandbits(63))
                token_id = int(entry.eligible[fill_rng.randrange(len(entry.eligible))])
            aug_ids[pos] = entry.filled(token_id)
            aug_mask[pos] = entry.mask
        for batch in _batches(n, config.batch_size, config.seed, epoch):
            _, g_clean, _ = batch_grads(
                state, data.ids[batch], data.mask[batch], data.gold[batch]
            )
            _, g_aug, _ = batch_grads(
                state, aug_ids[batch], aug_mask[batch], data.gold[batch]
            )
            state = sgd_step(state, _combine([(1.0, g_clean), (1.0, g_aug)]), config.lr)
        mean_clean = float(batch_losses(state, data.ids, data.mask, data.gold).mean())
        mean_aug = float(batch_losses(state, aug_ids, aug_mask, data.gold).mean())
        logs.append(EpochLog(epoch, config.regime, mean_clean, mean_aug))
    return state, logs


def _refresh_fills(
    data: _Encoded, cache: _SketchCache, state: ModelState, config: TrainConfig, epoch: int
) -> list[dict[str, tuple[np.ndarray, int | None]]]:
    """Recompute fills for every (record, transform).

    Returns, per record, transform-id -> (filled id row, fill token id).
    Gradient mode runs one batched input-gradient pass per transform over
    the records it applies to; the chosen token is the eligible argmax of
    the ascended one-hot row, matching `adversary.gradient_fill`.
    """
    n = len(data.records)
    filled: list[dict[str, tuple[np.ndarray, int | None]]] = [{} for _ in range(n)]
    if config.regime == "adv_random":
        for pos, rec in enumerate(data.records):
            for tid, entry in cache.by_record[pos].items():
                token_id = None
                if entry.special_id is not None:
                    # same draw as random_fill over the same eligible list
                    rng = random.Random(derive_seed(config.seed, "fill", epoch, rec.id, tid))
                    token_id = int(entry.eligible[rng.randrange(len(entry.eligible))])
                filled[pos][tid] = (entry.filled(token_id), token_id)
        return filled

    for tid in cache.transform_ids:
        positions, counts, denom = cache.counts_for(tid)
        if len(positions) == 0:
            continue
        pooled = (counts @ state.embed) / denom[:, None]
        _, de = batch_de_pooled(state, pooled, data.gold[positions])
        row_dirs = batch_input_row_dirs(state, de, denom)
        for local, pos in enumerate(positions):
            entry = cache.by_record[int(pos)][tid]
            token_id = None
            if entry.special_id is not None:
                occurrences = int(
                    ((entry.ids == entry.special_id) & entry.mask).sum()
                )
                direction = (
                    row_dirs[local] if occurrences > 0 else np.zeros(cache.vocab.n_in)
                )
                v_prime = _REFRESH_ETA * direction
                v_prime[entry.special_id] += 1.0
                token_id = int(entry.eligible[int(np.argmax(v_prime[entry.eligible]))])
            filled[pos][tid] = (entry.filled(token_id), token_id)
    return filled


def train_adversarial(records, store, state: ModelState, config: TrainConfig):
    """Composite objective with the batch-worst transformation.

    lam=1 short-circuits to exactly the clean updates of train_normal
    (same batch schedule, same arithmetic), so the degenerate weight is
    bit-identical to normal training in serial mode.
    """
    if config.regime not in ("adv_random", "adv_gradient"):
        raise ValueError("train_adversarial expects an adversarial regime")
    if config.lam == 1.0:
        return train_normal(records, state, config)

    data = _Encoded(records, state)
    cache = _SketchCache(data.records, store, state)
    n = len(data.records)
    tids = cache.transform_ids
    pooling = {tid: cache.variant_pooling(tid, data) for tid in tids}
    logs: list[EpochLog] = []
    filled: list[dict[str, tuple[np.ndarray, int | None]]] = [{} for _ in range(n)]
    fill_tok = {tid: np.zeros(n, dtype=np.int64) for tid in tids}

    for epoch in range(config.epochs):
        if epoch % config.reattack_period == 0:
            filled = _refresh_fills(data, cache, state, config, epoch)
            for tid in tids:
                fill_tok[tid].fill(0)
                for pos in range(n):
                    got = filled[pos].get(tid)
                    if got is not None and got[1] is not None:
                        fill_tok[tid][pos] = got[1]

        histogram: Counter[str] = Counter()
        adv_running = 0.0
        for batch in _batches(n, config.batch_size, config.seed, epoch):
            if tids:
                # pooled vectors of every transform's batch variant; the
                # fill only moves the hole special's count onto its token
                pooled_stack = np.concatenate(
                    [
                        (
                            pooling[tid][0][batch] @ state.embed
                            + pooling[tid][2][batch, None]
                            * state.embed[fill_tok[tid][batch]]
                        )
                        / pooling[tid][1][batch, None]
                        for tid in tids
                    ]
                )
                gold_tiled = np.tile(data.gold[batch], (len(tids), 1))
                sums = (
                    batch_losses_pooled(state, pooled_stack, gold_tiled)
                    .reshape(len(tids), len(batch))
                    .sum(axis=1)
                )
                worst = tids[int(np.argmax(sums))]
                histogram[worst] += 1
                adv_rows = []
                adv_masks = []
                for pos in batch:
                    got = filled[int(pos)].get(worst)
                    if got is None:
                        adv_rows.append(data.ids[int(pos)])
                        adv_masks.append(data.mask[int(pos)])
                    else:
                        adv_rows.append(got[0])
                        adv_masks.append(cache.by_record[int(pos)][worst].mask)
                adv_ids = np.stack(adv_rows)
                adv_mask = np.stack(adv_masks)
            else:
                adv_ids = data.ids[batch]
                adv_mask = data.mask[batch]
            adv_losses, g_adv, _ = batch_grads(state, adv_ids, adv_mask, data.gold[batch])
            _, g_clean, _ = batch_grads(
                state, data.ids[batch], data.mask[batch], data.gold[batch]
            )
            grads = _combine([(config.lam, g_clean), (1.0 - config.lam, g_adv)])
            state = sgd_step(state, grads, config.lr)
            adv_running += float(adv_losses.sum())
        mean_clean = float(batch_losses(state, data.ids, data.mask, data.gold).mean())
        logs.append(
            EpochLog(epoch, config.regime, mean_clean, adv_running / n, dict(histogram))
        )
    return state, logs


def train(records, store, state: ModelState, config: TrainConfig):
    """Dispatch on the configured regime."""
    if config.regime == "normal":
        return train_normal(records, state, config)
    if config.regime == "augment":
        return train_augment(records, store, state, config)
    return train_adversarial(records, store, state, config)
