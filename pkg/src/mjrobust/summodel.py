"""Tiny differentiable code-summarization model.

Architecture: mean of embeddings of the non-PAD input positions, then a
fixed number of independent softmax heads, one per output position. The
input layer is a one-hot (optionally relaxed) matrix, so the loss is
differentiable down to the token choice; that is what the hole-filling
attack differentiates through. All gradients are written out by hand and
checked against finite differences in the test suite.

Encoding: the body of a method is pretty-printed, tokenized, and turned
into subtokens. Keywords and literals keep their text, identifiers and
literal contents are split into subtokens, punctuation and operators are
dropped, occurrences of the method's own name are masked to UNK, and
hole index i maps to the reserved special token at every occurrence.

Checkpoint format: a one-line JSON header (format version, dims, vocab
hashes, metadata) followed by raw little-endian float32 arrays in order
embed, head weights, head biases. Vocabularies are stored as one token
per line.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .minilang.lexer import tokenize
from .minilang.nodes import MethodAst, hole_index
from .minilang.printer import body_source
from .minilang.subtok import subtokenize

PAD = "<pad>"
UNK = "<unk>"
N_HOLE_SPECIALS = 8
CKPT_VERSION = "v1"


def hole_special(i: int) -> str:
    return f"<h{i}>"


HOLE_SPECIALS = tuple(hole_special(i) for i in range(1, N_HOLE_SPECIALS + 1))
INPUT_SPECIALS = (PAD, UNK) + HOLE_SPECIALS
OUTPUT_SPECIALS = (PAD, UNK)


class HoleBudgetExceeded(Exception):
    pass


@dataclass(frozen=True)
class Vocab:
    input_tokens: tuple[str, ...]
    output_tokens: tuple[str, ...]

    def __post_init__(self):
        if self.input_tokens[: len(INPUT_SPECIALS)] != INPUT_SPECIALS:
            raise ValueError("input vocabulary must start with the special tokens")
        if self.output_tokens[: len(OUTPUT_SPECIALS)] != OUTPUT_SPECIALS:
            raise ValueError("output vocabulary must start with PAD, UNK")
        object.__setattr__(self, "in_index", {t: i for i, t in enumerate(self.input_tokens)})
        object.__setattr__(self, "out_index", {t: i for i, t in enumerate(self.output_tokens)})

    @property
    def n_in(self) -> int:
        return len(self.input_tokens)

    @property
    def n_out(self) -> int:
        return len(self.output_tokens)

    def in_id(self, token: str) -> int:
        return self.in_index.get(token, 1)  # UNK

    def out_id(self, token: str) -> int:
        return self.out_index.get(token, 1)


def save_vocab(tokens: tuple[str, ...], path: str | Path) -> None:
    Path(path).write_text("".join(t + "\n" for t in tokens), encoding="utf-8")


def load_vocab_tokens(path: str | Path) -> tuple[str, ...]:
    return tuple(Path(path).read_text(encoding="utf-8").splitlines())


def vocab_hash(tokens: tuple[str, ...]) -> str:
    payload = "".join(t + "\n" for t in tokens).encode("utf-8")
    return hashlib.sha256(payload).hexdigest()


@dataclass(frozen=True)
class Hyper:
    dim: int = 32
    heads: int = 6  # independent output positions
    lr: float = 0.1
    seed: int = 0
    max_len: int = 200


@dataclass(frozen=True)
class ModelState:
    vocab: Vocab
    embed: np.ndarray  # (n_in, dim)
    head_w: np.ndarray  # (heads, dim, n_out)
    head_b: np.ndarray  # (heads, n_out)
    hyper: Hyper

    @classmethod
    def new(cls, vocab: Vocab, hyper: Hyper = Hyper()) -> "ModelState":
        rng = np.random.default_rng(hyper.seed)
        embed = rng.normal(0.0, 0.1, (vocab.n_in, hyper.dim))
        head_w = rng.normal(0.0, 0.1, (hyper.heads, hyper.dim, vocab.n_out))
        head_b = np.zeros((hyper.heads, vocab.n_out))
        return cls(vocab, embed, head_w, head_b, hyper)


@dataclass(frozen=True)
class OneHotInput:
    """Token rows of one example: strict one-hot via ids, or relaxed dense.

    `mask` marks real (non-PAD) positions; only those enter the pooled
    mean, so a PAD row never influences the loss.
    """

    ids: np.ndarray  # (n,) int32
    mask: np.ndarray  # (n,) bool
    vocab_size: int
    dense: np.ndarray | None = None  # (n, vocab_size); overrides ids when set

    @property
    def rows(self) -> np.ndarray:
        if self.dense is not None:
            return self.dense
        rows = np.zeros((len(self.ids), self.vocab_size))
        rows[np.arange(len(self.ids)), self.ids] = 1.0
        return rows

    def relaxed(self) -> "OneHotInput":
        return replace(self, dense=self.rows)


@dataclass
class Grads:
    embed: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray


# --- encoding ---

# statement/structure words that stay in the input stream as-is
_KEPT_KEYWORDS = frozenset(
    {
        "var",
        "field",
        "if",
        "else",
        "while",
        "return",
        "print",
        "len",
        "try",
        "catch",
        "throw",
        "self",
        "int",
        "bool",
        "string",
    }
)


def model_tokens(method: MethodAst) -> list[str]:
    """The subtoken stream the model sees for a method body.

    Hole occurrences appear as their lexeme and are mapped to specials by
    `encode`; build_vocab counts these streams over the clean corpus.
    """
    out: list[str] = []
    for tok in tokenize(body_source(method)):
        if tok.kind == "kw":
            if tok.text in _KEPT_KEYWORDS:
                out.append(tok.text)
        elif tok.kind == "bool":
            out.append(tok.text)
        elif tok.kind == "hole":
            out.append(tok.text)
        elif tok.kind == "ident":
            if tok.text == method.name:
                out.append(UNK)
            else:
                out.extend(subtokenize(tok.text))
        elif tok.kind == "int":
            out.extend(subtokenize(tok.text))
        elif tok.kind == "str":
            idx = hole_index(tok.value)
            if idx is not None:
                out.append(tok.value)
            else:
                out.extend(subtokenize(tok.value))
        # punctuation and operators carry no naming signal and are dropped
    return out


def encode(method_or_sketch, vocab: Vocab, max_len: int) -> OneHotInput:
    """Encode a method or sketch as PAD-padded one-hot input rows."""
    method = getattr(method_or_sketch, "ast", method_or_sketch)
    ids = []
    for piece in model_tokens(method):
        idx = hole_index(piece)
        if idx is not None:
            if idx > N_HOLE_SPECIALS:
                raise HoleBudgetExceeded(
                    f"hole {idx} exceeds the {N_HOLE_SPECIALS} reserved specials"
                )
            ids.append(vocab.in_id(hole_special(idx)))
        else:
            ids.append(vocab.in_id(piece))
    ids = ids[:max_len]
    n_real = len(ids)
    ids = ids + [0] * (max_len - n_real)  # PAD id is 0
    mask = np.zeros(max_len, dtype=bool)
    mask[:n_real] = True
    return OneHotInput(np.asarray(ids, dtype=np.int32), mask, vocab.n_in)


def encode_gold(gold_subtokens, vocab: Vocab, heads: int) -> np.ndarray:
    if len(gold_subtokens) > heads:
        raise ValueError(f"gold has {len(gold_subtokens)} subtokens, model has {heads} heads")
    ids = [vocab.out_id(t) for t in gold_subtokens]
    ids += [0] * (heads - len(ids))
    return np.asarray(ids, dtype=np.int32)


# --- forward / loss / backward ---


def _pool(state: ModelState, x: OneHotInput) -> tuple[np.ndarray, float]:
    """Mean embedding of unmasked rows; (dim,) vector and the denominator."""
    m = float(x.mask.sum())
    denom = max(m, 1.0)
    if x.dense is None:
        emb = state.embed[x.ids]  # (n, dim)
        pooled = (emb * x.mask[:, None]).sum(axis=0) / denom
    else:
        weighted = x.dense * x.mask[:, None]
        pooled = weighted.sum(axis=0) @ state.embed / denom
    return pooled, denom


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(state: ModelState, x: OneHotInput) -> np.ndarray:
    """Per-head output distributions, shape (heads, n_out)."""
    pooled, _ = _pool(state, x)
    logits = np.einsum("d,hdv->hv", pooled, state.head_w) + state.head_b
    return _softmax(logits)


def loss(state: ModelState, x: OneHotInput, gold_subtokens) -> float:
    probs = forward(state, x)
    gold = encode_gold(gold_subtokens, state.vocab, state.hyper.heads)
    picked = probs[np.arange(state.hyper.heads), gold]
    return float(-np.log(picked).sum())


def input_grad_direction(state: ModelState, x: OneHotInput, gold_subtokens) -> np.ndarray:
    """The shared row direction of the input gradient, shape (n_in,).

    With mean pooling, d loss / d row_i = (mask_i / denom) * (embed @ de)
    for every position i: one vector scaled per position. Attacks use it
    directly; `backward` materializes the full matrix from it.
    """
    pooled, denom = _pool(state, x)
    gold = encode_gold(gold_subtokens, state.vocab, state.hyper.heads)
    probs = _softmax(np.einsum("d,hdv->hv", pooled, state.head_w) + state.head_b)
    dz = probs.copy()
    dz[np.arange(state.hyper.heads), gold] -= 1.0
    de = np.einsum("hv,hdv->d", dz, state.head_w)
    return (state.embed @ de) / denom


def backward(
    state: ModelState, x: OneHotInput, gold_subtokens
) -> tuple[Grads, np.ndarray]:
    """Analytic gradients of `loss` w.r.t. parameters and the input rows."""
    pooled, denom = _pool(state, x)
    gold = encode_gold(gold_subtokens, state.vocab, state.hyper.heads)
    probs = _softmax(np.einsum("d,hdv->hv", pooled, state.head_w) + state.head_b)
    dz = probs.copy()
    dz[np.arange(state.hyper.heads), gold] -= 1.0  # (heads, n_out)

    d_head_w = np.einsum("d,hv->hdv", pooled, dz)
    d_head_b = dz.copy()
    de = np.einsum("hv,hdv->d", dz, state.head_w)  # (dim,)

    d_embed = np.zeros_like(state.embed)
    if x.dense is None:
        contrib = np.outer(x.mask.astype(float) / denom, de)  # (n, dim)
        np.add.at(d_embed, x.ids, contrib)
    else:
        weighted = (x.dense * x.mask[:, None]).sum(axis=0) / denom  # (n_in,)
        d_embed = np.outer(weighted, de)

    row_dir = (state.embed @ de) / denom  # (n_in,)
    d_input = np.outer(x.mask.astype(float), row_dir)
    return Grads(d_embed, d_head_w, d_head_b), d_input


def sgd_step(state: ModelState, grads: Grads, lr: float) -> ModelState:
    return replace(
        state,
        embed=state.embed - lr * grads.embed,
        head_w=state.head_w - lr * grads.head_w,
        head_b=state.head_b - lr * grads.head_b,
    )


def predict(state: ModelState, x: OneHotInput) -> list[str]:
    """Argmax subtoken per head (ties to the lowest index), PAD dropped,
    duplicates collapsed while preserving order."""
    probs = forward(state, x)
    out: list[str] = []
    for head in range(state.hyper.heads):
        token = state.vocab.output_tokens[int(np.argmax(probs[head]))]
        if token != PAD and token not in out:
            out.append(token)
    return out


# --- batched paths (same math as above, over stacked examples) ---


def batch_losses(
    state: ModelState, ids: np.ndarray, mask: np.ndarray, gold_ids: np.ndarray
) -> np.ndarray:
    """Losses of a batch, shape (B,); ids/mask are (B, n), gold (B, heads)."""
    denom = np.maximum(mask.sum(axis=1), 1.0)  # (B,)
    pooled = (state.embed[ids] * mask[:, :, None]).sum(axis=1) / denom[:, None]
    logits = np.einsum("bd,hdv->bhv", pooled, state.head_w) + state.head_b
    probs = _softmax(logits)
    b_idx = np.arange(ids.shape[0])[:, None]
    h_idx = np.arange(state.hyper.heads)[None, :]
    picked = probs[b_idx, h_idx, gold_ids]
    return -np.log(picked).sum(axis=1)


def batch_grads(
    state: ModelState, ids: np.ndarray, mask: np.ndarray, gold_ids: np.ndarray
) -> tuple[np.ndarray, Grads, np.ndarray]:
    """Per-example losses, mean parameter gradients, and de (B, dim)."""
    B = ids.shape[0]
    denom = np.maximum(mask.sum(axis=1), 1.0)
    pooled = (state.embed[ids] * mask[:, :, None]).sum(axis=1) / denom[:, None]
    logits = np.einsum("bd,hdv->bhv", pooled, state.head_w) + state.head_b
    probs = _softmax(logits)
    b_idx = np.arange(B)[:, None]
    h_idx = np.arange(state.hyper.heads)[None, :]
    picked = probs[b_idx, h_idx, gold_ids]
    losses = -np.log(picked).sum(axis=1)

    dz = probs.copy()
    dz[b_idx, h_idx, gold_ids] -= 1.0
    d_head_w = np.einsum("bd,bhv->hdv", pooled, dz) / B
    d_head_b = dz.sum(axis=0) / B
    de = np.einsum("bhv,hdv->bd", dz, state.head_w)  # (B, dim)

    # d_embed[v] = sum_b (count of v among masked positions of b) * de_b / (B * denom_b)
    n_in = state.vocab.n_in
    flat = (np.arange(B)[:, None] * n_in + ids).reshape(-1)
    counts = np.bincount(
        flat, weights=mask.reshape(-1).astype(float), minlength=B * n_in
    ).reshape(B, n_in)
    d_embed = counts.T @ (de / (B * denom[:, None]))
    return losses, Grads(d_embed, d_head_w, d_head_b), de


def batch_de_pooled(
    state: ModelState, pooled: np.ndarray, gold_ids: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-example losses and pooled-embedding gradients de (B, dim) from
    precomputed pooled vectors.

    The attack refresh pools through a fixed sparse token-count matrix
    (pooling is linear in the embedding) and needs neither parameter
    gradients nor the embedding gather, which keeps the per-epoch refresh
    pass cheap.
    """
    B = pooled.shape[0]
    logits = np.einsum("bd,hdv->bhv", pooled, state.head_w) + state.head_b
    probs = _softmax(logits)
    b_idx = np.arange(B)[:, None]
    h_idx = np.arange(state.hyper.heads)[None, :]
    picked = probs[b_idx, h_idx, gold_ids]
    losses = -np.log(picked).sum(axis=1)
    dz = probs
    dz[b_idx, h_idx, gold_ids] -= 1.0
    de = np.einsum("bhv,hdv->bd", dz, state.head_w)
    return losses, de


def batch_losses_pooled(
    state: ModelState, pooled: np.ndarray, gold_ids: np.ndarray
) -> np.ndarray:
    logits = np.einsum("bd,hdv->bhv", pooled, state.head_w) + state.head_b
    probs = _softmax(logits)
    b_idx = np.arange(pooled.shape[0])[:, None]
    h_idx = np.arange(state.hyper.heads)[None, :]
    return -np.log(probs[b_idx, h_idx, gold_ids]).sum(axis=1)


def batch_input_row_dirs(state: ModelState, de: np.ndarray, denom: np.ndarray) -> np.ndarray:
    """Shared input-gradient row per example: (B, n_in) = de @ embed.T / denom."""
    return (de @ state.embed.T) / denom[:, None]


# --- checkpoint io ---


def save_checkpoint(state: ModelState, path: str | Path, meta: dict | None = None) -> None:
    header = {
        "format": CKPT_VERSION,
        "dim": state.hyper.dim,
        "heads": state.hyper.heads,
        "lr": state.hyper.lr,
        "seed": state.hyper.seed,
        "max_len": state.hyper.max_len,
        "n_in": state.vocab.n_in,
        "n_out": state.vocab.n_out,
        "vocab_in_hash": vocab_hash(state.vocab.input_tokens),
        "vocab_out_hash": vocab_hash(state.vocab.output_tokens),
        "meta": meta or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8"))
        fh.write(b"\n")
        for arr in (state.embed, state.head_w, state.head_b):
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def load_checkpoint(path: str | Path, vocab: Vocab) -> ModelState:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        if header.get("format") != CKPT_VERSION:
            raise ValueError(f"unsupported checkpoint format {header.get('format')!r}")
        if header["vocab_in_hash"] != vocab_hash(vocab.input_tokens):
            raise ValueError("input vocabulary does not match checkpoint")
        if header["vocab_out_hash"] != vocab_hash(vocab.output_tokens):
            raise ValueError("output vocabulary does not match checkpoint")
        hyper = Hyper(
            dim=header["dim"],
            heads=header["heads"],
            lr=header["lr"],
            seed=header["seed"],
            max_len=header["max_len"],
        )
        shapes = [
            (vocab.n_in, hyper.dim),
            (hyper.heads, hyper.dim, vocab.n_out),
            (hyper.heads, vocab.n_out),
        ]
        arrays = []
        for shape in shapes:
            count = int(np.prod(shape))
            buf = fh.read(count * 4)
            if len(buf) != count * 4:
                raise ValueError("truncated checkpoint")
            arrays.append(np.frombuffer(buf, dtype="<f4").astype(np.float64).reshape(shape))
    return ModelState(vocab, arrays[0], arrays[1], arrays[2], hyper)


def checkpoint_meta(path: str | Path) -> dict:
    with open(path, "rb") as fh:
        return json.loads(fh.readline().decode("utf-8"))
