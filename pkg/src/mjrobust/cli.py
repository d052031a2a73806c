"""Pipeline entry point.

Subcommands: gen, sketch, train, attack, eval, selfcheck. Every stage is
deterministic given its flags (and `--jobs 1` where parallelism exists),
and every artifact embeds the resolved configuration plus SHA-256 hashes
of its input files, so reruns are byte-identical and `eval` can refuse
to combine runs over different test sets.

Exit codes: 0 success, 2 configuration/usage error, 3 I/O error,
1 internal error or failed selfcheck.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import adversary, corpusgen, evalharness, sketchstore, summodel, training
from .jsonl import FormatError, dumps
from .minilang import functional_eq, interpret, parse_source, to_source
from .seeding import derive_seed
from .transforms import TRANSFORM_IDS, fill

ADVERSARY_LABELS = {
    ("random", 1): "random-k1",
    ("random", 5): "random-k5",
    ("gradient", 1): "gradient-k1",
    ("gradient", 5): "gradient-k5",
}


class ConfigError(Exception):
    pass


def _sha256_file(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"bad config file {path}: {exc}") from exc


def _merge_config(defaults: dict, file_cfg: dict, args: argparse.Namespace) -> dict:
    """defaults < config file < explicit flags."""
    merged = dict(defaults)
    for key, value in file_cfg.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _write_meta(out_path: str, config: dict, input_hashes: dict) -> None:
    meta = {"config": config, "inputs": input_hashes}
    Path(str(out_path) + ".meta.json").write_text(
        dumps(meta) + "\n", encoding="utf-8"
    )


def _meta_obj(config: dict, input_hashes: dict) -> dict:
    return {"config": config, "inputs": input_hashes}


# --- gen ---


def cmd_gen(args) -> int:
    defaults = {"n": 1000, "seed": 0, "ratios": "0.7,0.1,0.2"}
    cfg = _merge_config(defaults, _load_config_file(args.config), args)
    ratios = tuple(float(x) for x in str(cfg["ratios"]).split(","))
    if len(ratios) != 3 or abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError("--ratios must be three numbers summing to 1")
    if cfg["n"] < 1:
        raise ConfigError("--n must be >= 1")
    records = corpusgen.generate_corpus(int(cfg["n"]), int(cfg["seed"]), ratios)
    corpusgen.save_corpus(records, args.out)
    _write_meta(args.out, cfg, {})
    print(f"wrote {len(records)} records to {args.out}")
    return 0


# --- sketch ---


_SKETCH_CTX = {}


def _sketch_chunk(chunk_records):
    return sketchstore.pregenerate(
        chunk_records,
        registry=_SKETCH_CTX["registry"],
        k=_SKETCH_CTX["k"],
        seed=_SKETCH_CTX["seed"],
        samples=_SKETCH_CTX["samples"],
    )


def cmd_sketch(args) -> int:
    defaults = {"k": 1, "samples": 10, "seed": 0, "split": "all", "jobs": 1}
    cfg = _merge_config(defaults, _load_config_file(args.config), args)
    records = corpusgen.load_corpus(args.corpus)
    if cfg["split"] != "all":
        records = [r for r in records if r.split == cfg["split"]]
    k, samples, seed, jobs = (
        int(cfg["k"]),
        int(cfg["samples"]),
        int(cfg["seed"]),
        int(cfg["jobs"]),
    )
    if k < 0:
        raise ConfigError("--k must be >= 0")
    _SKETCH_CTX.update(registry=TRANSFORM_IDS, k=k, seed=seed, samples=samples)
    if jobs > 1 and len(records) > 1:
        chunks = [records[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_sketch_chunk, chunks))
        store = {}
        for part in parts:
            store.update(part)
        store = {r.id: store[r.id] for r in records}
    else:
        store = _sketch_chunk(records)
    meta = _meta_obj(cfg, {"corpus": _sha256_file(args.corpus)})
    sketchstore.save_store(store, args.out, meta=meta)
    n_sketches = sum(len(s.sketches) for s in store.values())
    print(f"wrote {len(store)} sketch sets ({n_sketches} sketches) to {args.out}")
    return 0


# --- train ---


def cmd_train(args) -> int:
    defaults = {
        "regime": "normal",
        "lam": 0.4,
        "epochs": 30,
        "batch_size": 32,
        "lr": 2.0,
        "reattack": 1,
        "k": 1,
        "seed": 0,
        "dim": 32,
        "heads": 6,
        "max_len": 200,
        "vocab_in": 1500,
        "vocab_out": 500,
    }
    cfg = _merge_config(defaults, _load_config_file(args.config), args)
    regime = str(cfg["regime"]).replace("-", "_")
    if regime not in training.REGIMES:
        raise ConfigError(f"unknown regime {cfg['regime']!r}")
    if not 0.0 <= float(cfg["lam"]) <= 1.0:
        raise ConfigError("--lambda must lie in [0, 1]")
    records = corpusgen.load_corpus(args.corpus)
    train_split = [r for r in records if r.split == "train"]
    if not train_split:
        raise ConfigError("corpus has no train split")

    store = None
    input_hashes = {"corpus": _sha256_file(args.corpus)}
    if regime != "normal":
        if args.store is None:
            raise ConfigError(f"regime {regime} needs --store")
        store = sketchstore.load_store(args.store)
        input_hashes["store"] = _sha256_file(args.store)

    vocab = corpusgen.build_vocab(
        train_split, (int(cfg["vocab_in"]), int(cfg["vocab_out"]))
    )
    hyper = summodel.Hyper(
        dim=int(cfg["dim"]),
        heads=int(cfg["heads"]),
        lr=float(cfg["lr"]),
        seed=int(cfg["seed"]),
        max_len=int(cfg["max_len"]),
    )
    state = summodel.ModelState.new(vocab, hyper)
    tc = training.TrainConfig(
        regime=regime,
        lam=float(cfg["lam"]),
        epochs=int(cfg["epochs"]),
        batch_size=int(cfg["batch_size"]),
        lr=float(cfg["lr"]),
        reattack_period=int(cfg["reattack"]),
        k=int(cfg["k"]),
        seed=int(cfg["seed"]),
    )
    state, logs = training.train(train_split, store, state, tc)

    out = Path(args.out)
    meta = _meta_obj(cfg, input_hashes)
    summodel.save_checkpoint(state, out, meta=meta)
    summodel.save_vocab(vocab.input_tokens, _vocab_in_path(out))
    summodel.save_vocab(vocab.output_tokens, _vocab_out_path(out))
    log_path = out.with_suffix(out.suffix + ".log.jsonl")
    log_path.write_text(
        "".join(dumps(l.to_row()) + "\n" for l in logs), encoding="utf-8"
    )
    print(
        f"trained {regime} for {tc.epochs} epochs; "
        f"final clean loss {logs[-1].clean_loss:.4f}; wrote {out}"
    )
    return 0


def _vocab_in_path(ckpt: Path) -> Path:
    return ckpt.with_suffix(ckpt.suffix + ".vocab-in.txt")


def _vocab_out_path(ckpt: Path) -> Path:
    return ckpt.with_suffix(ckpt.suffix + ".vocab-out.txt")


def _load_model(ckpt: str) -> summodel.ModelState:
    path = Path(ckpt)
    vocab = summodel.Vocab(
        summodel.load_vocab_tokens(_vocab_in_path(path)),
        summodel.load_vocab_tokens(_vocab_out_path(path)),
    )
    return summodel.load_checkpoint(path, vocab)


# --- attack / eval ---


_ATTACK_CTX = {}


def _attack_chunk(chunk):
    model = _ATTACK_CTX["model"]
    store = _ATTACK_CTX["store"]
    config = _ATTACK_CTX["config"]
    return evalharness.attack_records(model, chunk, store, config)


def _run_attack(model, records, store, config, jobs: int):
    if jobs > 1 and len(records) > 1:
        _ATTACK_CTX.update(model=model, store=store, config=config)
        chunks = [records[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_attack_chunk, chunks))
        by_id = {row.id: row for part in parts for row in part}
        return [by_id[r.id] for r in records]
    return evalharness.attack_records(model, records, store, config)


def cmd_attack(args) -> int:
    defaults = {"mode": "gradient", "k": 1, "eta": 1.0, "samples": 10, "seed": 0,
                "split": "test", "jobs": 1}
    cfg = _merge_config(defaults, _load_config_file(args.config), args)
    if cfg["mode"] not in ("random", "gradient", "exhaustive"):
        raise ConfigError(f"unknown attack mode {cfg['mode']!r}")
    records = corpusgen.load_corpus(args.corpus)
    if cfg["split"] != "all":
        records = [r for r in records if r.split == cfg["split"]]
    if not records:
        raise ConfigError(f"corpus has no {cfg['split']} records")
    store = sketchstore.load_store(args.store)
    model = _load_model(args.ckpt)
    config = adversary.AttackConfig(
        k=int(cfg["k"]),
        mode=str(cfg["mode"]),
        eta=float(cfg["eta"]),
        samples=int(cfg["samples"]),
        seed=int(cfg["seed"]),
    )
    rows = _run_attack(model, records, store, config, int(cfg["jobs"]))
    clean_f1 = evalharness.clean_f1_of_rows(rows)
    adv_f1 = evalharness.adv_f1_of_rows(rows)
    if args.out:
        header = dumps(
            {
                "meta": _meta_obj(
                    cfg,
                    {
                        "corpus": _sha256_file(args.corpus),
                        "store": _sha256_file(args.store),
                        "ckpt": _sha256_file(args.ckpt),
                    },
                ),
                "clean_f1": clean_f1,
                "adv_f1": adv_f1,
                "test_hash": evalharness.test_set_hash(records),
            }
        )
        Path(args.out).write_text(
            header + "\n" + evalharness.report_rows_jsonl(rows), encoding="utf-8"
        )
    print(f"adversarial F1: {adv_f1:.2f} (clean {clean_f1:.2f}, n={len(rows)})")
    return 0


def cmd_eval(args) -> int:
    defaults = {"eta": 1.0, "samples": 10, "seed": 0, "split": "test", "jobs": 1}
    cfg = _merge_config(defaults, _load_config_file(args.config), args)
    records = corpusgen.load_corpus(args.corpus)
    if cfg["split"] != "all":
        records = [r for r in records if r.split == cfg["split"]]
    if not records:
        raise ConfigError(f"corpus has no {cfg['split']} records")
    models = {}
    for spec_str in args.model:
        if "=" not in spec_str:
            raise ConfigError("--model expects regime=checkpoint")
        regime, path = spec_str.split("=", 1)
        models[regime] = _load_model(path)
    if not models:
        raise ConfigError("at least one --model is required")
    test_hash = evalharness.test_set_hash(records)
    jobs = int(cfg["jobs"])

    stores = {}
    if args.store_k1:
        stores[1] = sketchstore.load_store(args.store_k1)
    if args.store_k5:
        stores[5] = sketchstore.load_store(args.store_k5)
    if not stores:
        raise ConfigError("eval needs --store-k1 (and --store-k5 for the full grid)")

    runs = []
    for regime, model in models.items():
        clean_f1 = evalharness.evaluate_clean(model, records)
        runs.append(
            evalharness.RunResult(regime, "clean", clean_f1, clean_f1, len(records), test_hash)
        )
        grid = [("random", k) for k in stores] + [("gradient", k) for k in stores]
        if not args.grid:
            grid = [(m, k) for (m, k) in grid if k == min(stores)]
        for mode, k in grid:
            config = adversary.AttackConfig(
                k=k,
                mode=mode,
                eta=float(cfg["eta"]),
                samples=int(cfg["samples"]),
                seed=int(cfg["seed"]),
            )
            rows = _run_attack(model, records, stores[k], config, jobs)
            runs.append(
                evalharness.RunResult(
                    regime,
                    ADVERSARY_LABELS.get((mode, k), f"{mode}-k{k}"),
                    clean_f1,
                    evalharness.adv_f1_of_rows(rows),
                    len(records),
                    test_hash,
                )
            )
    report = evalharness.build_report(runs)
    report.metadata["config"] = cfg
    text = report.to_text()
    print(text, end="")
    if args.out:
        out = Path(args.out)
        out.with_suffix(".json").write_text(
            dumps(report.to_json_obj()) + "\n", encoding="utf-8"
        )
        out.with_suffix(".txt").write_text(text, encoding="utf-8")
        out.with_suffix(".csv").write_text(report.to_csv(), encoding="utf-8")
    return 0


# --- selfcheck ---


def cmd_selfcheck(args) -> int:
    failures = []

    def check(label: str, ok: bool) -> None:
        print(f"{'ok  ' if ok else 'FAIL'} {label}")
        if not ok:
            failures.append(label)

    rng = np.random.default_rng(0)
    records = corpusgen.generate_corpus(40, seed=17)
    vocab = corpusgen.build_vocab(records)
    state = summodel.ModelState.new(vocab, summodel.Hyper(dim=8, heads=3, max_len=80, seed=1))

    # parameter gradients vs central finite differences
    worst = 0.0
    for rec in records[:10]:
        x = summodel.encode(rec.method, vocab, 80)
        grads, _ = summodel.backward(state, x, rec.gold_subtokens)
        flat = state.head_b
        for _ in range(5):
            h = 1e-4
            i = rng.integers(flat.shape[0])
            j = rng.integers(flat.shape[1])
            up = flat.copy()
            up[i, j] += h
            down = flat.copy()
            down[i, j] -= h
            import dataclasses

            plus = summodel.loss(dataclasses.replace(state, head_b=up), x, rec.gold_subtokens)
            minus = summodel.loss(dataclasses.replace(state, head_b=down), x, rec.gold_subtokens)
            fd = (plus - minus) / (2 * h)
            err = abs(fd - grads.head_b[i, j]) / max(1.0, abs(fd))
            worst = max(worst, err)
    check(f"gradient finite-difference spot check (max rel err {worst:.2e})", worst < 1e-4)

    # transformation oracle
    store = sketchstore.pregenerate(records, k=1, seed=23)
    mismatches = 0
    for rec in records:
        for sk in store[rec.id].sketches:
            assignment = adversary.random_fill(sk, vocab, derive_seed(31, rec.id))
            variant = fill(sk, assignment)
            for fargs, finit in corpusgen.sample_inputs(rec.method, 3, seed=7):
                a = interpret(rec.method, fargs, finit)
                b = interpret(variant, fargs, corpusgen.rekey_field_init(finit, rec.method, variant))
                if not functional_eq(a, b):
                    mismatches += 1
    check(f"transformation oracle on {len(records)} methods ({mismatches} mismatches)", mismatches == 0)

    # round trip
    bad = sum(1 for rec in records if parse_source(to_source(rec.method)) != rec.method)
    check(f"print/parse round trip ({bad} failures)", bad == 0)

    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mjrobust", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a labeled corpus")
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ratios", type=str)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("sketch", help="pre-generate sketch sets")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", choices=("all",) + corpusgen.SPLITS)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_sketch)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store")
    p.add_argument("--regime", choices=("normal", "augment", "adv-random", "adv-gradient"))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--reattack", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--heads", type=int)
    p.add_argument("--max-len", dest="max_len", type=int)
    p.add_argument("--vocab-in", dest="vocab_in", type=int)
    p.add_argument("--vocab-out", dest="vocab_out", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="attack a trained model over a store")
    p.add_argument("--corpus", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--mode", choices=("random", "gradient", "exhaustive"))
    p.add_argument("--k", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", choices=("all",) + corpusgen.SPLITS)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="clean/adversarial F1 report across models")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", action="append", default=[], metavar="REGIME=CKPT")
    p.add_argument("--store-k1", dest="store_k1")
    p.add_argument("--store-k5", dest="store_k5")
    p.add_argument("--grid", action="store_true", help="all four adversaries")
    p.add_argument("--eta", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", choices=("all",) + corpusgen.SPLITS)
    p.add_argument("--jobs", type=int)
    p.add_argument("--out", help="prefix for .json/.txt/.csv report files")
    p.add_argument("--config")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("selfcheck", help="run gradient and oracle smoke suites")
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, evalharness.CoverageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FormatError as exc:
        print(f"bad input file: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
