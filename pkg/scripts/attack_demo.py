#!/usr/bin/env python3
"""Show the strongest attack found for a handful of test methods.

Trains a small normal model, attacks each sampled test record with the
gradient 1-adversary, and prints the clean program, the transformed
program, and the prediction flip side by side.
"""

import argparse

from mjrobust import adversary, corpusgen, evalharness, sketchstore, summodel, training
from mjrobust.minilang import to_source


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=1200)
    ap.add_argument("--epochs", type=int, default=25)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--show", type=int, default=4)
    args = ap.parse_args()

    records = corpusgen.generate_corpus(args.n, seed=args.seed)
    train = [r for r in records if r.split == "train"]
    test = [r for r in records if r.split == "test"]
    vocab = corpusgen.build_vocab(train)
    state = summodel.ModelState.new(vocab, summodel.Hyper(seed=args.seed))
    state, _ = training.train_normal(
        train, state, training.TrainConfig(epochs=args.epochs, lr=2.0, seed=args.seed)
    )
    store = sketchstore.pregenerate(test, k=1, seed=args.seed)
    config = adversary.AttackConfig(mode="gradient", k=1)

    shown = 0
    for rec in test:
        rows = evalharness.attack_records(state, [rec], store, config)
        row = rows[0]
        if row.adv_pred == row.clean_pred:
            continue
        print("=" * 60)
        print(f"{rec.id}: gold {list(rec.gold_subtokens)}")
        print(f"clean prediction {row.clean_pred} (loss {row.clean_loss:.3f})")
        print(to_source(rec.method))
        steps = [t.id for t in row.seq.steps]
        print(f"attack {steps} fill {row.fill} -> {row.adv_pred} (loss {row.adv_loss:.3f})")
        print(row.adv_src)
        shown += 1
        if shown >= args.show:
            break


if __name__ == "__main__":
    main()
