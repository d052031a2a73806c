"""mjrobust: attack and adversarially train a tiny code-summarization model.

Subpackages/modules:
    minilang     lexer, parser, printer, interpreter for the MJ mini-language
    transforms   semantics-preserving rewrites producing sketches with holes
    sketchstore  offline pre-generation and JSONL persistence of sketch sets
    summodel     differentiable bag-of-subtokens summarization model
    adversary    enumerative + gradient search for worst-case transformed programs
    training     normal / augmented / adversarial training regimes
    evalharness  micro-F1 scoring and regime-vs-adversary reports
    corpusgen    synthetic labeled corpus of MJ methods
    cli          pipeline entry point (gen / sketch / train / attack / eval / selfcheck)
"""

__version__ = "0.1.0"
