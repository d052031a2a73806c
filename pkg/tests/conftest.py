import pytest

from mjrobust import corpusgen, summodel


@pytest.fixture(scope="session")
def small_corpus():
    return corpusgen.generate_corpus(120, seed=42)


@pytest.fixture(scope="session")
def small_vocab(small_corpus):
    return corpusgen.build_vocab([r for r in small_corpus if r.split == "train"])


@pytest.fixture(scope="session")
def tiny_model(small_vocab):
    hyper = summodel.Hyper(dim=8, heads=4, max_len=120, seed=3)
    return summodel.ModelState.new(small_vocab, hyper)
