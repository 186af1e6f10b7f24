import numpy as np
import pytest

from srlspan.config import ModelConfig
from srlspan.data import (EPSILON, EmbeddingTable, LabelSpace,
                          build_label_space, load_corpus, load_embeddings)
from srlspan.synth import write_corpus, write_embeddings


def tiny_config(**overrides):
    """Miniature configuration for gradient checks and fast unit tests."""
    base = dict(
        word_dim=8, char_dim=3, char_windows=(2, 3), char_filters=2,
        lstm_layers=1, hidden_dim=8, mlp_hidden=8, width_dim=4,
        max_span_width=4, dropout_word=0.0, dropout_hidden=0.0,
        dropout_recurrent=0.0,
    )
    base.update(overrides)
    return ModelConfig(**base)


def random_table(dim, words, seed=0):
    rng = np.random.default_rng(seed)
    vecs = {}
    for w in words:
        v = rng.standard_normal(dim)
        vecs[w] = (v / np.linalg.norm(v)).astype(np.float32)
    return EmbeddingTable(dim, vecs)


@pytest.fixture(scope="session")
def synth_paths(tmp_path_factory):
    d = tmp_path_factory.mktemp("synth")
    corpus = d / "corpus.jsonl"
    emb = d / "emb.txt"
    write_corpus(corpus, seed=7, size=30)
    write_embeddings(emb, seed=7, dim=16)
    return corpus, emb


@pytest.fixture(scope="session")
def synth_data(synth_paths):
    corpus, emb = synth_paths
    ds = load_corpus(corpus)
    table = load_embeddings(emb, 16)
    labels = build_label_space(ds)
    return ds, table, labels


@pytest.fixture
def two_label_space():
    return LabelSpace([EPSILON, "ARG0", "ARG1"], [False, True, True])
