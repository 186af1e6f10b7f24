"""Deterministic synthetic corpus and embedding generator for desk-scale runs.

A small template grammar produces sentences whose predicate-argument structure
is a function of the surface tokens, so a model can fit the corpus exactly.
Templates cover 1-3 non-overlapping arguments per predicate, shared spans
across two predicates, and occasional C-/R- roles.
"""

from __future__ import annotations

import numpy as np

from .data import Relation, Sentence, corpus_line

DETS = ["the", "some", "many"]
SUBJS = ["tourists", "students", "birds", "farmers"]
VERBS = ["visit", "help", "watch", "greet"]
OBJS = ["disney", "paris", "rome", "oslo"]
TIMES = ["today", "yesterday", "often"]

VOCAB = sorted(set(DETS + SUBJS + VERBS + OBJS + TIMES + ["and", "who"]))


def _t_basic(rng):
    toks = [rng.choice(DETS), rng.choice(SUBJS), rng.choice(VERBS), rng.choice(OBJS)]
    rels = [Relation(2, 0, 1, "ARG0"), Relation(2, 3, 3, "ARG1")]
    return toks, rels


def _t_time(rng):
    toks, rels = _t_basic(rng)
    toks.append(rng.choice(TIMES))
    rels.append(Relation(2, 4, 4, "ARGM-TMP"))
    return toks, rels


def _t_continuation(rng):
    toks = [rng.choice(DETS), rng.choice(SUBJS), rng.choice(VERBS),
            rng.choice(OBJS), "and", rng.choice(OBJS)]
    rels = [Relation(2, 0, 1, "ARG0"), Relation(2, 3, 3, "ARG1"),
            Relation(2, 5, 5, "C-ARG1")]
    return toks, rels


def _t_reference(rng):
    toks = [rng.choice(SUBJS), "who", rng.choice(VERBS), rng.choice(OBJS)]
    rels = [Relation(2, 0, 0, "ARG0"), Relation(2, 1, 1, "R-ARG0"),
            Relation(2, 3, 3, "ARG1")]
    return toks, rels


def _t_two_predicates(rng):
    toks = [rng.choice(DETS), rng.choice(SUBJS), rng.choice(VERBS),
            rng.choice(OBJS), "and", rng.choice(VERBS), rng.choice(OBJS)]
    rels = [Relation(2, 0, 1, "ARG0"), Relation(2, 3, 3, "ARG1"),
            Relation(5, 0, 1, "ARG0"), Relation(5, 6, 6, "ARG1")]
    return toks, rels


TEMPLATES = [_t_basic, _t_time, _t_continuation, _t_reference, _t_two_predicates]


def generate_corpus(seed: int, size: int):
    """Returns a list of (Sentence, relations, constituents) triples."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(size):
        template = TEMPLATES[int(rng.integers(len(TEMPLATES)))]
        toks, rels = template(rng)
        sent = Sentence(tuple(toks), doc_id="synth", sent_id=str(i))
        constituents = sorted({(r.arg_start, r.arg_end) for r in rels}
                              | {(0, len(toks) - 1)})
        out.append((sent, rels, constituents))
    return out


def write_corpus(path, seed: int, size: int):
    entries = generate_corpus(seed, size)
    with open(path, "w", encoding="utf-8") as fh:
        for sent, rels, cons in entries:
            fh.write(corpus_line(sent, rels, cons) + "\n")
    return len(entries)


def write_embeddings(path, seed: int, dim: int):
    """Unit-norm random vectors for the synthetic vocabulary."""
    rng = np.random.default_rng(seed)
    with open(path, "w", encoding="utf-8") as fh:
        for word in VOCAB:
            vec = rng.standard_normal(dim)
            vec /= np.linalg.norm(vec)
            fh.write(word + " " + " ".join(f"{v:.6f}" for v in vec) + "\n")
    return len(VOCAB)
