"""Sentences, gold span graphs, label inventory, and embedding tables.

Corpus format is UTF-8 JSON-lines: each line an object with "tokens" (list of
strings) and "relations" (list of [predicate_index, arg_start, arg_end,
label]), optional "doc_id" / "sent_id" strings and optional "constituents"
(list of [start, end] syntactic spans). Indices are 0-based, spans inclusive.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

log = logging.getLogger(__name__)

EPSILON = "ε"
DEFAULT_CORE_ROLES = ("ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "ARG5", "AA")
MAX_SENTENCE_LENGTH = 200


class CorpusError(ValueError):
    """Malformed corpus or embedding file; message carries the line number."""


@dataclass(frozen=True)
class Sentence:
    tokens: tuple
    doc_id: str = ""
    sent_id: str = ""

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True, order=True)
class Relation:
    predicate_index: int
    arg_start: int
    arg_end: int
    label: str

    def validate(self, n: int, line_no=None):
        where = "" if line_no is None else f" (line {line_no})"
        if not (0 <= self.predicate_index < n):
            raise CorpusError(f"predicate_index {self.predicate_index} out of range{where}")
        if not (0 <= self.arg_start <= self.arg_end < n):
            raise CorpusError(
                f"invalid span ({self.arg_start}, {self.arg_end}) for length {n}{where}")
        if not self.label or self.label == EPSILON:
            raise CorpusError(f"relation label must be a non-null role{where}")


@dataclass
class LabelSpace:
    labels: list
    core_flags: list

    @property
    def epsilon_index(self):
        return 0

    @property
    def size(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def is_core(self, label: str) -> bool:
        i = self.labels.index(label)
        return self.core_flags[i]

    @property
    def core_roles(self):
        return [l for l, c in zip(self.labels, self.core_flags) if c]


@dataclass
class Dataset:
    sentences: list  # of (Sentence, list[Relation], constituents or None)

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def gold_predicates(self, i: int) -> set:
        _, rels, _ = self.sentences[i]
        return {r.predicate_index for r in rels}


def parse_corpus_line(line: str, line_no: int, max_length=MAX_SENTENCE_LENGTH):
    """Parse one JSON-lines record; returns None for skipped over-long sentences."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise CorpusError(f"line {line_no}: invalid JSON: {e}") from None
    if not isinstance(obj, dict) or "tokens" not in obj:
        raise CorpusError(f"line {line_no}: missing 'tokens' field")
    tokens = obj["tokens"]
    if not isinstance(tokens, list) or not tokens or any(
            not isinstance(t, str) or t == "" for t in tokens):
        raise CorpusError(f"line {line_no}: 'tokens' must be a nonempty list of nonempty strings")
    if len(tokens) > max_length:
        log.warning("line %d: sentence of length %d exceeds %d tokens, skipped",
                    line_no, len(tokens), max_length)
        return None
    sent = Sentence(tuple(tokens), str(obj.get("doc_id", "")), str(obj.get("sent_id", "")))
    rels = []
    for r in obj.get("relations", []):
        if not (isinstance(r, list) and len(r) == 4):
            raise CorpusError(f"line {line_no}: relation must be [pred, start, end, label]")
        rel = Relation(int(r[0]), int(r[1]), int(r[2]), str(r[3]))
        rel.validate(len(tokens), line_no)
        rels.append(rel)
    constituents = None
    if "constituents" in obj:
        constituents = []
        for c in obj["constituents"]:
            s, e = int(c[0]), int(c[1])
            if not (0 <= s <= e < len(tokens)):
                raise CorpusError(f"line {line_no}: constituent ({s}, {e}) out of range")
            constituents.append((s, e))
    return sent, rels, constituents


def load_corpus(path, max_length=MAX_SENTENCE_LENGTH) -> Dataset:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parsed = parse_corpus_line(line, line_no, max_length)
            if parsed is not None:
                entries.append(parsed)
    return Dataset(entries)


def corpus_line(sent: Sentence, rels, constituents=None, extra=None) -> str:
    obj = {"tokens": list(sent.tokens)}
    obj["relations"] = [[r.predicate_index, r.arg_start, r.arg_end, r.label] for r in rels]
    if sent.doc_id:
        obj["doc_id"] = sent.doc_id
    if sent.sent_id:
        obj["sent_id"] = sent.sent_id
    if constituents is not None:
        obj["constituents"] = [list(c) for c in constituents]
    if extra:
        obj.update(extra)
    return json.dumps(obj, ensure_ascii=False)


def save_corpus(dataset: Dataset, path):
    with open(path, "w", encoding="utf-8") as fh:
        for sent, rels, cons in dataset:
            fh.write(corpus_line(sent, rels, cons) + "\n")


def build_label_space(dataset: Dataset, core_roles=DEFAULT_CORE_ROLES) -> LabelSpace:
    observed = sorted({r.label for _, rels, _ in dataset for r in rels})
    labels = [EPSILON] + observed
    core = set(core_roles)
    return LabelSpace(labels, [l in core for l in labels])


class EmbeddingTable:
    """Fixed word vectors, unit-normalized at load; unknown words map to zeros."""

    def __init__(self, dim: int, vectors: dict):
        self.dim = dim
        self.vectors = vectors
        self._zero = np.zeros(dim, dtype=np.float32)

    def lookup(self, word: str) -> np.ndarray:
        return self.vectors.get(word, self._zero)

    def __contains__(self, word):
        return word in self.vectors


def load_embeddings(path, dim: int) -> EmbeddingTable:
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise CorpusError(
                    f"line {line_no}: expected word + {dim} values, got {len(parts) - 1}")
            word = parts[0]
            if word in vectors:
                continue  # first occurrence wins
            try:
                vec = np.array([float(v) for v in parts[1:]], dtype=np.float32)
            except ValueError:
                raise CorpusError(f"line {line_no}: non-numeric embedding value") from None
            norm = float(np.linalg.norm(vec))
            if norm > 0:
                vec /= norm
            vectors[word] = vec
    return EmbeddingTable(dim, vectors)


def batch_iterator(dataset: Dataset, max_sentences: int, max_words: int, seed: int):
    """Infinite epoch stream of batches under sentence- and word-count caps.

    Yields lists of dataset indices; each epoch is a fresh seeded shuffle and
    covers every usable sentence exactly once.
    """
    if max_sentences < 1:
        raise ValueError("max_sentences must be >= 1")
    rng = np.random.default_rng(seed)
    usable = []
    for i, (sent, _, _) in enumerate(dataset):
        if len(sent) > max_words:
            log.warning("sentence %d longer than max_words=%d, skipped", i, max_words)
        else:
            usable.append(i)
    if not usable:
        raise ValueError("no sentence fits within max_words")
    while True:
        order = list(usable)
        rng.shuffle(order)
        batch, words = [], 0
        for i in order:
            n = len(dataset.sentences[i][0])
            if batch and (len(batch) >= max_sentences or words + n > max_words):
                yield batch
                batch, words = [], 0
            batch.append(i)
            words += n
        if batch:
            yield batch


def epoch_batches(dataset, max_sentences, max_words, seed):
    """One epoch's worth of batches, materialized (test/inspection helper)."""
    it = batch_iterator(dataset, max_sentences, max_words, seed)
    usable = sum(1 for s, _, _ in dataset if len(s) <= max_words)
    out, seen = [], 0
    while seen < usable:
        b = next(it)
        out.append(b)
        seen += len(b)
    return out
