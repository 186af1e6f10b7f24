"""Thin converter from CoNLL-2005-style props columns to the JSON-lines schema.

Expected input: blank-line-separated sentences. Each token line has the word,
the target lemma column ("-" for non-predicates), then one bracketed-tag
column per predicate, e.g. ``(A0*``, ``*``, ``*)``, ``(V*)``. Argument labels
A0..A5 are renamed ARG0..ARG5 (also under C-/R- prefixes) and AM-X becomes
ARGM-X, matching PropBank role conventions used elsewhere in the package.
"""

from __future__ import annotations

import re

from .data import CorpusError, Relation, Sentence

def _rename_label(label: str) -> str:
    prefix = ""
    if label.startswith(("C-", "R-")):
        prefix, label = label[:2], label[2:]
    if re.fullmatch(r"A[0-5]", label):
        label = "ARG" + label[1]
    elif label == "AA":
        label = "AA"
    elif label.startswith("AM"):
        label = "ARGM" + label[2:]
    return prefix + label


def parse_props_sentence(lines, first_line_no=1):
    words = []
    columns = None
    for line in lines:
        parts = line.split()
        if columns is None:
            columns = [[] for _ in parts[2:]]
        elif len(parts) - 2 != len(columns):
            raise CorpusError(f"line {first_line_no + len(words)}: ragged props columns")
        words.append(parts[0])
        for ci, tag in enumerate(parts[2:]):
            columns[ci].append(tag)
    sent = Sentence(tuple(words))
    relations = []
    for tags in columns or []:
        predicate = None
        spans = []
        open_label, open_start = None, None
        for i, tag in enumerate(tags):
            m = re.match(r"^\((\S+?)\*", tag)
            if m:
                open_label, open_start = m.group(1), i
            if tag.endswith(")"):
                if open_label is None:
                    raise CorpusError(f"line {first_line_no + i}: unbalanced props bracket")
                spans.append((open_label, open_start, i))
                open_label, open_start = None, None
        if open_label is not None:
            raise CorpusError(f"unclosed props bracket for label {open_label}")
        for label, s, e in spans:
            if label == "V":
                predicate = s
        if predicate is None:
            raise CorpusError("props column without a (V*) predicate span")
        for label, s, e in spans:
            if label == "V":
                continue
            rel = Relation(predicate, s, e, _rename_label(label))
            rel.validate(len(words))
            relations.append(rel)
    return sent, relations, None


def convert_props(in_path, out_path):
    """Convert a props file to JSON-lines; returns the number of sentences."""
    from .data import corpus_line

    count = 0
    with open(in_path, encoding="utf-8") as fh, open(out_path, "w", encoding="utf-8") as out:
        block, block_start = [], 1
        for line_no, line in enumerate(fh, start=1):
            if line.strip():
                if not block:
                    block_start = line_no
                block.append(line)
            elif block:
                sent, rels, _ = parse_props_sentence(block, block_start)
                out.write(corpus_line(sent, rels) + "\n")
                count += 1
                block = []
        if block:
            sent, rels, _ = parse_props_sentence(block, block_start)
            out.write(corpus_line(sent, rels) + "\n")
            count += 1
    return count
