"""Candidate span enumeration and argument/predicate representations."""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import concat, gather_rows, matmul, narrow, reshape, softmax_rows


def enumerate_spans(n: int, max_width: int):
    """All (start, end) with width <= max_width, ordered by (start, end)."""
    if n < 1 or max_width < 1:
        raise ValueError("n and max_width must be >= 1")
    return [(s, e) for s in range(n) for e in range(s, min(s + max_width, n))]


def span_count(n: int, max_width: int) -> int:
    w = min(max_width, n)
    return n * w - w * (w - 1) // 2


def soft_head(spans, x_head, xbar, w_e):
    """Attention-weighted sum of x_head rows per span; returns (S, token_dim).

    Logits are w_e . xbar_t for t inside each span, softmax-normalized.
    Spans must be grouped or mixed freely; widths are handled by batching
    spans of equal width together.
    """
    logits_all = matmul(xbar, w_e)  # (n,)
    S = len(spans)
    dim = x_head.shape[1]
    pieces = []
    order = []
    by_width = {}
    for i, (s, e) in enumerate(spans):
        by_width.setdefault(e - s + 1, []).append((i, s))
    for width, group in sorted(by_width.items()):
        starts = np.array([s for _, s in group])
        flat_idx = (starts[:, None] + np.arange(width)[None, :]).reshape(-1)
        logits = reshape(gather_rows(logits_all, flat_idx), (len(group), width))
        weights = softmax_rows(logits)
        acc = None
        for j in range(width):
            rows = gather_rows(x_head, starts + j)
            wj = narrow(weights, 1, j, j + 1)  # (G, 1) column broadcast
            term = wj * rows
            acc = term if acc is None else acc + term
        pieces.append(acc)
        order.extend(i for i, _ in group)
    stacked = concat(pieces, axis=0)
    perm = np.empty(S, dtype=np.intp)
    perm[np.array(order)] = np.arange(S)
    return gather_rows(stacked, perm)


def soft_head_weights(span, xbar, w_e):
    """Attention distribution for a single span (test/inspection helper)."""
    s, e = span
    logits = matmul(narrow(xbar, 0, s, e + 1), w_e)
    return ag.softmax(logits)


def width_features(spans, width_table):
    """Width embedding rows per span; width w lives at table row w-1."""
    widths = np.array([e - s for s, e in spans])
    return ag.embedding_lookup(width_table, widths)


def span_reprs(spans, xbar, heads, width_feats):
    """g(a) = [xbar_start; xbar_end; soft_head; width_feature], rows per span."""
    starts = np.array([s for s, _ in spans])
    ends = np.array([e for _, e in spans])
    return concat([
        gather_rows(xbar, starts),
        gather_rows(xbar, ends),
        heads,
        width_feats,
    ], axis=1)


def predicate_reprs(indices, xbar):
    """g(p) is the BiLSTM output row at each predicate index."""
    n = xbar.shape[0]
    for i in indices:
        if not (0 <= i < n):
            raise ValueError(f"predicate index {i} out of range for length {n}")
    return gather_rows(xbar, np.asarray(indices, dtype=np.intp))
