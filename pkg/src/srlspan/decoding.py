"""Turning per-pair label distributions into final span graphs.

Three modes: greedy (independent argmax per span), nonoverlap (exact dynamic
program selecting a maximum-score set of pairwise non-overlapping labeled
spans), and unique_core (same, additionally using each core role at most once
per predicate). The DP objective is the sum of label log-probabilities over
all spans of the frame; since the null-label terms are constant across
assignments, it reduces to selecting spans by their gain over the null label.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np

from .data import Dataset, LabelSpace, Relation
from .model import forward_sentence

MODES = ("greedy", "nonoverlap", "unique_core")


@dataclass
class ScoredFrame:
    """One predicate with log-probability rows over L for each beam span."""
    predicate: int
    spans: list          # (start, end) pairs
    logprobs: np.ndarray  # (len(spans), |L|), each row log-normalized

    def objective(self, assignment: dict) -> float:
        """Sum of log-probs with unassigned spans at the null label."""
        total = 0.0
        for i, span in enumerate(self.spans):
            total += float(self.logprobs[i, assignment.get(span, 0)])
        return total


def greedy_decode(frame: ScoredFrame):
    """Independent argmax per span; ties resolve to the null label first."""
    out = []
    for i, span in enumerate(frame.spans):
        label = int(np.argmax(frame.logprobs[i]))
        if label != 0:
            out.append((span, label))
    return out


@dataclass(frozen=True)
class _State:
    gain: float
    count: int
    chosen: tuple  # ((span, label), ...) in selection order

    def better_than(self, other):
        if self.gain != other.gain:
            return self.gain > other.gain
        if self.count != other.count:
            return self.count < other.count
        return tuple(sorted(self.chosen)) < tuple(sorted(other.chosen))


_EMPTY = _State(0.0, 0, ())


def _sorted_spans(frame):
    order = sorted(range(len(frame.spans)),
                   key=lambda i: (frame.spans[i][1], frame.spans[i][0]))
    return order


def _predecessors(frame, order):
    """For each position in `order`, the last earlier span ending before its start."""
    ends = [frame.spans[i][1] for i in order]
    preds = []
    for pos, i in enumerate(order):
        start = frame.spans[i][0]
        preds.append(bisect.bisect_left(ends, start, 0, pos) - 1)
    return preds


def decode_nonoverlap(frame: ScoredFrame):
    """Max-score set of non-overlapping labeled spans (exact interval DP)."""
    L = frame.logprobs.shape[1]
    if L < 2:
        return []
    order = _sorted_spans(frame)
    preds = _predecessors(frame, order)
    dp = [_EMPTY]  # dp[k] = best over first k spans in `order`
    for pos, i in enumerate(order):
        span = frame.spans[i]
        row = frame.logprobs[i]
        label = 1 + int(np.argmax(row[1:]))
        gain = float(row[label] - row[0])
        best = dp[pos]
        base = dp[preds[pos] + 1]
        take = _State(base.gain + gain, base.count + 1, base.chosen + ((span, label),))
        dp.append(take if take.better_than(best) else best)
    return sorted(dp[-1].chosen)


def decode_unique_core(frame: ScoredFrame, core_indices):
    """Non-overlap DP with each core label used at most once per frame.

    State is (prefix position, set of used core labels); exact for
    |core_indices| <= 16.
    """
    core = sorted(set(core_indices))
    if len(core) > 16:
        raise ValueError("unique-core decoding supports at most 16 core roles")
    if not core:
        return decode_nonoverlap(frame)
    L = frame.logprobs.shape[1]
    if L < 2:
        return []
    core_set = set(core)
    noncore = [l for l in range(1, L) if l not in core_set]
    order = _sorted_spans(frame)
    preds = _predecessors(frame, order)
    dp = [{frozenset(): _EMPTY}]
    for pos, i in enumerate(order):
        span = frame.spans[i]
        row = frame.logprobs[i]
        options = []
        if noncore:
            label = min(noncore, key=lambda l: (-row[l], l))
            options.append((label, float(row[label] - row[0]), None))
        for c in core:
            options.append((c, float(row[c] - row[0]), c))
        nxt = dict(dp[pos])  # skip span i
        base_states = dp[preds[pos] + 1]
        for state, val in base_states.items():
            for label, gain, used_core in options:
                if used_core is not None and used_core in state:
                    continue
                new_state = state | {used_core} if used_core is not None else state
                cand = _State(val.gain + gain, val.count + 1,
                              val.chosen + ((span, label),))
                cur = nxt.get(new_state)
                if cur is None or cand.better_than(cur):
                    nxt[new_state] = cand
        dp.append(nxt)
    best = None
    for val in dp[-1].values():
        if best is None or val.better_than(best):
            best = val
    return sorted(best.chosen)


def decode_frame(frame: ScoredFrame, mode: str, core_indices=()):
    if mode == "greedy":
        return greedy_decode(frame)
    if mode == "nonoverlap":
        return decode_nonoverlap(frame)
    if mode == "unique_core":
        return decode_unique_core(frame, core_indices)
    raise ValueError(f"unknown decode mode {mode!r}")


def predict_sentence(tokens, params, cfg, label_space: LabelSpace, lstm_table,
                     head_table, mode="nonoverlap", gold_predicates=None,
                     with_logprobs=False):
    """Decode one sentence; returns a list of (predicate, [Relation, ...]).

    Predicates whose decoded relation set is empty are omitted.
    """
    result = forward_sentence(tokens, params, cfg, label_space, lstm_table,
                              head_table, gold_predicates=gold_predicates,
                              mode="eval")
    core_idx = [label_space.index(l) for l in label_space.core_roles
                if l in label_space.labels]
    frames = []
    for k, p in enumerate(result.pred_indices):
        frame = ScoredFrame(p, list(result.arg_beam.items), result.frame_logprobs(k))
        decoded = decode_frame(frame, mode, core_idx)
        rels = []
        for (s, e), label in decoded:
            rel = Relation(p, s, e, label_space.labels[label])
            if with_logprobs:
                rels.append((rel, float(frame.logprobs[frame.spans.index((s, e)), label])))
            else:
                rels.append(rel)
        if rels:
            frames.append((p, rels))
    return frames


def predict_dataset(dataset: Dataset, params, cfg, label_space, lstm_table,
                    head_table, mode="nonoverlap", use_gold_predicates=False):
    """Decode a dataset; yields (sentence, [Relation, ...]) per input line."""
    out = []
    for sent, rels, _ in dataset:
        gold_preds = {r.predicate_index for r in rels} if use_gold_predicates else None
        if use_gold_predicates and not gold_preds:
            out.append((sent, []))
            continue
        frames = predict_sentence(sent.tokens, params, cfg, label_space,
                                  lstm_table, head_table, mode=mode,
                                  gold_predicates=gold_preds)
        flat = [r for _, frame_rels in frames for r in frame_rels]
        out.append((sent, flat))
    return out
