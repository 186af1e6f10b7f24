"""Tuple micro-F1 scoring and structural analyses.

Tuples are (sentence_index, predicate_index, arg_start, arg_end, label);
matching is exact tuple equality, pooled over the whole corpus.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

from .data import EPSILON
from .model import forward_sentence
from .scoring import prune

DISTANCE_BINS = ((0, 0), (1, 2), (3, 6), (7, None))
DISTANCE_BIN_LABELS = ("0", "1-2", "3-6", "7+")


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    gold: int
    predicted: int
    matched: int
    recall_undefined: bool = False

    def to_dict(self):
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "gold": self.gold, "predicted": self.predicted, "matched": self.matched,
            "recall_undefined": self.recall_undefined,
        }


@dataclass
class ViolationReport:
    unique_core: int = 0
    continuation: int = 0
    reference: int = 0

    def to_dict(self):
        return {"U": self.unique_core, "C": self.continuation, "R": self.reference}


def _check_tuples(tuples):
    for t in tuples:
        if t[-1] == EPSILON:
            raise ValueError("evaluation tuples must not carry the null label")


def micro_f1(gold, predicted) -> EvalReport:
    """Pooled micro P/R/F1 on exact tuple matches.

    With an empty gold set: recall is 1 when predictions are also empty,
    otherwise reported as 0 with recall_undefined set.
    """
    gold, predicted = set(gold), set(predicted)
    _check_tuples(gold)
    _check_tuples(predicted)
    matched = len(gold & predicted)
    precision = matched / len(predicted) if predicted else 0.0
    undefined = False
    if gold:
        recall = matched / len(gold)
    elif not predicted:
        recall = 1.0
    else:
        recall = 0.0
        undefined = True
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(precision, recall, f1, len(gold), len(predicted), matched, undefined)


def frames_by_predicate(tuples):
    frames = defaultdict(set)
    for sent_i, p, s, e, label in tuples:
        frames[(sent_i, p)].add((s, e, label))
    return frames


def complete_predicate_accuracy(gold, predicted) -> float:
    """Fraction of gold predicates whose predicted relation set is exactly right."""
    gold_frames = frames_by_predicate(gold)
    pred_frames = frames_by_predicate(predicted)
    if not gold_frames:
        return 1.0 if not pred_frames else 0.0
    correct = sum(1 for key, rels in gold_frames.items()
                  if pred_frames.get(key, set()) == rels)
    return correct / len(gold_frames)


def violation_counts(tuples, core_roles) -> ViolationReport:
    """Count U/C/R structural violations over frames.

    U: once per frame per core label appearing at least twice.
    C: per C-X relation with no base X starting earlier in the same frame.
    R: per R-X relation whose base X appears nowhere in the same frame.
    """
    core = set(core_roles)
    report = ViolationReport()
    for _, rels in frames_by_predicate(tuples).items():
        labels = Counter(label for _, _, label in rels)
        report.unique_core += sum(1 for l, c in labels.items() if l in core and c >= 2)
        for s, e, label in rels:
            if label.startswith("C-"):
                base = label[2:]
                if not any(l == base and s2 < s for s2, _, l in rels):
                    report.continuation += 1
            elif label.startswith("R-"):
                base = label[2:]
                if not any(l == base for _, _, l in rels):
                    report.reference += 1
    return report


def tuple_distance(predicate: int, start: int, end: int) -> int:
    """Tokens strictly between the predicate and the nearest span endpoint."""
    if start <= predicate <= end:
        return 0
    if predicate < start:
        return start - predicate - 1
    return predicate - end - 1


def distance_bin(distance: int) -> int:
    for i, (lo, hi) in enumerate(DISTANCE_BINS):
        if distance >= lo and (hi is None or distance <= hi):
            return i
    raise AssertionError("unbinnable distance")


def distance_breakdown(gold, predicted):
    """Per-bin micro-F1, each tuple binned by its own coordinates."""
    reports = []
    for b in range(len(DISTANCE_BINS)):
        g = {t for t in gold if distance_bin(tuple_distance(t[1], t[2], t[3])) == b}
        p = {t for t in predicted if distance_bin(tuple_distance(t[1], t[2], t[3])) == b}
        reports.append(micro_f1(g, p))
    return reports


def beam_recall_curve(dataset, params, cfg, label_space, lstm_table, head_table,
                      lambdas):
    """Recall of gold argument-bearing predicates kept in the predicate beam.

    Predicate unary scores are computed once per sentence; each lambda reuses
    them, so the curve is a pure function of the beam size rule.
    """
    scored = []
    for sent, rels, _ in dataset:
        gold_preds = {r.predicate_index for r in rels}
        if not gold_preds:
            continue
        result = forward_sentence(sent.tokens, params, cfg, label_space,
                                  lstm_table, head_table, mode="eval")
        scored.append((len(sent), result.all_pred_scores, gold_preds))
    curve = []
    for lam in lambdas:
        kept = total = 0
        for n, pred_scores, gold_preds in scored:
            beam = prune(list(range(n)), pred_scores, lam, n, kind="predicate")
            kept += len(gold_preds & set(beam.items))
            total += len(gold_preds)
        curve.append((float(lam), kept / total if total else 1.0))
    return curve


def syntactic_agreement(predicted_spans_by_sentence, constituents_by_sentence):
    """Fraction of predicted spans that exactly match a gold constituent.

    Sentences without constituent annotation are skipped and counted.
    Returns (agreement or None, n_spans, n_skipped_sentences).
    """
    matched = total = skipped = 0
    for spans, cons in zip(predicted_spans_by_sentence, constituents_by_sentence):
        if cons is None:
            skipped += 1
            continue
        con_set = set(map(tuple, cons))
        for span in spans:
            total += 1
            if tuple(span) in con_set:
                matched += 1
    if total == 0:
        return None, 0, skipped
    return matched / total, total, skipped


def relations_to_tuples(dataset_like):
    """Flatten (sentence, relations) pairs into scoring tuples."""
    tuples = set()
    for i, entry in enumerate(dataset_like):
        rels = entry[1]
        for r in rels:
            tuples.add((i, r.predicate_index, r.arg_start, r.arg_end, r.label))
    return tuples
