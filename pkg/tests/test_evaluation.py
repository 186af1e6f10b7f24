"""Micro-F1, violations, distance, beam-recall, and agreement tests."""

import pytest

from srlspan.data import EPSILON, Relation
from srlspan.evaluation import (DISTANCE_BIN_LABELS, beam_recall_curve,
                                complete_predicate_accuracy, distance_bin,
                                distance_breakdown, micro_f1,
                                relations_to_tuples, syntactic_agreement,
                                tuple_distance, violation_counts)

from conftest import tiny_config


T = lambda sent, p, s, e, label: (sent, p, s, e, label)


# ---------------------------------------------------------------------------
# micro F1


def test_f1_perfect():
    gold = {T(0, 2, 0, 1, "ARG0"), T(0, 2, 3, 3, "ARG1")}
    rep = micro_f1(gold, set(gold))
    assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)


def test_f1_half_match():
    gold = {T(0, 2, 0, 1, "ARG0"), T(0, 2, 3, 3, "ARG1")}
    pred = {T(0, 2, 0, 1, "ARG0"), T(0, 2, 3, 3, "ARG2")}
    rep = micro_f1(gold, pred)
    assert (rep.precision, rep.recall, rep.f1) == (0.5, 0.5, 0.5)
    assert (rep.gold, rep.predicted, rep.matched) == (2, 2, 1)


def test_f1_empty_predictions():
    gold = {T(0, 2, 0, 1, "ARG0")}
    rep = micro_f1(gold, set())
    assert (rep.precision, rep.recall, rep.f1) == (0.0, 0.0, 0.0)


def test_f1_both_empty():
    rep = micro_f1(set(), set())
    assert rep.recall == 1.0 and rep.f1 == 0.0 and not rep.recall_undefined


def test_f1_empty_gold_nonempty_pred_flagged():
    rep = micro_f1(set(), {T(0, 0, 0, 0, "ARG0")})
    assert rep.recall == 0.0 and rep.recall_undefined


def test_f1_symmetric_under_swap():
    gold = {T(0, 1, 0, 0, "ARG0"), T(0, 1, 2, 3, "ARG1")}
    pred = {T(0, 1, 0, 0, "ARG0"), T(1, 0, 0, 0, "ARG0"), T(0, 1, 4, 4, "ARG2")}
    a, b = micro_f1(gold, pred), micro_f1(pred, gold)
    assert a.precision == b.recall and a.recall == b.precision


def test_f1_rejects_null_label():
    with pytest.raises(ValueError):
        micro_f1({T(0, 0, 0, 0, EPSILON)}, set())


# ---------------------------------------------------------------------------
# complete-predicate accuracy


def test_cpa_all_exact():
    gold = {T(0, 2, 0, 1, "ARG0"), T(1, 3, 0, 0, "ARG1")}
    assert complete_predicate_accuracy(gold, set(gold)) == 1.0


def test_cpa_extra_relation_half():
    gold = {T(0, 2, 0, 1, "ARG0"), T(1, 3, 0, 0, "ARG1")}
    pred = set(gold) | {T(1, 3, 2, 2, "ARG2")}
    assert complete_predicate_accuracy(gold, pred) == 0.5


def test_cpa_missing_frame_incorrect():
    gold = {T(0, 2, 0, 1, "ARG0"), T(1, 3, 0, 0, "ARG1")}
    pred = {T(0, 2, 0, 1, "ARG0")}
    assert complete_predicate_accuracy(gold, pred) == 0.5


# ---------------------------------------------------------------------------
# violations


CORE = {"ARG0", "ARG1", "ARG2"}


def test_violation_duplicate_core():
    tuples = {T(0, 2, 0, 0, "ARG0"), T(0, 2, 3, 4, "ARG0")}
    assert violation_counts(tuples, CORE).unique_core == 1


def test_violation_u_counted_once_per_label():
    tuples = {T(0, 2, 0, 0, "ARG0"), T(0, 2, 1, 1, "ARG0"),
              T(0, 2, 2, 2, "ARG0"), T(0, 2, 3, 3, "ARG1"),
              T(0, 2, 4, 4, "ARG1")}
    assert violation_counts(tuples, CORE).unique_core == 2  # per label, not per extra


def test_violation_continuation_base_not_earlier():
    tuples = {T(0, 2, 5, 5, "C-ARG1"), T(0, 2, 8, 8, "ARG1")}
    assert violation_counts(tuples, CORE).continuation == 1
    ok = {T(0, 2, 3, 3, "ARG1"), T(0, 2, 5, 5, "C-ARG1")}
    assert violation_counts(ok, CORE).continuation == 0


def test_violation_reference_base_missing():
    tuples = {T(0, 2, 1, 1, "R-ARG0")}
    assert violation_counts(tuples, CORE).reference == 1
    ok = {T(0, 2, 0, 0, "ARG0"), T(0, 2, 1, 1, "R-ARG0")}
    assert violation_counts(ok, CORE).reference == 0


def test_violation_empty_input_all_zero():
    rep = violation_counts(set(), CORE)
    assert rep.to_dict() == {"U": 0, "C": 0, "R": 0}


def test_violations_scoped_per_frame():
    # Same duplicate labels across different predicates are fine.
    tuples = {T(0, 2, 0, 0, "ARG0"), T(0, 5, 1, 1, "ARG0")}
    assert violation_counts(tuples, CORE).unique_core == 0


# ---------------------------------------------------------------------------
# distance


def test_distance_adjacent_and_containing_zero():
    assert tuple_distance(2, 3, 5) == 0   # adjacent
    assert tuple_distance(4, 3, 5) == 0   # contained
    assert tuple_distance(6, 3, 5) == 0   # adjacent on the right


def test_distance_counting():
    assert tuple_distance(0, 4, 6) == 3   # tokens 1,2,3 in between
    assert distance_bin(3) == 2           # bin "3-6"
    assert distance_bin(0) == 0
    assert distance_bin(2) == 1
    assert distance_bin(100) == 3


def test_distance_bin_labels():
    assert DISTANCE_BIN_LABELS == ("0", "1-2", "3-6", "7+")


def test_distance_breakdown_single_bin():
    gold = {T(0, 2, 3, 3, "ARG1")}
    reports = distance_breakdown(gold, set(gold))
    assert reports[0].f1 == 1.0
    for rep in reports[1:]:
        assert rep.gold == rep.predicted == 0


def test_distance_breakdown_matched_sums():
    gold = {T(0, 0, 1, 1, "A"), T(0, 0, 3, 3, "B"), T(0, 0, 9, 9, "C")}
    pred = {T(0, 0, 1, 1, "A"), T(0, 0, 9, 9, "C"), T(0, 0, 5, 5, "D")}
    reports = distance_breakdown(gold, pred)
    assert sum(r.matched for r in reports) == len(gold & pred)


# ---------------------------------------------------------------------------
# beam recall


def test_beam_recall_monotone_and_hits_one(synth_data):
    ds, table, labels = synth_data
    cfg = tiny_config(word_dim=16)  # match the synth embedding dimension
    from srlspan.model import init_params
    params = init_params(cfg, labels.size, seed=0)
    lambdas = [0.1, 0.2, 0.4, 0.7, 1.0]
    curve = beam_recall_curve(ds, params, cfg, labels, table, table, lambdas)
    recalls = [r for _, r in curve]
    assert recalls == sorted(recalls)
    assert recalls[-1] == 1.0


# ---------------------------------------------------------------------------
# agreement


def test_agreement_subset_one():
    agr, n, skipped = syntactic_agreement([[(0, 1), (3, 3)]], [[(0, 1), (3, 3), (0, 3)]])
    assert (agr, n, skipped) == (1.0, 2, 0)


def test_agreement_disjoint_zero():
    agr, n, _ = syntactic_agreement([[(0, 0)]], [[(1, 2)]])
    assert (agr, n) == (0.0, 1)


def test_agreement_three_of_four():
    spans = [[(0, 0), (1, 1), (2, 2), (5, 6)]]
    cons = [[(0, 0), (1, 1), (2, 2)]]
    agr, n, _ = syntactic_agreement(spans, cons)
    assert (agr, n) == (0.75, 4)


def test_agreement_no_data():
    agr, n, skipped = syntactic_agreement([[(0, 0)]], [None])
    assert agr is None and n == 0 and skipped == 1


# ---------------------------------------------------------------------------
# tuple flattening


def test_relations_to_tuples_uses_sentence_order():
    from srlspan.data import Dataset, Sentence
    ds = Dataset([
        (Sentence(("a", "b")), [Relation(0, 1, 1, "ARG1")], None),
        (Sentence(("c",)), [Relation(0, 0, 0, "ARG0")], None),
    ])
    assert relations_to_tuples(ds) == {(0, 0, 1, 1, "ARG1"), (1, 0, 0, 0, "ARG0")}
    # also works on prediction-style (sentence, relations) pairs
    pairs = [(s, rels) for s, rels, _ in ds]
    assert relations_to_tuples(pairs) == relations_to_tuples(ds)
