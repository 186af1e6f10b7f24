"""Full forward pass: tokens -> beams -> per-pair label log-probabilities."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from . import scoring, spans as sp
from .autograd import Tensor, concat, gather_rows, log_softmax_rows, reshape
from .config import ModelConfig
from .data import LabelSpace
from .encoder import _dropout_mask, bilstm_highway, init_encoder_params, token_reprs
from .scoring import Beam, init_scorer_params, pair_logits, prune


def init_params(cfg: ModelConfig, num_labels: int, seed: int, dtype=np.float32) -> dict:
    cfg.validate()
    rng = np.random.default_rng(seed)
    params = init_encoder_params(cfg, rng, dtype)
    params.update(init_scorer_params(cfg, num_labels, rng, dtype))
    return params


def cast_params(params: dict, dtype) -> dict:
    return {k: Tensor(v.data.astype(dtype), requires_grad=v.requires_grad)
            for k, v in params.items()}


@dataclass
class ForwardResult:
    n: int
    arg_beam: Beam                 # spans kept, with unary scores
    pred_indices: list             # predicate beam, ascending not required
    pred_scores: list
    logprobs: Tensor               # (|B_p|*|B_a|, |L|), predicate-major rows
    loss: Tensor | None
    n_pairs: int
    gold_pruned: int
    all_pred_scores: np.ndarray = None  # unary score per token, pre-pruning

    def frame_logprobs(self, k: int) -> np.ndarray:
        """Log-prob rows for the k-th predicate in the beam: (|B_a|, |L|)."""
        A = len(self.arg_beam.items)
        return self.logprobs.data[k * A:(k + 1) * A]


def forward_sentence(tokens, params, cfg: ModelConfig, label_space: LabelSpace,
                     lstm_table, head_table, gold_relations=None,
                     gold_predicates=None, mode="eval", rng=None) -> ForwardResult:
    """Encode one sentence and score all beam-surviving predicate/span pairs.

    With gold_relations, also builds the negative log likelihood over beam
    pairs; gold relations pruned out of either beam are counted, not scored.
    With gold_predicates, the predicate beam is exactly that index set.
    """
    n = len(tokens)
    if n < 1:
        raise ValueError("sentence must be nonempty")
    x_lstm, x_head = token_reprs(tokens, lstm_table, head_table, params, cfg, mode, rng)
    xbar = bilstm_highway(x_lstm, params, cfg, mode, rng)

    all_spans = sp.enumerate_spans(n, cfg.max_span_width)
    heads = sp.soft_head(all_spans, x_head, xbar, params["head.w_e"])
    wf = sp.width_features(all_spans, params["span.width"])
    if mode == "train" and cfg.dropout_hidden > 0:
        wf = ag.apply_mask(wf, _dropout_mask(rng, wf.shape, cfg.dropout_hidden, wf.dtype))
    g_a = sp.span_reprs(all_spans, xbar, heads, wf)
    phi_a = scoring.unary_arg_scores(g_a, params, cfg, mode, rng)

    g_p = sp.predicate_reprs(list(range(n)), xbar)
    phi_p = scoring.unary_pred_scores(g_p, params, cfg, mode, rng)

    arg_beam = prune(all_spans, phi_a.data, cfg.lambda_a, n, kind="argument")
    if gold_predicates is not None:
        preds = sorted(set(gold_predicates))
        for p in preds:
            if not (0 <= p < n):
                raise ValueError(f"gold predicate {p} out of range for length {n}")
        pred_scores = [float(phi_p.data[p]) for p in preds]
    else:
        pb = prune(list(range(n)), phi_p.data, cfg.lambda_p, n, kind="predicate")
        preds, pred_scores = pb.items, pb.scores

    A, P = len(arg_beam.items), len(preds)
    a_rows = np.asarray(arg_beam.indices, dtype=np.intp)
    a_sel = np.tile(a_rows, P)
    p_sel = np.repeat(np.asarray(preds, dtype=np.intp), A)
    pair_reprs = concat([gather_rows(g_a, a_sel), gather_rows(g_p, p_sel)], axis=1)
    rel = scoring.relation_scores(pair_reprs, params, cfg, mode, rng)
    phi_a_col = reshape(gather_rows(phi_a, a_sel), (A * P, 1))
    phi_p_col = reshape(gather_rows(phi_p, p_sel), (A * P, 1))
    logits = pair_logits(phi_a_col, phi_p_col, rel)
    logprobs = log_softmax_rows(logits)

    loss = None
    gold_pruned = 0
    if gold_relations is not None:
        gold_map = {}
        for r in gold_relations:
            gold_map[(r.predicate_index, (r.arg_start, r.arg_end))] = \
                label_space.index(r.label)
        beam_span_set = set(arg_beam.items)
        beam_pred_set = set(preds)
        for (p, span), _ in gold_map.items():
            if p not in beam_pred_set or span not in beam_span_set:
                gold_pruned += 1
        gold_ids = np.zeros(A * P, dtype=np.intp)
        for k, p in enumerate(preds):
            for j, span in enumerate(arg_beam.items):
                gold_ids[k * A + j] = gold_map.get((p, span), 0)
        loss = -ag.reduce_sum(ag.gather_elements(logprobs, gold_ids))

    return ForwardResult(n=n, arg_beam=arg_beam, pred_indices=list(preds),
                         pred_scores=list(pred_scores), logprobs=logprobs,
                         loss=loss, n_pairs=A * P, gold_pruned=gold_pruned,
                         all_pred_scores=np.array(phi_p.data, copy=True))
