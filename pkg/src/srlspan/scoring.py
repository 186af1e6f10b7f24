"""Feed-forward scorers, the combined factor score, and beam pruning."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor, concat, const, matmul, relu
from .config import ModelConfig
from .encoder import _dropout_mask, glorot


def init_scorer_params(cfg: ModelConfig, num_labels: int, rng, dtype=np.float32) -> dict:
    """num_labels counts the full label space including the null label."""
    M = cfg.mlp_hidden
    p = {}
    for name, in_dim in (("arg", cfg.span_repr_dim), ("pred", cfg.context_dim),
                         ("rel", cfg.pair_repr_dim)):
        p[f"score.{name}.w1"] = Tensor(glorot(rng, in_dim, M, dtype), requires_grad=True)
        p[f"score.{name}.b1"] = Tensor(np.zeros(M, dtype=dtype), requires_grad=True)
        p[f"score.{name}.w2"] = Tensor(glorot(rng, M, M, dtype), requires_grad=True)
        p[f"score.{name}.b2"] = Tensor(np.zeros(M, dtype=dtype), requires_grad=True)
    p["score.arg.v"] = Tensor(glorot(rng, M, 1)[:, 0].astype(dtype), requires_grad=True)
    p["score.pred.v"] = Tensor(glorot(rng, M, 1)[:, 0].astype(dtype), requires_grad=True)
    p["score.rel.out"] = Tensor(glorot(rng, M, num_labels - 1, dtype), requires_grad=True)
    p["head.w_e"] = Tensor(glorot(rng, cfg.context_dim, 1)[:, 0].astype(dtype),
                           requires_grad=True)
    p["span.width"] = Tensor(
        (rng.standard_normal((cfg.max_span_width, cfg.width_dim)) * 0.1).astype(dtype),
        requires_grad=True)
    return p


def mlp2(x, params, prefix, cfg: ModelConfig, mode="eval", rng=None):
    """Two hidden ReLU layers, applied row-wise; hidden dropout in train mode."""
    h = relu(matmul(x, params[f"{prefix}.w1"]) + params[f"{prefix}.b1"])
    if mode == "train" and cfg.dropout_hidden > 0:
        h = ag.apply_mask(h, _dropout_mask(rng, h.shape, cfg.dropout_hidden, h.dtype))
    h = relu(matmul(h, params[f"{prefix}.w2"]) + params[f"{prefix}.b2"])
    if mode == "train" and cfg.dropout_hidden > 0:
        h = ag.apply_mask(h, _dropout_mask(rng, h.shape, cfg.dropout_hidden, h.dtype))
    return h


def unary_arg_scores(g_a, params, cfg, mode="eval", rng=None):
    return matmul(mlp2(g_a, params, "score.arg", cfg, mode, rng), params["score.arg.v"])


def unary_pred_scores(g_p, params, cfg, mode="eval", rng=None):
    return matmul(mlp2(g_p, params, "score.pred", cfg, mode, rng), params["score.pred.v"])


def relation_scores(pair_reprs, params, cfg, mode="eval", rng=None):
    """Per-pair scores for every non-null label: (pairs, |L|-1).

    The MLP trunk is evaluated once per pair and shared across labels.
    """
    trunk = mlp2(pair_reprs, params, "score.rel", cfg, mode, rng)
    return matmul(trunk, params["score.rel.out"])


@dataclass
class Beam:
    """Top-k candidates, scores non-increasing; `indices` refer to the input list."""
    items: list       # candidates, best first
    scores: list
    indices: list
    capacity: int


def beam_size(lam: float, n: int, n_candidates: int) -> int:
    k = math.ceil(lam * n - 1e-9)
    return max(1, min(k, n_candidates))


def prune(candidates, scores, lam: float, n: int, kind="argument") -> Beam:
    """Keep the top ceil(lam*n) candidates by score (clamped to [1, count]).

    Argument ties break by (earlier start, shorter span, earlier end);
    predicate ties break by lower index.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    if not candidates:
        return Beam([], [], [], 0)
    scores = np.asarray(scores, dtype=np.float64)
    if kind == "argument":
        keys = [(-scores[i], c[0], c[1] - c[0], c[1]) for i, c in enumerate(candidates)]
    else:
        keys = [(-scores[i], c) for i, c in enumerate(candidates)]
    order = sorted(range(len(candidates)), key=lambda i: keys[i])
    k = beam_size(lam, n, len(candidates))
    chosen = order[:k]
    return Beam([candidates[i] for i in chosen],
                [float(scores[i]) for i in chosen], chosen, k)


def phi(phi_a: float, phi_p: float, phi_rel, label_index: int) -> float:
    """Combined factor score; the null label (index 0) scores exactly 0."""
    if label_index == 0:
        return 0.0
    return float(phi_a) + float(phi_p) + float(phi_rel[label_index - 1])


def label_distribution(phi_a, phi_p, phi_rel) -> np.ndarray:
    """Softmax over [0, phi(l) for l != null]; returns probabilities over L."""
    logits = np.concatenate([[0.0], np.asarray(phi_rel, dtype=np.float64)
                             + float(phi_a) + float(phi_p)])
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


def pair_logits(phi_a_col, phi_p_col, rel):
    """Full-factor logits over the label space for a block of pairs.

    phi_a_col / phi_p_col: (pairs, 1) unary scores, rel: (pairs, |L|-1).
    Returns (pairs, |L|) with the null-label column fixed at 0.
    """
    shifted = rel + phi_a_col + phi_p_col
    zeros = const(np.zeros((rel.shape[0], 1), dtype=rel.dtype))
    return concat([zeros, shifted], axis=1)
