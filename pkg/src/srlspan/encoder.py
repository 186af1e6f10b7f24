"""Token-level context: char CNN inputs and the stacked highway BiLSTM."""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Tensor, apply_mask, concat, const, matmul, narrow, relu, sigmoid, tanh
from .config import ModelConfig


def orthonormal(rng, rows, cols, dtype=np.float32):
    """Matrix whose square blocks satisfy W^T W = I (QR of a Gaussian)."""
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))  # fix QR sign ambiguity for determinism
    if rows < cols:
        q = q.T
    return q[:rows, :cols].astype(dtype)


def glorot(rng, rows, cols, dtype=np.float32):
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols)).astype(dtype)


def _lstm_weights(rng, in_dim, hidden, dtype):
    """Gate blocks (input, forget, cell, output) each orthonormally initialized."""
    wx = np.concatenate([orthonormal(rng, in_dim, hidden, dtype) for _ in range(4)], axis=1)
    wh = np.concatenate([orthonormal(rng, hidden, hidden, dtype) for _ in range(4)], axis=1)
    b = np.zeros(4 * hidden, dtype=dtype)
    b[hidden:2 * hidden] = 1.0  # forget-gate bias
    return wx, wh, b


def init_encoder_params(cfg: ModelConfig, rng, dtype=np.float32) -> dict:
    H = cfg.hidden_dim
    D = cfg.context_dim
    p = {}
    p["char.emb"] = Tensor(
        (rng.standard_normal((cfg.char_vocab, cfg.char_dim)) * 0.1).astype(dtype),
        requires_grad=True)
    for w in cfg.char_windows:
        p[f"char.conv{w}.w"] = Tensor(
            glorot(rng, w * cfg.char_dim, cfg.char_filters, dtype), requires_grad=True)
        p[f"char.conv{w}.b"] = Tensor(np.zeros(cfg.char_filters, dtype=dtype),
                                      requires_grad=True)
    p["enc.in_proj.w"] = Tensor(glorot(rng, cfg.token_dim, D, dtype), requires_grad=True)
    p["enc.in_proj.b"] = Tensor(np.zeros(D, dtype=dtype), requires_grad=True)
    for layer in range(cfg.lstm_layers):
        for d in ("fwd", "bwd"):
            wx, wh, b = _lstm_weights(rng, D, H, dtype)
            p[f"enc.l{layer}.{d}.wx"] = Tensor(wx, requires_grad=True)
            p[f"enc.l{layer}.{d}.wh"] = Tensor(wh, requires_grad=True)
            p[f"enc.l{layer}.{d}.b"] = Tensor(b, requires_grad=True)
        p[f"enc.l{layer}.hw.w"] = Tensor(glorot(rng, D, D, dtype), requires_grad=True)
        p[f"enc.l{layer}.hw.b"] = Tensor(np.zeros(D, dtype=dtype), requires_grad=True)
    return p


def char_ids(word: str, cfg: ModelConfig):
    return [min(ord(c), cfg.char_vocab - 1) for c in word]


def char_cnn(word: str, params: dict, cfg: ModelConfig) -> Tensor:
    """Convolve character embeddings per window, ReLU, max-pool, concatenate."""
    if not word:
        raise ValueError("char_cnn requires a nonempty word")
    emb = ag.embedding_lookup(params["char.emb"], char_ids(word, cfg))
    max_win = max(cfg.char_windows)
    if len(word) < max_win:
        pad = const(np.zeros((max_win - len(word), cfg.char_dim), dtype=emb.dtype))
        emb = concat([emb, pad], axis=0)
    pools = []
    for w in cfg.char_windows:
        convolved = ag.conv1d(emb, params[f"char.conv{w}.w"], params[f"char.conv{w}.b"], w)
        pools.append(ag.max_over_time(relu(convolved)))
    return concat(pools, axis=0)


def _dropout_mask(rng, shape, rate, dtype):
    keep = (rng.random(shape) >= rate).astype(dtype)
    return keep / (1.0 - rate)


def token_reprs(tokens, lstm_table, head_table, params, cfg: ModelConfig,
                mode="eval", rng=None):
    """Build x_lstm and x_head matrices (n x token_dim each).

    Word vectors come from the fixed tables; char vectors are shared between
    the two views. Train mode applies inverted dropout at cfg.dropout_word.
    """
    char_cache = {}
    char_rows = []
    for tok in tokens:
        if tok not in char_cache:
            char_cache[tok] = char_cnn(tok, params, cfg)
        char_rows.append(char_cache[tok])
    chars = ag.stack_rows(char_rows)
    word_lstm = const(np.stack([lstm_table.lookup(t) for t in tokens]).astype(chars.dtype))
    word_head = const(np.stack([head_table.lookup(t) for t in tokens]).astype(chars.dtype))
    x_lstm = concat([word_lstm, chars], axis=1)
    x_head = concat([word_head, chars], axis=1)
    if mode == "train" and cfg.dropout_word > 0:
        x_lstm = apply_mask(x_lstm, _dropout_mask(rng, x_lstm.shape, cfg.dropout_word, x_lstm.dtype))
        x_head = apply_mask(x_head, _dropout_mask(rng, x_head.shape, cfg.dropout_word, x_head.dtype))
    return x_lstm, x_head


def _run_lstm(x, wx, wh, b, hidden, recurrent_mask, reverse, mask_log=None):
    n = x.shape[0]
    dtype = x.dtype
    h = const(np.zeros((1, hidden), dtype=dtype))
    c = const(np.zeros((1, hidden), dtype=dtype))
    order = range(n - 1, -1, -1) if reverse else range(n)
    outs = [None] * n
    for t in order:
        xt = narrow(x, 0, t, t + 1)
        hprev = h
        if recurrent_mask is not None:
            hprev = apply_mask(hprev, recurrent_mask)
            if mask_log is not None:
                mask_log.append(recurrent_mask.copy())
        z = matmul(xt, wx) + matmul(hprev, wh) + b
        i = sigmoid(narrow(z, 1, 0, hidden))
        f = sigmoid(narrow(z, 1, hidden, 2 * hidden))
        g = tanh(narrow(z, 1, 2 * hidden, 3 * hidden))
        o = sigmoid(narrow(z, 1, 3 * hidden, 4 * hidden))
        c = f * c + i * g
        h = o * tanh(c)
        outs[t] = h
    return concat(outs, axis=0)


def bilstm_highway(x, params, cfg: ModelConfig, mode="eval", rng=None, mask_log=None):
    """Stacked highway BiLSTM over projected token inputs; returns (n, 2H).

    Per layer: forward and backward LSTMs over the previous layer's output,
    then a gated highway mix g*h + (1-g)*u with g = sigmoid(W u + b).
    Recurrent dropout uses one mask per layer/direction, shared across
    timesteps; hidden dropout is applied to each layer's output.
    """
    H = cfg.hidden_dim
    u = matmul(x, params["enc.in_proj.w"]) + params["enc.in_proj.b"]
    train = mode == "train"
    for layer in range(cfg.lstm_layers):
        halves = []
        for d, reverse in (("fwd", False), ("bwd", True)):
            rmask = None
            if train and cfg.dropout_recurrent > 0:
                rmask = _dropout_mask(rng, (1, H), cfg.dropout_recurrent, u.dtype)
            log = None
            if mask_log is not None and rmask is not None:
                log = mask_log.setdefault((layer, d), [])
            halves.append(_run_lstm(
                u, params[f"enc.l{layer}.{d}.wx"], params[f"enc.l{layer}.{d}.wh"],
                params[f"enc.l{layer}.{d}.b"], H, rmask, reverse, log))
        h = concat(halves, axis=1)
        gate = sigmoid(matmul(u, params[f"enc.l{layer}.hw.w"]) + params[f"enc.l{layer}.hw.b"])
        u = gate * h + (const(np.ones((), dtype=u.dtype)) - gate) * u
        if train and cfg.dropout_hidden > 0:
            u = apply_mask(u, _dropout_mask(rng, u.shape, cfg.dropout_hidden, u.dtype))
    return u
