"""Char CNN, token representations, and highway BiLSTM tests."""

import numpy as np
import pytest

from srlspan.autograd import Tensor, finite_diff_check, reduce_sum
from srlspan.config import paper_profile
from srlspan.encoder import (bilstm_highway, char_cnn, char_ids,
                             init_encoder_params, orthonormal, token_reprs)

from conftest import random_table, tiny_config


def params_for(cfg, seed=0, dtype=np.float32):
    return init_encoder_params(cfg, np.random.default_rng(seed), dtype)


# ---------------------------------------------------------------------------
# initialization


def test_orthonormal_square_blocks():
    rng = np.random.default_rng(0)
    for rows, cols in ((20, 20), (40, 20), (20, 40)):
        w = orthonormal(rng, rows, cols, dtype=np.float64)
        if rows >= cols:
            gram = w.T @ w
        else:
            gram = w @ w.T
        assert np.max(np.abs(gram - np.eye(min(rows, cols)))) < 1e-4


def test_lstm_gate_blocks_orthonormal():
    cfg = tiny_config()
    p = params_for(cfg, dtype=np.float64)
    H = cfg.hidden_dim
    wh = p["enc.l0.fwd.wh"].data
    for g in range(4):
        block = wh[:, g * H:(g + 1) * H]
        assert np.max(np.abs(block.T @ block - np.eye(H))) < 1e-4


def test_forget_gate_bias_one_rest_zero():
    cfg = tiny_config()
    p = params_for(cfg)
    H = cfg.hidden_dim
    b = p["enc.l0.bwd.b"].data
    np.testing.assert_array_equal(b[H:2 * H], np.ones(H))
    np.testing.assert_array_equal(b[:H], np.zeros(H))
    np.testing.assert_array_equal(b[2 * H:], np.zeros(2 * H))


def test_same_seed_identical_params():
    cfg = tiny_config()
    a, b = params_for(cfg, seed=5), params_for(cfg, seed=5)
    assert a.keys() == b.keys()
    for k in a:
        np.testing.assert_array_equal(a[k].data, b[k].data)


# ---------------------------------------------------------------------------
# char CNN


def test_char_cnn_output_length_paper():
    cfg = paper_profile()
    p = params_for(cfg)
    out = char_cnn("word", p, cfg)
    assert out.shape == (150,)  # 3 windows x 50 filters


def test_char_cnn_zero_filters_zero_output():
    cfg = tiny_config()
    p = params_for(cfg)
    for w in cfg.char_windows:
        p[f"char.conv{w}.w"].data[:] = 0.0
        p[f"char.conv{w}.b"].data[:] = 0.0
    out = char_cnn("anything", p, cfg)
    np.testing.assert_array_equal(out.data, np.zeros(cfg.char_repr_dim))


def test_char_cnn_short_word_padded():
    cfg = tiny_config()
    p = params_for(cfg)
    out = char_cnn("a", p, cfg)  # shorter than the widest window
    assert out.shape == (cfg.char_repr_dim,)
    assert np.all(np.isfinite(out.data))


def test_char_cnn_hand_computed_single_filter():
    # One window of width 1, one filter: conv output at position t is
    # w . emb[c_t] + b; relu then max over positions.
    cfg = tiny_config(char_dim=2, char_windows=(1,), char_filters=1)
    p = params_for(cfg)
    p["char.emb"].data[:] = 0.0
    p["char.emb"].data[ord("a"), :] = [1.0, 2.0]
    p["char.emb"].data[ord("b"), :] = [3.0, -1.0]
    p["char.conv1.w"].data[:] = [[1.0], [1.0]]
    p["char.conv1.b"].data[:] = [0.5]
    out = char_cnn("ab", p, cfg)
    # positions: a -> 1+2+0.5 = 3.5, b -> 3-1+0.5 = 2.5; max = 3.5
    np.testing.assert_allclose(out.data, [3.5])


def test_char_cnn_rejects_empty_word():
    cfg = tiny_config()
    with pytest.raises(ValueError):
        char_cnn("", params_for(cfg), cfg)


def test_char_ids_clamped_to_vocab():
    cfg = tiny_config(char_vocab=64)
    assert char_ids("é", cfg) == [63]


# ---------------------------------------------------------------------------
# token representations


def test_token_reprs_oov_word_zero_word_part():
    cfg = tiny_config()
    p = params_for(cfg)
    table = random_table(cfg.word_dim, ["known"])
    x_lstm, x_head = token_reprs(["known", "unknown"], table, table, p, cfg)
    assert x_lstm.shape == (2, cfg.token_dim)
    np.testing.assert_array_equal(x_lstm.data[1, :cfg.word_dim], 0.0)
    assert np.any(x_lstm.data[1, cfg.word_dim:] != 0.0)  # char part survives
    assert np.any(x_lstm.data[0, :cfg.word_dim] != 0.0)
    np.testing.assert_array_equal(x_head.data[1, :cfg.word_dim], 0.0)


def test_token_reprs_eval_deterministic():
    cfg = tiny_config()
    p = params_for(cfg)
    table = random_table(cfg.word_dim, ["a", "b"])
    r1 = token_reprs(["a", "b"], table, table, p, cfg)
    r2 = token_reprs(["a", "b"], table, table, p, cfg)
    np.testing.assert_array_equal(r1[0].data, r2[0].data)
    np.testing.assert_array_equal(r1[1].data, r2[1].data)


def test_token_reprs_inverted_dropout_scaling():
    cfg = tiny_config(dropout_word=0.5)
    p = params_for(cfg)
    table = random_table(cfg.word_dim, ["a"])
    base, _ = token_reprs(["a"], table, table, p, cfg, mode="eval")
    dropped, _ = token_reprs(["a"], table, table, p, cfg, mode="train",
                             rng=np.random.default_rng(0))
    nz = dropped.data != 0.0
    assert nz.any() and (~nz).any()  # rate 0.5 both drops and keeps something
    np.testing.assert_allclose(dropped.data[nz], 2.0 * base.data[nz], rtol=1e-6)


# ---------------------------------------------------------------------------
# BiLSTM


def test_bilstm_output_shape():
    cfg = tiny_config()
    p = params_for(cfg)
    table = random_table(cfg.word_dim, ["a", "b", "c"])
    x, _ = token_reprs(["a", "b", "c"], table, table, p, cfg)
    out = bilstm_highway(x, p, cfg)
    assert out.shape == (3, cfg.context_dim)


def test_lstm_directional_symmetry():
    # Running the same weights backward over the reversed sequence mirrors the
    # forward pass over the original sequence.
    from srlspan.encoder import _lstm_weights, _run_lstm

    H, D = 4, 6
    rng = np.random.default_rng(2)
    wx_, wh_, b_ = _lstm_weights(rng, D, H, np.float64)
    wx, wh, b = Tensor(wx_), Tensor(wh_), Tensor(b_)
    x = Tensor(rng.standard_normal((5, D)))
    x_rev = Tensor(x.data[::-1].copy())
    fwd = _run_lstm(x, wx, wh, b, H, None, reverse=False).data
    bwd = _run_lstm(x_rev, wx, wh, b, H, None, reverse=True).data
    np.testing.assert_allclose(fwd, bwd[::-1], atol=1e-12)


def test_bilstm_eval_pure_function():
    cfg = tiny_config(lstm_layers=2)
    p = params_for(cfg)
    rng = np.random.default_rng(3)
    x = Tensor(rng.standard_normal((5, cfg.token_dim)).astype(np.float32))
    a = bilstm_highway(x, p, cfg).data
    b = bilstm_highway(x, p, cfg).data
    np.testing.assert_array_equal(a, b)


def test_variational_masks_constant_across_timesteps():
    cfg = tiny_config(lstm_layers=2, dropout_recurrent=0.4)
    p = params_for(cfg)
    rng = np.random.default_rng(4)
    x = Tensor(rng.standard_normal((6, cfg.token_dim)).astype(np.float32))
    mask_log = {}
    bilstm_highway(x, p, cfg, mode="train", rng=np.random.default_rng(8),
                   mask_log=mask_log)
    assert set(mask_log) == {(l, d) for l in range(2) for d in ("fwd", "bwd")}
    for key, masks in mask_log.items():
        assert len(masks) == 6  # one recorded application per timestep
        for m in masks[1:]:
            np.testing.assert_array_equal(m, masks[0])
    # masks differ across layer/direction (resampled per sequence run)
    flat = [m[0].tobytes() for m in (masks[0] for masks in mask_log.values())]
    assert len(set(flat)) > 1


def test_encoder_gradient_miniature():
    # 3 tokens, 1 layer, hidden 4: recurrent weight gradient vs central differences.
    cfg = tiny_config(hidden_dim=4, word_dim=4, char_dim=2, char_windows=(2,),
                      char_filters=2)
    p = params_for(cfg, dtype=np.float64)
    rng = np.random.default_rng(5)
    x = Tensor(rng.standard_normal((3, cfg.token_dim)))

    target = p["enc.l0.fwd.wh"]
    target.requires_grad = True

    def f(t):
        local = dict(p)
        local["enc.l0.fwd.wh"] = t
        return reduce_sum(bilstm_highway(x, local, cfg))

    assert finite_diff_check(f, target) < 1e-4
