"""Optimizer, checkpoint, and training-loop tests."""

import struct

import numpy as np
import pytest

from srlspan.autograd import NumericDomainError, Tensor
from srlspan.config import TrainConfig
from srlspan.data import (Dataset, Sentence, build_label_space, load_corpus,
                          load_embeddings)
from srlspan.model import init_params
from srlspan.synth import write_corpus, write_embeddings
from srlspan.training import (Checkpoint, CheckpointError, OptimizerState,
                              adam_step, load_checkpoint,
                              save_checkpoint, train)

from conftest import tiny_config


# ---------------------------------------------------------------------------
# learning-rate schedule and Adam


def test_lr_schedule():
    tc = TrainConfig()
    assert tc.lr_at(0) == 0.001
    assert tc.lr_at(99) == 0.001
    np.testing.assert_allclose(tc.lr_at(100), 0.001 * 0.999)
    np.testing.assert_allclose(tc.lr_at(1000), 0.001 * 0.999 ** 10)


def test_adam_first_update_magnitude():
    p = {"w": Tensor(np.array([0.0]), requires_grad=True, dtype=np.float64)}
    p["w"].grad = np.array([1.0])
    state = OptimizerState.fresh(p)
    adam_step(p, state, lr=0.001, tc=TrainConfig())
    # bias-corrected first step with constant gradient is ~lr
    np.testing.assert_allclose(p["w"].data, [-0.001], rtol=1e-6)


def test_adam_zero_gradients_no_change():
    p = {"w": Tensor(np.array([1.5, -2.0]), requires_grad=True)}
    state = OptimizerState.fresh(p)
    before = p["w"].data.copy()
    adam_step(p, state, lr=0.1, tc=TrainConfig())  # grad is None -> zeros
    np.testing.assert_array_equal(p["w"].data, before)


def test_adam_nan_gradient_names_parameter():
    p = {"bad.param": Tensor(np.array([1.0]), requires_grad=True)}
    p["bad.param"].grad = np.array([np.nan])
    state = OptimizerState.fresh(p)
    with pytest.raises(NumericDomainError, match="bad.param"):
        adam_step(p, state, lr=0.001, tc=TrainConfig())


# ---------------------------------------------------------------------------
# checkpoints


def make_checkpoint(seed=0):
    cfg = tiny_config()
    params = init_params(cfg, 3, seed)
    state = OptimizerState.fresh(params)
    for m in state.m.values():
        m += 0.25
    return Checkpoint(cfg, TrainConfig(), ["ε", "ARG0", "ARG1"],
                      [False, True, True], params, state, step=17,
                      best_dev_f1=0.5)


def test_checkpoint_round_trip_bitwise(tmp_path):
    ckpt = make_checkpoint()
    path = tmp_path / "m.ckpt"
    save_checkpoint(ckpt, path)
    loaded = load_checkpoint(path)
    assert loaded.params.keys() == ckpt.params.keys()
    for name in ckpt.params:
        np.testing.assert_array_equal(loaded.params[name].data,
                                      ckpt.params[name].data)
        np.testing.assert_array_equal(loaded.opt_state.m[name],
                                      ckpt.opt_state.m[name])
        np.testing.assert_array_equal(loaded.opt_state.v[name],
                                      ckpt.opt_state.v[name])
    assert loaded.step == 17 and loaded.best_dev_f1 == 0.5
    assert loaded.labels == ckpt.labels
    assert loaded.model_cfg == ckpt.model_cfg
    assert loaded.train_cfg == ckpt.train_cfg


def test_checkpoint_truncated_file(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(make_checkpoint(), path)
    data = path.read_bytes()
    path.write_bytes(data[:len(data) // 2])
    with pytest.raises(CheckpointError, match="truncated"):
        load_checkpoint(path)


def test_checkpoint_bad_magic(tmp_path):
    path = tmp_path / "m.ckpt"
    path.write_bytes(b"NOTACKPT" + b"\x00" * 64)
    with pytest.raises(CheckpointError, match="magic"):
        load_checkpoint(path)


def test_checkpoint_version_mismatch(tmp_path):
    path = tmp_path / "m.ckpt"
    save_checkpoint(make_checkpoint(), path)
    data = bytearray(path.read_bytes())
    data[8:16] = struct.pack("<Q", 99)
    path.write_bytes(bytes(data))
    with pytest.raises(CheckpointError, match="version"):
        load_checkpoint(path)


def test_checkpoint_save_deterministic(tmp_path):
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(make_checkpoint(seed=4), a)
    save_checkpoint(make_checkpoint(seed=4), b)
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# training loop


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("train")
    write_corpus(d / "c.jsonl", seed=11, size=10)
    write_embeddings(d / "e.txt", seed=11, dim=16)
    ds = load_corpus(d / "c.jsonl")
    table = load_embeddings(d / "e.txt", 16)
    return ds, table, build_label_space(ds)


def run_training(ds, table, labels, cfg, tc):
    return train(ds, ds, cfg, tc, labels, table, table)


def test_training_deterministic(small_corpus, tmp_path):
    ds, table, labels = small_corpus
    cfg = tiny_config(word_dim=16)
    tc = TrainConfig(max_steps=12, eval_every=6, patience=10, seed=3)
    ckpt1, recs1 = run_training(ds, table, labels, cfg, tc)
    ckpt2, recs2 = run_training(ds, table, labels, cfg, tc)
    assert recs1 == recs2
    a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(ckpt1, a)
    save_checkpoint(ckpt2, b)
    assert a.read_bytes() == b.read_bytes()


def test_training_smoothed_loss_decreases(small_corpus):
    ds, table, labels = small_corpus
    cfg = tiny_config(word_dim=16)  # dropout disabled in the tiny config
    tc = TrainConfig(max_steps=200, eval_every=200, patience=50, seed=1)
    _, records = run_training(ds, table, labels, cfg, tc)
    losses = [r["loss"] for r in records]
    assert len(losses) == 200
    assert np.mean(losses[-20:]) < np.mean(losses[:20])


def test_training_patience_stops_after_flat_evals():
    # A corpus with no relations keeps dev F1 flat at 0: the first evaluation
    # is an improvement over the initial best, then patience=2 more stop it.
    ds = Dataset([(Sentence(("alpha", "beta")), [], None)])
    labels = build_label_space(ds)
    from conftest import random_table
    table = random_table(8, ["alpha", "beta"])
    cfg = tiny_config()
    tc = TrainConfig(max_steps=50, eval_every=1, patience=2, seed=0)
    _, records = train(ds, ds, cfg, tc, labels, table, table)
    evals = [r for r in records if "dev_f1" in r]
    assert len(evals) == 3
    assert all(r["dev_f1"] == 0.0 for r in evals)


def test_training_log_record_fields(small_corpus):
    ds, table, labels = small_corpus
    cfg = tiny_config(word_dim=16)
    tc = TrainConfig(max_steps=4, eval_every=2, patience=10, seed=2)
    seen = []
    train(ds, ds, cfg, tc, labels, table, table, log_fn=seen.append)
    assert [r["step"] for r in seen] == [1, 2, 3, 4]
    for r in seen:
        assert {"step", "loss", "lr", "gold_pruned_rate"} <= r.keys()
        assert r["loss"] >= 0.0
    assert "dev_f1" in seen[1] and "dev_f1" in seen[3]
    assert "dev_f1" not in seen[0]


def test_evaluate_dev_perfect_on_gold(small_corpus):
    # evaluate_dev on a model is exercised end-to-end in the acceptance tests;
    # here: scoring the gold corpus against itself through the tuple path.
    ds, table, labels = small_corpus
    from srlspan.evaluation import micro_f1, relations_to_tuples
    gold = relations_to_tuples(ds)
    assert micro_f1(gold, gold).f1 == 1.0
