"""Loss, Adam optimization with decay, early stopping, and checkpointing."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import NumericDomainError, Tape, Tensor
from .config import ModelConfig, TrainConfig
from .data import Dataset, LabelSpace, batch_iterator
from .decoding import predict_dataset
from .evaluation import micro_f1, relations_to_tuples
from .model import forward_sentence, init_params

CHECKPOINT_MAGIC = b"SRLSPANC"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


def sentence_loss(tokens, gold_relations, params, cfg, label_space, lstm_table,
                  head_table, mode="train", rng=None):
    """Negative log likelihood of gold labels over beam-surviving pairs."""
    result = forward_sentence(tokens, params, cfg, label_space, lstm_table,
                              head_table, gold_relations=gold_relations,
                              mode=mode, rng=rng)
    return result.loss, result


@dataclass
class OptimizerState:
    m: dict
    v: dict
    step: int = 0

    @classmethod
    def fresh(cls, params):
        return cls({k: np.zeros_like(p.data) for k, p in params.items()},
                   {k: np.zeros_like(p.data) for k, p in params.items()}, 0)


def adam_step(params, state: OptimizerState, lr: float, tc: TrainConfig):
    """Standard Adam with bias correction; missing grads count as zero."""
    state.step += 1
    t = state.step
    b1, b2, eps = tc.adam_beta1, tc.adam_beta2, tc.adam_eps
    for name in sorted(params):
        p = params[name]
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        if np.any(np.isnan(g)):
            raise NumericDomainError(f"NaN gradient in parameter {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        p.data -= (lr * mhat / (np.sqrt(vhat) + eps)).astype(p.data.dtype)
        p.grad = None


@dataclass
class Checkpoint:
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    labels: list
    core_flags: list
    params: dict               # name -> Tensor
    opt_state: OptimizerState
    step: int
    best_dev_f1: float

    def label_space(self):
        return LabelSpace(list(self.labels), list(self.core_flags))


def _write_tensor(fh, name, arr):
    data = np.ascontiguousarray(arr, dtype="<f4")
    name_b = name.encode("utf-8")
    fh.write(struct.pack("<Q", len(name_b)))
    fh.write(name_b)
    fh.write(struct.pack("<Q", data.ndim))
    for d in data.shape:
        fh.write(struct.pack("<Q", d))
    fh.write(data.tobytes())


def _read_exact(fh, n):
    b = fh.read(n)
    if len(b) != n:
        raise CheckpointError("truncated checkpoint file")
    return b


def _read_tensor(fh):
    (name_len,) = struct.unpack("<Q", _read_exact(fh, 8))
    name = _read_exact(fh, name_len).decode("utf-8")
    (rank,) = struct.unpack("<Q", _read_exact(fh, 8))
    dims = tuple(struct.unpack("<Q", _read_exact(fh, 8))[0] for _ in range(rank))
    count = int(np.prod(dims)) if dims else 1
    arr = np.frombuffer(_read_exact(fh, 4 * count), dtype="<f4").reshape(dims)
    return name, np.array(arr)  # writable copy


def save_checkpoint(ckpt: Checkpoint, path):
    header = {
        "model": ckpt.model_cfg.to_dict(),
        "train": ckpt.train_cfg.to_dict(),
        "labels": ckpt.labels,
        "core_flags": ckpt.core_flags,
        "step": ckpt.step,
        "best_dev_f1": ckpt.best_dev_f1,
        "opt_step": ckpt.opt_state.step,
    }
    header_b = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    names = sorted(ckpt.params)
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<Q", CHECKPOINT_VERSION))
        fh.write(struct.pack("<Q", len(header_b)))
        fh.write(header_b)
        fh.write(struct.pack("<Q", 3 * len(names)))
        for name in names:
            _write_tensor(fh, name, ckpt.params[name].data)
            _write_tensor(fh, "opt.m/" + name, ckpt.opt_state.m[name])
            _write_tensor(fh, "opt.v/" + name, ckpt.opt_state.v[name])


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        if _read_exact(fh, len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise CheckpointError("not a checkpoint file (bad magic)")
        (version,) = struct.unpack("<Q", _read_exact(fh, 8))
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (header_len,) = struct.unpack("<Q", _read_exact(fh, 8))
        header = json.loads(_read_exact(fh, header_len).decode("utf-8"))
        (count,) = struct.unpack("<Q", _read_exact(fh, 8))
        tensors = dict(_read_tensor(fh) for _ in range(count))
    params, m, v = {}, {}, {}
    for name, arr in tensors.items():
        if name.startswith("opt.m/"):
            m[name[6:]] = arr
        elif name.startswith("opt.v/"):
            v[name[6:]] = arr
        else:
            params[name] = Tensor(arr, requires_grad=True)
    return Checkpoint(
        model_cfg=ModelConfig.from_dict(header["model"]),
        train_cfg=TrainConfig.from_dict(header["train"]),
        labels=header["labels"],
        core_flags=header["core_flags"],
        params=params,
        opt_state=OptimizerState(m, v, header["opt_step"]),
        step=header["step"],
        best_dev_f1=header["best_dev_f1"],
    )


def evaluate_dev(dataset, params, cfg, label_space, lstm_table, head_table,
                 decode_mode="nonoverlap"):
    predictions = predict_dataset(dataset, params, cfg, label_space,
                                  lstm_table, head_table, mode=decode_mode)
    gold = relations_to_tuples(dataset)
    pred = relations_to_tuples(predictions)
    report = micro_f1(gold, pred)
    f1 = report.f1
    if np.isnan(f1):
        f1 = 0.0
    return f1, report


def _snapshot(params):
    return {k: Tensor(np.array(p.data, copy=True), requires_grad=True)
            for k, p in params.items()}


def _snapshot_opt(state):
    return OptimizerState({k: a.copy() for k, a in state.m.items()},
                          {k: a.copy() for k, a in state.v.items()}, state.step)


def train(train_ds: Dataset, dev_ds: Dataset, cfg: ModelConfig, tc: TrainConfig,
          label_space: LabelSpace, lstm_table, head_table,
          decode_mode="nonoverlap", log_fn=None) -> tuple[Checkpoint, list]:
    """Train to convergence or max_steps; returns (best checkpoint, log records)."""
    cfg.validate()
    tc.validate()
    params = init_params(cfg, label_space.size, tc.seed)
    state = OptimizerState.fresh(params)
    batches = batch_iterator(train_ds, tc.batch_sentences, tc.batch_words, tc.seed)
    drop_rng = np.random.default_rng(tc.seed + 1)

    best_f1 = -1.0
    best_params, best_opt, best_step = _snapshot(params), _snapshot_opt(state), 0
    evals_since_best = 0
    records = []

    for step in range(1, tc.max_steps + 1):
        batch = next(batches)
        lr = tc.lr_at(step - 1)
        tape = Tape()
        gold_pruned = total_gold = 0
        with tape:
            total = None
            for i in batch:
                sent, rels, _ = train_ds.sentences[i]
                loss, result = sentence_loss(sent.tokens, rels, params, cfg,
                                             label_space, lstm_table, head_table,
                                             mode="train", rng=drop_rng)
                gold_pruned += result.gold_pruned
                total_gold += len(rels)
                total = loss if total is None else total + loss
            mean_loss = total * (1.0 / len(batch))
        ag.backward(mean_loss, tape, leaves=params.values())
        adam_step(params, state, lr, tc)

        record = {"step": step, "loss": float(mean_loss.data), "lr": lr,
                  "gold_pruned_rate": gold_pruned / total_gold if total_gold else 0.0}
        if step % tc.eval_every == 0 or step == tc.max_steps:
            f1, _ = evaluate_dev(dev_ds, params, cfg, label_space, lstm_table,
                                 head_table, decode_mode)
            record["dev_f1"] = f1
            if f1 > best_f1:
                best_f1 = f1
                best_params, best_opt, best_step = _snapshot(params), _snapshot_opt(state), step
                evals_since_best = 0
            else:
                evals_since_best += 1
            records.append(record)
            if log_fn:
                log_fn(record)
            if evals_since_best >= tc.patience or best_f1 >= 1.0:
                break
        else:
            records.append(record)
            if log_fn:
                log_fn(record)

    ckpt = Checkpoint(cfg, tc, list(label_space.labels), list(label_space.core_flags),
                      best_params, best_opt, best_step, best_f1)
    return ckpt, records
