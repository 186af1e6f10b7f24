"""Command-line surface: train, predict, evaluate, analyze, synth, convert-props.

Exit codes: 0 success, 2 usage/config error, 3 numeric failure, 4 no data for
the requested analysis.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields as dc_fields

from . import conll, synth
from .autograd import NumericDomainError
from .config import PROFILES, ModelConfig, TrainConfig
from .data import (CorpusError, build_label_space, corpus_line, load_corpus,
                   load_embeddings)
from .decoding import predict_dataset
from .evaluation import (beam_recall_curve, complete_predicate_accuracy,
                         distance_breakdown, micro_f1, relations_to_tuples,
                         syntactic_agreement, violation_counts)
from .training import (CheckpointError, load_checkpoint, save_checkpoint,
                       train)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_NODATA = 4

_DECODE_ALIASES = {"greedy": "greedy", "nonoverlap": "nonoverlap",
                   "unique-core": "unique_core"}


class ConfigError(ValueError):
    pass


def _known_keys():
    keys = {"profile", "decode", "gold_predicates", "seed", "threads"}
    keys |= {f"model.{f.name}" for f in dc_fields(ModelConfig)}
    keys |= {f"train.{f.name}" for f in dc_fields(TrainConfig)}
    keys |= {f"paths.{p}" for p in ("train", "dev", "embeddings", "head_embeddings",
                                    "checkpoint", "log", "output")}
    return keys


def parse_config_file(path):
    """Flat dotted-key config: one `key = value` per line, # comments."""
    known = _known_keys()
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {line_no}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"config line {line_no}: unknown key {key!r}")
            out[key] = value
    return out


def _coerce(value, typ):
    if typ is bool:
        if value in ("true", "1", "yes"):
            return True
        if value in ("false", "0", "no"):
            return False
        raise ConfigError(f"expected boolean, got {value!r}")
    if typ is tuple:
        return tuple(int(v) for v in value.split(","))
    return typ(value)


def _apply_dotted(cfg_obj, prefix, dotted):
    for f in dc_fields(cfg_obj):
        key = f"{prefix}.{f.name}"
        if key in dotted:
            current = getattr(cfg_obj, f.name)
            setattr(cfg_obj, f.name, _coerce(dotted[key], type(current)))


def build_configs(args):
    dotted = parse_config_file(args.config) if getattr(args, "config", None) else {}
    profile = getattr(args, "profile", None) or dotted.get("profile", "mini")
    if profile not in PROFILES:
        raise ConfigError(f"unknown profile {profile!r}")
    mcfg = PROFILES[profile]()
    tcfg = TrainConfig()
    _apply_dotted(mcfg, "model", dotted)
    _apply_dotted(tcfg, "train", dotted)
    for flag, target, name in (("max_steps", tcfg, "max_steps"),
                               ("eval_every", tcfg, "eval_every"),
                               ("patience", tcfg, "patience"),
                               ("seed", tcfg, "seed")):
        v = getattr(args, flag, None)
        if v is not None:
            setattr(target, name, v)
    if "seed" in dotted and getattr(args, "seed", None) is None:
        tcfg.seed = int(dotted["seed"])
    mcfg.validate()
    tcfg.validate()
    decode = getattr(args, "decode", None) or dotted.get("decode", "nonoverlap")
    if decode not in _DECODE_ALIASES:
        raise ConfigError(f"unknown decode mode {decode!r}")
    return mcfg, tcfg, profile, _DECODE_ALIASES[decode], dotted


def _load_tables(args, mcfg, dotted):
    emb_path = getattr(args, "embeddings", None) or dotted.get("paths.embeddings")
    if not emb_path:
        raise ConfigError("embeddings path is required")
    lstm_table = load_embeddings(emb_path, mcfg.word_dim)
    head_path = getattr(args, "head_embeddings", None) or dotted.get("paths.head_embeddings")
    head_table = load_embeddings(head_path, mcfg.word_dim) if head_path else lstm_table
    return lstm_table, head_table


def cmd_train(args):
    mcfg, tcfg, profile, decode, dotted = build_configs(args)
    train_path = args.train or dotted.get("paths.train")
    dev_path = args.dev or dotted.get("paths.dev")
    ckpt_path = args.checkpoint or dotted.get("paths.checkpoint")
    log_path = args.log or dotted.get("paths.log")
    if not train_path or not dev_path or not ckpt_path:
        raise ConfigError("train, dev, and checkpoint paths are required")
    lstm_table, head_table = _load_tables(args, mcfg, dotted)
    train_ds = load_corpus(train_path)
    dev_ds = load_corpus(dev_path)
    label_space = build_label_space(train_ds)

    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None

    def log_fn(record):
        if log_fh:
            log_fh.write(json.dumps(record, sort_keys=True) + "\n")
            log_fh.flush()

    resolved = {"config": {"profile": profile, "decode": decode,
                           "model": mcfg.to_dict(), "train": tcfg.to_dict(),
                           "labels": label_space.labels}}
    log_fn(resolved)
    try:
        ckpt, _ = train(train_ds, dev_ds, mcfg, tcfg, label_space,
                        lstm_table, head_table, decode_mode=decode, log_fn=log_fn)
    finally:
        if log_fh:
            log_fh.close()
    save_checkpoint(ckpt, ckpt_path)
    print(f"best dev F1 {ckpt.best_dev_f1:.4f} at step {ckpt.step}; "
          f"checkpoint written to {ckpt_path}")
    return EXIT_OK


def cmd_predict(args):
    ckpt = load_checkpoint(args.checkpoint)
    mcfg = ckpt.model_cfg
    label_space = ckpt.label_space()
    dotted = {}
    lstm_table, head_table = _load_tables(args, mcfg, dotted)
    dataset = load_corpus(args.input)
    decode = _DECODE_ALIASES.get(args.decode or "nonoverlap")
    if decode is None:
        raise ConfigError(f"unknown decode mode {args.decode!r}")
    predictions = predict_dataset(dataset, ckpt.params, mcfg, label_space,
                                  lstm_table, head_table, mode=decode,
                                  use_gold_predicates=args.gold_predicates)
    with open(args.output, "w", encoding="utf-8") as fh:
        for (sent, rels), (_, _, cons) in zip(predictions, dataset):
            fh.write(corpus_line(sent, rels, cons) + "\n")
    print(f"wrote predictions for {len(predictions)} sentences to {args.output}")
    return EXIT_OK


def _align(gold_ds, pred_ds):
    if len(gold_ds) != len(pred_ds):
        raise ConfigError(
            f"sentence count mismatch: gold has {len(gold_ds)}, predictions have {len(pred_ds)}")
    for i, ((gs, _, _), (ps, _, _)) in enumerate(zip(gold_ds, pred_ds)):
        if gs.tokens != ps.tokens:
            raise ConfigError(f"sentence {i} differs between gold and prediction files")


def cmd_evaluate(args):
    gold_ds = load_corpus(args.gold)
    pred_ds = load_corpus(args.pred)
    _align(gold_ds, pred_ds)
    gold = relations_to_tuples(gold_ds)
    pred = relations_to_tuples(pred_ds)
    report = micro_f1(gold, pred)
    cpa = complete_predicate_accuracy(gold, pred)
    if args.json:
        out = report.to_dict()
        out["complete_predicate_accuracy"] = cpa
        print(json.dumps(out, sort_keys=True))
    else:
        print(f"precision {report.precision:.4f}  recall {report.recall:.4f}  "
              f"f1 {report.f1:.4f}")
        print(f"complete-predicate accuracy {cpa:.4f}")
    return EXIT_OK


def cmd_analyze(args):
    from . import reports

    if args.analysis == "violations":
        pred_ds = load_corpus(args.pred)
        tuples = relations_to_tuples(pred_ds)
        core = set(build_label_space(pred_ds).core_roles)
        if not core:
            core = {"ARG0", "ARG1", "ARG2", "ARG3", "ARG4", "ARG5", "AA"}
        report = violation_counts(tuples, core)
        path = reports.violations_report(report, args.out_dir)
        print(f"U={report.unique_core} C={report.continuation} R={report.reference} "
              f"({path})")
        return EXIT_OK

    if args.analysis == "distance":
        gold_ds = load_corpus(args.gold)
        pred_ds = load_corpus(args.pred)
        _align(gold_ds, pred_ds)
        breakdown = distance_breakdown(relations_to_tuples(gold_ds),
                                       relations_to_tuples(pred_ds))
        path = reports.distance_report(breakdown, args.out_dir)
        print(f"distance breakdown written ({path})")
        return EXIT_OK

    if args.analysis == "beam-recall":
        ckpt = load_checkpoint(args.checkpoint)
        mcfg = ckpt.model_cfg
        lstm_table, head_table = _load_tables(args, mcfg, {})
        dataset = load_corpus(args.corpus)
        lambdas = [float(v) for v in args.lambdas.split(",")]
        curve = beam_recall_curve(dataset, ckpt.params, mcfg, ckpt.label_space(),
                                  lstm_table, head_table, lambdas)
        path = reports.beam_recall_report(curve, args.out_dir)
        print(f"beam recall curve written ({path})")
        return EXIT_OK

    if args.analysis == "agreement":
        gold_ds = load_corpus(args.gold)
        pred_ds = load_corpus(args.pred)
        _align(gold_ds, pred_ds)
        pred_spans = [[(r.arg_start, r.arg_end) for r in rels]
                      for _, rels, _ in pred_ds]
        constituents = [cons for _, _, cons in gold_ds]
        agreement, n_spans, skipped = syntactic_agreement(pred_spans, constituents)
        if agreement is None:
            print("no sentence carries constituent annotation", file=sys.stderr)
            return EXIT_NODATA
        path = reports.agreement_report(agreement, n_spans, skipped, args.out_dir)
        print(f"agreement {agreement:.4f} over {n_spans} spans ({path})")
        return EXIT_OK

    raise ConfigError(f"unknown analysis {args.analysis!r}")


def cmd_synth(args):
    n = synth.write_corpus(args.out, args.seed, args.size)
    msg = f"wrote {n} sentences to {args.out}"
    if args.embeddings:
        v = synth.write_embeddings(args.embeddings, args.seed, args.dim)
        msg += f"; {v} embedding vectors ({args.dim}-d) to {args.embeddings}"
    print(msg)
    return EXIT_OK


def cmd_convert_props(args):
    n = conll.convert_props(args.input, args.output)
    print(f"converted {n} sentences to {args.output}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="srlspan",
                                     description="Span-graph semantic role labeling")
    parser.add_argument("--threads", type=int, default=1,
                        help="cap on internal worker count")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help="flat dotted-key config file")
    p.add_argument("--train", help="training corpus (JSON-lines)")
    p.add_argument("--dev", help="development corpus (JSON-lines)")
    p.add_argument("--embeddings", help="embedding text file")
    p.add_argument("--head-embeddings", dest="head_embeddings",
                   help="separate table for soft-head inputs")
    p.add_argument("--profile", choices=sorted(PROFILES))
    p.add_argument("--checkpoint", help="output checkpoint path")
    p.add_argument("--log", help="JSON-lines training log path")
    p.add_argument("--decode", choices=sorted(_DECODE_ALIASES))
    p.add_argument("--max-steps", dest="max_steps", type=int)
    p.add_argument("--eval-every", dest="eval_every", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="decode a corpus with a trained model")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--head-embeddings", dest="head_embeddings")
    p.add_argument("--output", required=True)
    p.add_argument("--decode", choices=sorted(_DECODE_ALIASES), default="nonoverlap")
    p.add_argument("--gold-predicates", dest="gold_predicates", action="store_true")
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_evaluate)

    p = sub.add_parser("analyze", help="structural analyses and figures")
    asub = p.add_subparsers(dest="analysis", required=True)
    v = asub.add_parser("violations")
    v.add_argument("--pred", required=True)
    v.add_argument("--out-dir", dest="out_dir", required=True)
    d = asub.add_parser("distance")
    d.add_argument("--gold", required=True)
    d.add_argument("--pred", required=True)
    d.add_argument("--out-dir", dest="out_dir", required=True)
    b = asub.add_parser("beam-recall")
    b.add_argument("--checkpoint", required=True)
    b.add_argument("--corpus", required=True)
    b.add_argument("--embeddings", required=True)
    b.add_argument("--head-embeddings", dest="head_embeddings")
    b.add_argument("--lambdas", default="0.1,0.2,0.3,0.4,0.5,0.7,1.0")
    b.add_argument("--out-dir", dest="out_dir", required=True)
    g = asub.add_parser("agreement")
    g.add_argument("--gold", required=True)
    g.add_argument("--pred", required=True)
    g.add_argument("--out-dir", dest="out_dir", required=True)
    p.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--size", type=int, default=30)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings", help="also write a matching embedding file")
    p.add_argument("--dim", type=int, default=16)
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("convert-props", help="convert CoNLL props columns to JSON-lines")
    p.add_argument("input")
    p.add_argument("output")
    p.set_defaults(fn=cmd_convert_props)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, CorpusError, CheckpointError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericDomainError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
