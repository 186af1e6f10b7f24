"""CSV/JSON report emission and matplotlib figure rendering for analyses."""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .evaluation import DISTANCE_BIN_LABELS  # noqa: E402


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def beam_recall_report(curve, out_dir):
    """curve: list of (lambda, recall). Writes CSV, JSON, and a PNG figure."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "beam_recall.csv")
    write_csv(csv_path, ["lambda", "recall"], [(f"{l:g}", f"{r:.6f}") for l, r in curve])
    write_json(os.path.join(out_dir, "beam_recall.json"),
               {"curve": [{"lambda": l, "recall": r} for l, r in curve]})
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.plot([l for l, _ in curve], [r for _, r in curve], marker="o")
    ax.set_xlabel("predicates kept per word")
    ax.set_ylabel("gold predicate recall")
    ax.set_ylim(0, 1.05)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "beam_recall.png"), dpi=150)
    plt.close(fig)
    return csv_path


def distance_report(reports, out_dir):
    """Per-bin EvalReports in bin order. Writes CSV, JSON, and a PNG figure."""
    os.makedirs(out_dir, exist_ok=True)
    rows = []
    for label, rep in zip(DISTANCE_BIN_LABELS, reports):
        rows.append((label, f"{rep.precision:.6f}", f"{rep.recall:.6f}",
                     f"{rep.f1:.6f}", rep.gold, rep.predicted, rep.matched))
    csv_path = os.path.join(out_dir, "distance_f1.csv")
    write_csv(csv_path, ["bin", "precision", "recall", "f1", "gold", "predicted",
                         "matched"], rows)
    write_json(os.path.join(out_dir, "distance_f1.json"),
               {label: rep.to_dict() for label, rep in zip(DISTANCE_BIN_LABELS, reports)})
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(DISTANCE_BIN_LABELS, [r.f1 for r in reports])
    ax.set_xlabel("predicate-argument distance (words between)")
    ax.set_ylabel("F1")
    ax.set_ylim(0, 1.05)
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "distance_f1.png"), dpi=150)
    plt.close(fig)
    return csv_path


def violations_report(report, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "violations.csv")
    write_csv(csv_path, ["U", "C", "R"],
              [(report.unique_core, report.continuation, report.reference)])
    write_json(os.path.join(out_dir, "violations.json"), report.to_dict())
    fig, ax = plt.subplots(figsize=(4, 3))
    ax.bar(["U", "C", "R"], [report.unique_core, report.continuation, report.reference])
    ax.set_ylabel("violations")
    fig.tight_layout()
    fig.savefig(os.path.join(out_dir, "violations.png"), dpi=150)
    plt.close(fig)
    return csv_path


def agreement_report(agreement, n_spans, n_skipped, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "agreement.csv")
    write_csv(csv_path, ["agreement", "spans", "skipped_sentences"],
              [(f"{agreement:.6f}", n_spans, n_skipped)])
    write_json(os.path.join(out_dir, "agreement.json"),
               {"agreement": agreement, "spans": n_spans,
                "skipped_sentences": n_skipped})
    return csv_path
