"""Evaluation and comparison reports, as aligned text tables and JSON."""

from __future__ import annotations

import json

import numpy as np

from .corpus import GENRES
from .evaluation import confusion, mcnemar_midp, prf1, significance_stars

CORRECTION_NOTE = "no multiple-comparison correction applied"


def pct(x: float) -> str:
    return f"{100 * x:.1f}"


def _block(conf, metrics):
    return {
        "tp": conf.tp, "fp": conf.fp, "fn": conf.fn, "tn": conf.tn,
        "precision": metrics.precision, "recall": metrics.recall, "f1": metrics.f1,
    }


def evaluation_report(name, split, predictions, labels, genres) -> dict:
    preds = np.asarray(predictions)
    gold = np.asarray(labels)
    genres = np.asarray(list(genres), dtype=object)
    overall = confusion(preds, gold)
    by_genre = {}
    for genre in GENRES:
        mask = genres == genre
        if mask.any():
            conf = confusion(preds[mask], gold[mask])
            by_genre[genre] = _block(conf, prf1(conf))
    return {
        "run": name,
        "split": split,
        "n": overall.total,
        "overall": _block(overall, prf1(overall)),
        "by_genre": by_genre,
    }


def format_evaluation(rep: dict) -> str:
    lines = [f"{rep['run']} on {rep['split']} (n={rep['n']})",
             f"{'Genre':<14}{'P':>7}{'R':>7}{'F1':>7}{'n':>7}"]

    def row(label, b):
        n = b["tp"] + b["fp"] + b["fn"] + b["tn"]
        return f"{label:<14}{pct(b['precision']):>7}{pct(b['recall']):>7}{pct(b['f1']):>7}{n:>7}"

    lines.append(row("Overall", rep["overall"]))
    for genre in GENRES:
        b = rep["by_genre"].get(genre)
        if b is None:
            lines.append(f"{genre:<14}{'-':>7}{'-':>7}{'-':>7}{0:>7}")
        else:
            lines.append(row(genre, b))
    return "\n".join(lines) + "\n"


def comparison_report(name_a, name_b, split, preds_a, preds_b, labels) -> dict:
    res = mcnemar_midp(preds_a, preds_b, labels)
    return {
        "run_a": name_a,
        "run_b": name_b,
        "split": split,
        "n": len(labels),
        "b": res.b,
        "c": res.c,
        "mid_p": res.mid_p,
        "stars": significance_stars(res.mid_p),
        "note": CORRECTION_NOTE,
    }


def format_comparison(cmp: dict) -> str:
    return (
        f"{cmp['run_a']} -> {cmp['run_b']} on {cmp['split']} (n={cmp['n']})\n"
        f"b (A wrong, B right) = {cmp['b']}\n"
        f"c (A right, B wrong) = {cmp['c']}\n"
        f"mid-p = {cmp['mid_p']:.6g} {cmp['stars']}".rstrip() + "\n"
        f"({cmp['note']})\n"
    )


def results_table(evals: list, comparisons: list) -> str:
    """Rows of P/R/F1; each F1 after the first carries stars vs the row above."""
    width = max([len(e["run"]) for e in evals] + [5])
    lines = [f"{'Model':<{width}}{'P':>7}{'R':>7}{'F1':>7}"]
    for i, e in enumerate(evals):
        o = e["overall"]
        stars = comparisons[i - 1]["stars"] if i > 0 else ""
        lines.append(f"{e['run']:<{width}}{pct(o['precision']):>7}{pct(o['recall']):>7}"
                     f"{pct(o['f1']):>7}{stars}".rstrip())
    if len(evals) > 1:
        lines.append("* p < 0.05, ** p < 0.01, *** p < 0.001 (mid-p McNemar vs previous row; "
                     f"{CORRECTION_NOTE})")
    return "\n".join(lines) + "\n"


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
