"""Metaphor-class precision/recall/F1 and the mid-p McNemar test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class EvalError(ValueError):
    pass


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class McNemarResult:
    b: int  # A wrong, B right
    c: int  # A right, B wrong
    mid_p: float


def _as_binary(x, name):
    a = np.asarray(x)
    if a.ndim != 1:
        raise EvalError(f"{name} must be one-dimensional")
    if a.size and not np.isin(a, (0, 1)).all():
        raise EvalError(f"{name} must contain only 0 and 1")
    return a.astype(np.int64)


def confusion(predictions, labels) -> Confusion:
    p = _as_binary(predictions, "predictions")
    y = _as_binary(labels, "labels")
    if p.size != y.size:
        raise EvalError(f"{p.size} predictions for {y.size} labels")
    if p.size == 0:
        raise EvalError("nothing to evaluate")
    return Confusion(
        tp=int(np.sum((p == 1) & (y == 1))),
        fp=int(np.sum((p == 1) & (y == 0))),
        fn=int(np.sum((p == 0) & (y == 1))),
        tn=int(np.sum((p == 0) & (y == 0))),
    )


def prf1(c: Confusion) -> Metrics:
    precision = c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0
    recall = c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0
    return Metrics(precision, recall, f1_score(precision, recall))


def f1_score(precision: float, recall: float) -> float:
    s = precision + recall
    return 2 * precision * recall / s if s else 0.0


def metrics_by_genre(predictions, labels, genres) -> dict:
    p = _as_binary(predictions, "predictions")
    y = _as_binary(labels, "labels")
    genres = list(genres)
    if not (p.size == y.size == len(genres)):
        raise EvalError("predictions, labels and genres differ in length")
    g = np.array(genres, dtype=object)
    out = {}
    for genre in sorted(set(genres)):
        mask = g == genre
        out[genre] = prf1(confusion(p[mask], y[mask]))
    return out


# mid-p McNemar

def discordant_counts(preds_a, preds_b, labels):
    a = _as_binary(preds_a, "preds_a")
    b = _as_binary(preds_b, "preds_b")
    y = _as_binary(labels, "labels")
    if not (a.size == b.size == y.size):
        raise EvalError("prediction and label lists differ in length")
    a_ok = a == y
    b_ok = b == y
    return int(np.sum(~a_ok & b_ok)), int(np.sum(a_ok & ~b_ok))


def _log_binom_half(n, i):
    return math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1) - n * math.log(2.0)


def midp_from_counts(b: int, c: int, exact: bool = False):
    """Two-sided mid-p value ``2 P(X <= k) - P(X = k)``, X ~ Bin(b + c, 1/2).

    Written as ``2 P(X < k) + P(X = k)`` so every term is non-negative.
    ``exact=True`` returns a ``Fraction``; otherwise the tail is summed in
    log space with ``math.fsum``.
    """
    if b < 0 or c < 0:
        raise EvalError("discordant counts must be non-negative")
    n = b + c
    k = min(b, c)
    if n == 0:
        return Fraction(1) if exact else 1.0
    if exact:
        total = 2 * sum(math.comb(n, i) for i in range(k)) + math.comb(n, k)
        return min(Fraction(total, 2 ** n), Fraction(1))
    logs = [_log_binom_half(n, i) for i in range(k + 1)]
    top = max(logs)
    weights = [2.0] * k + [1.0]
    s = math.fsum(w * math.exp(lv - top) for w, lv in zip(weights, logs))
    return min(1.0, max(0.0, s * math.exp(top)))


def exact_p_from_counts(b: int, c: int) -> float:
    """Conventional exact-conditional two-sided McNemar p-value."""
    n = b + c
    if n == 0:
        return 1.0
    k = min(b, c)
    logs = [_log_binom_half(n, i) for i in range(k + 1)]
    top = max(logs)
    s = math.fsum(math.exp(lv - top) for lv in logs)
    return min(1.0, 2.0 * s * math.exp(top))


def mcnemar_midp(preds_a, preds_b, labels) -> McNemarResult:
    b, c = discordant_counts(preds_a, preds_b, labels)
    return McNemarResult(b, c, midp_from_counts(b, c))


def significance_stars(mid_p: float) -> str:
    if mid_p < 0.001:
        return "***"
    if mid_p < 0.01:
        return "**"
    if mid_p < 0.05:
        return "*"
    return ""
