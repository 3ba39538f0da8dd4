"""Synthetic corpus where only a context token carries the label.

Lemmas and arguments are drawn independently of the label, so L and LA
features hold no signal; a single cue word placed in the paragraph decides
the (noisy) label. Together with a random vector table this exercises the
whole pipeline without licensed data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import GENRES, ArgumentSpan, Example, ExampleSet
from .embeddings import VectorTable

METAPHOR_CUE = "cuefigurative"
LITERAL_CUE = "cueliteral"

GENRE_PREFIX = {"Academic": "acp", "Conversation": "kbd", "Fiction": "fic", "News": "nws"}


@dataclass(frozen=True)
class SyntheticConfig:
    n_train: int = 2000
    n_test: int = 500
    n_dev: int = 0
    dim: int = 10
    noise: float = 0.1
    positive_rate: float = 0.3
    n_verbs: int = 30
    n_nouns: int = 60
    n_fillers: int = 40
    filler_tokens: int = 4
    seed: int = 0


def genre_map() -> dict:
    return {prefix: genre for genre, prefix in GENRE_PREFIX.items()}


def _vocab(cfg):
    verbs = [f"verb{i:02d}" for i in range(cfg.n_verbs)]
    nouns = [f"noun{i:02d}" for i in range(cfg.n_nouns)]
    fillers = [f"word{i:02d}" for i in range(cfg.n_fillers)]
    return verbs, nouns, fillers


def make_table(cfg: SyntheticConfig) -> VectorTable:
    verbs, nouns, fillers = _vocab(cfg)
    words = verbs + nouns + fillers + [METAPHOR_CUE, LITERAL_CUE]
    rng = np.random.default_rng([cfg.seed, 1])
    vectors = rng.standard_normal((len(words), cfg.dim))
    return VectorTable(words, vectors)


def _examples(rng, cfg, n, tag, start):
    verbs, nouns, fillers = _vocab(cfg)
    out = []
    for j in range(start, start + n):
        genre = GENRES[rng.integers(len(GENRES))]
        text_id = f"{GENRE_PREFIX[genre]}{j // 10:04d}"
        verb = verbs[rng.integers(len(verbs))]
        subj = nouns[rng.integers(len(nouns))] if rng.random() < 0.7 else None
        obj = nouns[rng.integers(len(nouns))] if rng.random() < 0.6 else None
        tokens = ([subj] if subj else []) + [verb] + ([obj] if obj else [])
        verb_index = 1 if subj else 0

        figurative = rng.random() < cfg.positive_rate
        label = int(figurative)
        if rng.random() < cfg.noise:
            label = 1 - label
        context = [fillers[k] for k in rng.integers(len(fillers), size=cfg.filler_tokens)]
        cue = METAPHOR_CUE if figurative else LITERAL_CUE
        context.insert(int(rng.integers(len(context) + 1)), cue)
        context = context + tokens

        out.append(Example(
            id=f"{text_id}_{j}_{verb_index}",
            sentence_tokens=tuple(tokens),
            verb_index=verb_index,
            verb_lemma=verb,
            label=label,
            genre=genre,
            context_tokens=tuple(context),
            subject=ArgumentSpan(subj, subj, "Subject") if subj else None,
            object=ArgumentSpan(obj, obj, "Object") if obj else None,
        ))
    return ExampleSet(tuple(out), tag)


def generate(cfg: SyntheticConfig = SyntheticConfig()):
    """Return ``(train, dev, test, table)`` for ``cfg``; deterministic in the seed."""
    if not 0.0 <= cfg.noise <= 1.0:
        raise ValueError("noise must be in [0, 1]")
    rng = np.random.default_rng([cfg.seed, 0])
    train = _examples(rng, cfg, cfg.n_train, "Train", 0)
    dev = _examples(rng, cfg, cfg.n_dev, "Dev", cfg.n_train)
    test = _examples(rng, cfg, cfg.n_test, "Test", cfg.n_train + cfg.n_dev)
    return train, dev, test, make_table(cfg)
