"""Word-vector tables and precomputed document vectors.

Two providers share one duck-typed surface (``dim``, ``embed_word``,
``embed_document``). Both take the token(s) and a unit id; the word table
ignores the id, the precomputed store ignores the tokens.
"""

from __future__ import annotations

import json

import numpy as np


class EmbeddingError(ValueError):
    pass


class VectorTable:
    """Immutable ``word -> vector`` map with a mean-of-all-entries OOV vector."""

    def __init__(self, words, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or len(words) != vectors.shape[0]:
            raise EmbeddingError("words and vectors disagree in shape")
        if not len(words):
            raise EmbeddingError("vector table is empty")
        if vectors.shape[1] < 1:
            raise EmbeddingError("vector dimension must be positive")
        self.words = list(words)
        self.vectors = vectors
        self.vectors.setflags(write=False)
        self.index = {}
        for i, w in enumerate(self.words):
            # first occurrence wins on duplicate lines
            self.index.setdefault(w, i)
        self.oov = vectors.mean(axis=0)
        self.oov.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def lookup(self, word: str) -> np.ndarray:
        i = self.index.get(word.lower())
        if i is None:
            i = self.index.get(word)
        if i is None:
            return self.oov
        return self.vectors[i]

    # provider surface
    def embed_word(self, word: str, unit_id: str | None = None) -> np.ndarray:
        return self.lookup(word)

    def embed_document(self, tokens, unit_id: str | None = None) -> np.ndarray:
        if not tokens:
            return np.zeros(self.dim)
        rows = [self.lookup(t) for t in tokens]
        return np.mean(rows, axis=0)


def load_vector_table(path, expected_dim: int | None = None) -> VectorTable:
    """Read a ``word v1 ... vd`` text file (GloVe layout).

    The dimension comes from the first line unless ``expected_dim`` is given.
    Later lines are split from the right, so words containing spaces survive.
    """
    words = []
    rows = []
    dim = expected_dim
    with open(path, encoding="utf-8", errors="replace") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            if dim is None:
                parts = line.split(" ")
                dim = len(parts) - 1
                if dim < 1:
                    raise EmbeddingError(f"{path}:{lineno}: no vector values")
            else:
                parts = line.rsplit(" ", dim)
            if len(parts) != dim + 1 or not parts[0]:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected {dim} values, got {len(line.split(' ')) - 1}")
            try:
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise EmbeddingError(f"{path}:{lineno}: non-numeric vector value") from None
            words.append(parts[0])
    if not words:
        raise EmbeddingError(f"{path}: empty vector file")
    return VectorTable(words, np.array(rows, dtype=np.float64))


def save_vector_table(table: VectorTable, path) -> None:
    from .io import atomic_write_text
    lines = []
    for w, v in zip(table.words, table.vectors):
        lines.append(w + " " + " ".join(repr(float(x)) for x in v) + "\n")
    atomic_write_text(path, "".join(lines))


class PrecomputedVectors:
    """Vectors produced outside this package, keyed by unit id.

    Unit ids are ``{example_id}:{slot}`` with slot in lemma, subject,
    object, context. A missing id raises ``KeyError``; it never falls back
    to zeros.
    """

    def __init__(self, entries: dict, dim: int):
        self.entries = entries
        self.dim = dim

    def __len__(self):
        return len(self.entries)

    def __contains__(self, unit_id):
        return unit_id in self.entries

    def get(self, unit_id: str) -> np.ndarray:
        try:
            return self.entries[unit_id]
        except KeyError:
            raise KeyError(f"no precomputed vector for unit {unit_id!r}") from None

    def embed_word(self, word, unit_id: str | None = None) -> np.ndarray:
        return self.get(unit_id)

    def embed_document(self, tokens, unit_id: str | None = None) -> np.ndarray:
        return self.get(unit_id)


def load_precomputed(path) -> PrecomputedVectors:
    entries = {}
    dim = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                uid = rec["id"]
                vec = np.asarray(rec["vector"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise EmbeddingError(f"{path}:{lineno}: bad record ({e})") from None
            if vec.ndim != 1 or vec.size == 0:
                raise EmbeddingError(f"{path}:{lineno}: vector must be a non-empty list")
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise EmbeddingError(f"{path}:{lineno}: vector length {vec.size}, expected {dim}")
            if uid in entries:
                raise EmbeddingError(f"{path}:{lineno}: duplicate id {uid!r}")
            vec.setflags(write=False)
            entries[uid] = vec
    if dim is None:
        raise EmbeddingError(f"{path}: no vectors")
    return PrecomputedVectors(entries, dim)
