"""Fixed-layout feature vectors for the L, LA and LAC configurations.

Every row is ``[lemma | subject | object | context]``, each slot ``dim``
wide. Slots a mode does not use, and absent arguments, stay zero, so all
three modes yield matrices of the same width.
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass

import numpy as np

MODES = ("L", "LA", "LAC")
SLOTS = ("lemma", "subject", "object", "context")

MATRIX_MAGIC = b"DMFM"
_HEADER = struct.Struct("<4sQQ")


class FeatureError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    mode: str
    dim: int

    def __post_init__(self):
        mode = self.mode.upper()
        if mode not in MODES:
            raise FeatureError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        object.__setattr__(self, "mode", mode)
        if self.dim < 1:
            raise FeatureError("dim must be positive")

    @property
    def width(self) -> int:
        return 4 * self.dim

    def slot(self, name: str) -> slice:
        i = SLOTS.index(name)
        return slice(i * self.dim, (i + 1) * self.dim)


@dataclass
class FeatureMatrix:
    X: np.ndarray
    labels: np.ndarray
    ids: list
    genres: list

    def __post_init__(self):
        n = self.X.shape[0]
        if not (len(self.labels) == len(self.ids) == len(self.genres) == n):
            raise FeatureError("feature matrix fields differ in length")

    def __len__(self):
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]


def unit_id(example_id: str, slot: str) -> str:
    return f"{example_id}:{slot}"


def _argument_word(span):
    return span.head_lemma.lower() if span.head_lemma else span.head_token.lower()


def assemble(example, config: FeatureConfig, provider) -> np.ndarray:
    if provider.dim != config.dim:
        raise FeatureError(f"provider dim {provider.dim} != feature dim {config.dim}")
    out = np.zeros(config.width)
    out[config.slot("lemma")] = provider.embed_word(
        example.verb_lemma, unit_id(example.id, "lemma"))
    if config.mode in ("LA", "LAC"):
        for slot, span in (("subject", example.subject), ("object", example.object)):
            if span is not None:
                out[config.slot(slot)] = provider.embed_word(
                    _argument_word(span), unit_id(example.id, slot))
    if config.mode == "LAC":
        out[config.slot("context")] = provider.embed_document(
            list(example.context_tokens), unit_id(example.id, "context"))
    return out


def build_matrix(examples, config: FeatureConfig, provider) -> FeatureMatrix:
    examples = list(examples)
    X = np.zeros((len(examples), config.width))
    for i, ex in enumerate(examples):
        try:
            X[i] = assemble(ex, config, provider)
        except (FeatureError, KeyError, ValueError) as e:
            raise FeatureError(f"example {ex.id}: {e}") from e
    return FeatureMatrix(
        X=X,
        labels=np.array([ex.label for ex in examples], dtype=np.int64),
        ids=[ex.id for ex in examples],
        genres=[ex.genre for ex in examples],
    )


def zero_slots(X: np.ndarray, dim: int, slots) -> np.ndarray:
    """Copy of ``X`` with the named slots set to zero."""
    X = X.copy()
    for name in slots:
        i = SLOTS.index(name)
        X[:, i * dim:(i + 1) * dim] = 0.0
    return X


# serialization

def matrix_to_bytes(X: np.ndarray) -> bytes:
    X = np.ascontiguousarray(X, dtype="<f4")
    rows, cols = X.shape
    return _HEADER.pack(MATRIX_MAGIC, rows, cols) + X.tobytes(order="C")


def matrix_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise FeatureError("feature file truncated (no header)")
    magic, rows, cols = _HEADER.unpack_from(data)
    if magic != MATRIX_MAGIC:
        raise FeatureError(f"bad feature file magic {magic!r}")
    body = data[_HEADER.size:]
    if len(body) != rows * cols * 4:
        raise FeatureError(f"feature file body has {len(body)} bytes, expected {rows * cols * 4}")
    return np.frombuffer(body, dtype="<f4").reshape(rows, cols).astype(np.float32)


def save_matrix(X, path) -> None:
    from .io import atomic_write_bytes
    atomic_write_bytes(path, matrix_to_bytes(X))


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as f:
        return matrix_from_bytes(f.read())


def matrix_to_csv(fm: FeatureMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "label", "genre"] + [f"f{j}" for j in range(fm.n_features)])
    for i in range(len(fm)):
        w.writerow([fm.ids[i], int(fm.labels[i]), fm.genres[i]] + [repr(float(x)) for x in fm.X[i]])
    return buf.getvalue()
