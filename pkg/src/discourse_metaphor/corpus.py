"""Corpus ingestion: shared-task CSV, paragraph contexts, CoNLL-U parses.

Examples carry their own paragraph context and extracted arguments, so
nothing downstream has to reopen corpus files.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

log = logging.getLogger(__name__)

GENRES = ("Academic", "Conversation", "Fiction", "News")
SPLITS = ("Train", "Dev", "Test")

SUBJECT_RELS = frozenset({"nsubj", "nsubj:pass", "csubj"})
OBJECT_RELS = frozenset({"obj", "dobj"})

CSV_COLUMNS = ("id", "sentence", "verb_index", "lemma", "label")


class CorpusError(ValueError):
    """Malformed or inconsistent corpus input."""


class AlignmentError(CorpusError):
    """A parse does not line up with the example sentence."""


@dataclass(frozen=True)
class ArgumentSpan:
    head_token: str
    head_lemma: str
    relation: str  # "Subject" or "Object"

    def __post_init__(self):
        if not self.head_token:
            raise CorpusError("argument head token is empty")
        if self.relation not in ("Subject", "Object"):
            raise CorpusError(f"unknown argument relation {self.relation!r}")


@dataclass(frozen=True)
class Example:
    id: str
    sentence_tokens: tuple
    verb_index: int
    verb_lemma: str
    label: int
    genre: str
    context_tokens: tuple = ()
    subject: Optional[ArgumentSpan] = None
    object: Optional[ArgumentSpan] = None

    def __post_init__(self):
        if not 0 <= self.verb_index < len(self.sentence_tokens):
            raise CorpusError(
                f"{self.id}: verb_index {self.verb_index} out of range "
                f"for {len(self.sentence_tokens)} tokens")
        if self.label not in (0, 1):
            raise CorpusError(f"{self.id}: label must be 0 or 1, got {self.label!r}")
        if self.genre not in GENRES:
            raise CorpusError(f"{self.id}: unknown genre {self.genre!r}")
        if self.context_tokens is None:
            raise CorpusError(f"{self.id}: context_tokens may be empty but not null")

    @property
    def sentence_id(self) -> str:
        """``textid_sentid`` part of the ``textid_sentid_tokenidx`` id."""
        return self.id.rsplit("_", 1)[0]

    @property
    def text_id(self) -> str:
        return self.id.rsplit("_", 2)[0]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sentence_tokens"] = list(self.sentence_tokens)
        d["context_tokens"] = list(self.context_tokens)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Example":
        def span(x):
            return None if x is None else ArgumentSpan(**x)

        return cls(
            id=d["id"],
            sentence_tokens=tuple(d["sentence_tokens"]),
            verb_index=int(d["verb_index"]),
            verb_lemma=d["verb_lemma"],
            label=int(d["label"]),
            genre=d["genre"],
            context_tokens=tuple(d.get("context_tokens") or ()),
            subject=span(d.get("subject")),
            object=span(d.get("object")),
        )


@dataclass(frozen=True)
class ParsedToken:
    form: str
    lemma: str
    head_index: int
    deprel: str


@dataclass(frozen=True)
class ParsedSentence:
    sentence_id: str
    tokens: tuple

    def __post_init__(self):
        n = len(self.tokens)
        for i, tok in enumerate(self.tokens, 1):
            if not 0 <= tok.head_index <= n:
                raise CorpusError(
                    f"sentence {self.sentence_id}: token {i} has head {tok.head_index} "
                    f"outside 0..{n}")
            if not tok.deprel:
                raise CorpusError(f"sentence {self.sentence_id}: token {i} has empty deprel")


@dataclass(frozen=True)
class ExampleSet:
    examples: tuple
    split_tag: str = "Train"
    _ids: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.split_tag not in SPLITS:
            raise CorpusError(f"unknown split tag {self.split_tag!r}")
        ids = [ex.id for ex in self.examples]
        unique = frozenset(ids)
        if len(unique) != len(ids):
            seen = set()
            dup = next(i for i in ids if i in seen or seen.add(i))
            raise CorpusError(f"duplicate example id {dup!r} in {self.split_tag} set")
        object.__setattr__(self, "_ids", unique)

    def __len__(self):
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    @property
    def ids(self) -> frozenset:
        return self._ids

    def argument_coverage(self) -> float:
        """Fraction of examples with at least one extracted argument."""
        if not self.examples:
            return 0.0
        n = sum(1 for ex in self.examples if ex.subject or ex.object)
        return n / len(self.examples)


# --------------------------------------------------------------------------
# genre map and contexts

def load_genre_map(path) -> dict:
    with open(path, encoding="utf-8") as f:
        mapping = json.load(f)
    if not isinstance(mapping, dict):
        raise CorpusError(f"{path}: genre map must be a JSON object")
    for prefix, genre in mapping.items():
        if genre not in GENRES:
            raise CorpusError(f"{path}: prefix {prefix!r} maps to unknown genre {genre!r}")
    return mapping


def genre_for(text_id: str, genre_map: dict) -> str:
    # longest matching prefix wins
    best = None
    for prefix in genre_map:
        if text_id.startswith(prefix) and (best is None or len(prefix) > len(best)):
            best = prefix
    if best is None:
        raise CorpusError(f"no genre for text id {text_id!r}: prefix not in genre map")
    return genre_map[best]


@dataclass
class _Paragraph:
    id: str
    text: str
    sentence_ids: frozenset


def load_contexts(path) -> dict:
    """Read paragraph JSONL into ``text_id -> [paragraph, ...]`` in file order.

    Each record is ``{"id": "<textid>_<paraid>", "text": ...}`` and may list
    the sentences it contains under ``"sentences"`` (full ``textid_sentid``
    ids or bare sentence numbers). Paragraphs without that list are matched
    by sentence text.
    """
    by_text = {}
    seen = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                pid, text = rec["id"], rec["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise CorpusError(f"{path}:{lineno}: bad context record ({e})") from None
            if pid in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate paragraph id {pid!r}")
            seen.add(pid)
            text_id = pid.rsplit("_", 1)[0]
            sents = frozenset(str(s) for s in rec.get("sentences", ()))
            by_text.setdefault(text_id, []).append(_Paragraph(pid, text, sents))
    return by_text


def _find_paragraph(sentence_id, text_id, sentence, contexts):
    paras = contexts.get(text_id, ())
    sent_no = sentence_id[len(text_id) + 1:]
    for p in paras:
        if sentence_id in p.sentence_ids or sent_no in p.sentence_ids:
            return p
    needle = " ".join(sentence.split())
    for p in paras:
        if not p.sentence_ids and needle in " ".join(p.text.split()):
            return p
    return None


# --------------------------------------------------------------------------
# loaders

def load_shared_task_csv(examples_path, contexts_path, genre_map, split_tag="Train") -> ExampleSet:
    """Load the shared-task verbs CSV and join each row with its paragraph.

    ``genre_map`` is a prefix -> genre dict or a path to its JSON file.
    Rows whose paragraph cannot be found get an empty context; the number of
    such rows is logged once.
    """
    if not isinstance(genre_map, dict):
        genre_map = load_genre_map(genre_map)
    contexts = load_contexts(contexts_path)
    examples = []
    missing = 0
    with open(examples_path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_COLUMNS:
            raise CorpusError(
                f"{examples_path}:1: expected header {','.join(CSV_COLUMNS)}, got {header}")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(CSV_COLUMNS):
                raise CorpusError(
                    f"{examples_path}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(row)}")
            ex_id, sentence, verb_index, lemma, label = row
            try:
                verb_index = int(verb_index)
                label = int(label)
            except ValueError:
                raise CorpusError(
                    f"{examples_path}:{lineno}: verb_index and label must be integers") from None
            if label not in (0, 1):
                raise CorpusError(f"{examples_path}:{lineno}: label must be 0 or 1, got {label}")
            if ex_id.count("_") < 2:
                raise CorpusError(
                    f"{examples_path}:{lineno}: id {ex_id!r} is not textid_sentid_tokenidx")
            text_id, sent_no, _ = ex_id.rsplit("_", 2)
            tokens = tuple(sentence.split())
            if not 0 <= verb_index < len(tokens):
                raise CorpusError(
                    f"{examples_path}:{lineno}: verb_index {verb_index} out of range "
                    f"for {len(tokens)} tokens")
            try:
                genre = genre_for(text_id, genre_map)
            except CorpusError as e:
                raise CorpusError(f"{examples_path}:{lineno}: {e}") from None
            para = _find_paragraph(f"{text_id}_{sent_no}", text_id, sentence, contexts)
            if para is None:
                missing += 1
                context = ()
            else:
                context = tuple(para.text.split())
            examples.append(Example(ex_id, tokens, verb_index, lemma, label, genre, context))
    if missing:
        log.warning("%s: %d examples have no paragraph context", examples_path, missing)
    return ExampleSet(tuple(examples), split_tag)


def load_conllu(path) -> dict:
    """Read a CoNLL-U file into ``sent_id -> ParsedSentence``.

    Multiword-token ranges (``3-4``) and empty nodes (``5.1``) are skipped.
    """
    sentences = {}
    block_no = 0
    sent_id = None
    tokens = []
    started = False

    def flush():
        nonlocal sent_id, tokens, started
        if started:
            if sent_id is None:
                raise CorpusError(f"{path}: sentence block {block_no} has no '# sent_id' comment")
            if sent_id in sentences:
                raise CorpusError(f"{path}: duplicate sent_id {sent_id!r} (block {block_no})")
            sentences[sent_id] = ParsedSentence(sent_id, tuple(tokens))
        sent_id, tokens, started = None, [], False

    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                flush()
                continue
            if not started:
                started = True
                block_no += 1
            if line.startswith("#"):
                key, sep, value = line[1:].partition("=")
                if sep and key.strip() == "sent_id":
                    sent_id = value.strip()
                continue
            cols = line.split("\t")
            if len(cols) != 10:
                raise CorpusError(f"{path}:{lineno}: expected 10 columns, got {len(cols)}")
            if "-" in cols[0] or "." in cols[0]:
                continue
            try:
                idx = int(cols[0])
                head = int(cols[6])
            except ValueError:
                raise CorpusError(f"{path}:{lineno}: ID and HEAD must be integers") from None
            if idx != len(tokens) + 1:
                raise CorpusError(f"{path}:{lineno}: token id {idx} out of sequence")
            tokens.append(ParsedToken(cols[1], cols[2], head, cols[7]))
    flush()
    return sentences


def extract_arguments(example: Example, parse: ParsedSentence):
    """Return ``(subject, object)`` spans for the example's verb.

    The lowest-indexed dependent with a matching relation fills each slot.
    """
    if len(parse.tokens) != len(example.sentence_tokens):
        raise AlignmentError(
            f"sentence {parse.sentence_id}: parse has {len(parse.tokens)} tokens, "
            f"example {example.id} has {len(example.sentence_tokens)}")
    verb = example.verb_index + 1
    subject = obj = None
    for tok in parse.tokens:
        if tok.head_index != verb:
            continue
        rel = tok.deprel.lower()
        if subject is None and rel in SUBJECT_RELS:
            subject = ArgumentSpan(tok.form, tok.lemma, "Subject")
        elif obj is None and rel in OBJECT_RELS:
            obj = ArgumentSpan(tok.form, tok.lemma, "Object")
    return subject, obj


def attach_arguments(examples: ExampleSet, parses: dict) -> ExampleSet:
    """Fill subject/object on every example from its sentence parse.

    Examples without a parse keep empty argument slots.
    """
    out = []
    unparsed = 0
    for ex in examples:
        parse = parses.get(ex.sentence_id)
        if parse is None:
            unparsed += 1
            out.append(ex)
            continue
        subj, obj = extract_arguments(ex, parse)
        out.append(replace(ex, subject=subj, object=obj))
    if unparsed:
        log.warning("%d examples have no parse; arguments left empty", unparsed)
    return ExampleSet(tuple(out), examples.split_tag)


def split_dev(train: ExampleSet, n: int, seed: int):
    """Sample ``n`` examples into a dev set; the rest keep their order."""
    if n < 0 or n > len(train):
        raise CorpusError(f"cannot sample {n} dev examples from {len(train)}")
    rng = np.random.default_rng(seed)
    picked = rng.permutation(len(train))[:n]
    chosen = set(picked.tolist())
    dev = tuple(train.examples[i] for i in picked)
    rest = tuple(ex for i, ex in enumerate(train.examples) if i not in chosen)
    return ExampleSet(rest, "Train"), ExampleSet(dev, "Dev")


# --------------------------------------------------------------------------
# prepared-example files

def save_examples(examples: Iterable[Example], path) -> None:
    from .io import atomic_write_text
    lines = [json.dumps(ex.to_dict(), ensure_ascii=False, sort_keys=True) for ex in examples]
    atomic_write_text(path, "".join(line + "\n" for line in lines))


def load_examples(path, split_tag="Train") -> ExampleSet:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                out.append(Example.from_dict(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError) as e:
                raise CorpusError(f"{path}:{lineno}: bad example record ({e})") from None
    return ExampleSet(tuple(out), split_tag)


def split_path(data_dir, split: str) -> Path:
    return Path(data_dir) / f"{split.lower()}.jsonl"
