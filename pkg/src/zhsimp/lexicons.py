"""Loaders and queries for the five lexical resources.

File formats (all UTF-8):

* synonyms: one synonym group per line, words separated by single spaces
* frequency: ``word<TAB>count``
* valid words: one word per line
* sememes: ``word<TAB>sememe1|sememe2|...``; repeated lines add senses
* embeddings: header ``vocab_size dim`` then ``word v1 ... vdim``
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .core import is_word


class LexiconError(ValueError):
    """A resource file is malformed."""

    def __init__(self, source: str, line_no: int, message: str):
        super().__init__(f"{source}:{line_no}: {message}")
        self.source = source
        self.line_no = line_no


def _lines(lines: Iterable[str]) -> Iterable[tuple[int, str]]:
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if line.strip():
            yield line_no, line


class SynonymThesaurus:
    def __init__(self, groups: Iterable[Iterable[str]]):
        self.members: dict[int, frozenset[str]] = {}
        index: dict[str, set[int]] = defaultdict(set)
        for gid, group in enumerate(groups):
            words = frozenset(group)
            self.members[gid] = words
            for w in words:
                index[w].add(gid)
        self.groups: dict[str, frozenset[int]] = {w: frozenset(g) for w, g in index.items()}

    @classmethod
    def parse(cls, lines: Iterable[str], source: str = "<synonyms>") -> "SynonymThesaurus":
        groups = []
        for line_no, line in _lines(lines):
            words = line.split(" ")
            if not all(is_word(w) for w in words):
                raise LexiconError(source, line_no, "words must be separated by single spaces")
            groups.append(words)
        return cls(groups)

    def __contains__(self, word: str) -> bool:
        return word in self.groups

    def __len__(self) -> int:
        return len(self.groups)


def lookup_synonyms(thesaurus: SynonymThesaurus, word: str) -> set[str]:
    out: set[str] = set()
    for gid in thesaurus.groups.get(word, ()):
        out |= thesaurus.members[gid]
    out.discard(word)
    return out


class FrequencyTable:
    def __init__(self, counts: Mapping[str, int]):
        self.counts = dict(counts)

    @classmethod
    def parse(cls, lines: Iterable[str], source: str = "<frequency>") -> "FrequencyTable":
        counts: dict[str, int] = {}
        for line_no, line in _lines(lines):
            parts = line.split("\t")
            if len(parts) != 2 or not is_word(parts[0]):
                raise LexiconError(source, line_no, "expected word<TAB>count")
            try:
                count = int(parts[1])
            except ValueError:
                raise LexiconError(source, line_no, f"bad count {parts[1]!r}") from None
            if count < 0:
                raise LexiconError(source, line_no, "count must be non-negative")
            if parts[0] in counts:
                raise LexiconError(source, line_no, f"duplicate word {parts[0]!r}")
            counts[parts[0]] = count
        return cls(counts)

    def __getitem__(self, word: str) -> int:
        return self.counts.get(word, 0)


def frequency(table: FrequencyTable, word: str) -> int:
    return table.counts.get(word, 0)


class ValidWordList:
    def __init__(self, words: Iterable[str]):
        self.words = frozenset(words)

    @classmethod
    def parse(cls, lines: Iterable[str], source: str = "<valid words>") -> "ValidWordList":
        words = []
        for line_no, line in _lines(lines):
            if not is_word(line):
                raise LexiconError(source, line_no, f"not a word: {line!r}")
            words.append(line)
        return cls(words)

    def __contains__(self, word: str) -> bool:
        return word in self.words

    def __len__(self) -> int:
        return len(self.words)


class SememeKB:
    """Word senses as sets of sememe labels."""

    def __init__(self, senses: Mapping[str, Iterable[Iterable[str]]]):
        self.senses: dict[str, tuple[frozenset[str], ...]] = {}
        self._by_sense: dict[frozenset[str], set[str]] = defaultdict(set)
        for word, word_senses in senses.items():
            unique: list[frozenset[str]] = []
            for sense in word_senses:
                sense = frozenset(sense)
                if not sense:
                    raise ValueError(f"empty sense for {word!r}")
                if sense not in unique:
                    unique.append(sense)
            if not unique:
                raise ValueError(f"{word!r} has no senses")
            self.senses[word] = tuple(unique)
            for sense in unique:
                self._by_sense[sense].add(word)

    @classmethod
    def parse(cls, lines: Iterable[str], source: str = "<sememes>") -> "SememeKB":
        senses: dict[str, list[list[str]]] = defaultdict(list)
        for line_no, line in _lines(lines):
            parts = line.split("\t")
            if len(parts) != 2 or not is_word(parts[0]):
                raise LexiconError(source, line_no, "expected word<TAB>sememe|sememe|...")
            labels = [s.strip() for s in parts[1].split("|")]
            if not all(labels):
                raise LexiconError(source, line_no, "empty sememe label")
            senses[parts[0]].append(labels)
        return cls(senses)

    def __contains__(self, word: str) -> bool:
        return word in self.senses

    def words_with_sense(self, sense: frozenset[str]) -> set[str]:
        return set(self._by_sense.get(sense, ()))


def sememe_candidates(kb: SememeKB, word: str) -> set[str]:
    """Words sharing at least one sense whose sememe set equals one of ``word``'s."""
    out: set[str] = set()
    for sense in kb.senses.get(word, ()):
        out |= kb.words_with_sense(sense)
    out.discard(word)
    return out


class EmbeddingTable:
    def __init__(self, words: list[str], vectors: np.ndarray):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2 or vectors.shape[0] != len(words):
            raise ValueError("need one vector row per word")
        norms = np.linalg.norm(vectors, axis=1)
        if np.any(norms == 0):
            bad = words[int(np.flatnonzero(norms == 0)[0])]
            raise ValueError(f"zero-norm vector for {bad!r}")
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(words)}
        if len(self.index) != len(words):
            raise ValueError("duplicate words in embedding table")
        self.vectors = vectors
        self.dim = vectors.shape[1]
        self._unit = vectors / norms[:, None]

    @classmethod
    def parse(cls, lines: Iterable[str], source: str = "<embeddings>") -> "EmbeddingTable":
        it = iter(_lines(lines))
        try:
            line_no, header = next(it)
        except StopIteration:
            raise LexiconError(source, 1, "missing 'vocab_size dim' header") from None
        try:
            size, dim = (int(x) for x in header.split())
        except ValueError:
            raise LexiconError(source, line_no, "header must be 'vocab_size dim'") from None
        words: list[str] = []
        rows: list[list[float]] = []
        seen: set[str] = set()
        for line_no, line in it:
            parts = line.rstrip().split(" ")
            if len(parts) != dim + 1:
                raise LexiconError(source, line_no, f"expected word and {dim} values")
            if parts[0] in seen:
                raise LexiconError(source, line_no, f"duplicate word {parts[0]!r}")
            try:
                row = [float(x) for x in parts[1:]]
            except ValueError:
                raise LexiconError(source, line_no, "non-numeric vector component") from None
            if not any(row):
                raise LexiconError(source, line_no, f"zero-norm vector for {parts[0]!r}")
            seen.add(parts[0])
            words.append(parts[0])
            rows.append(row)
        if len(words) != size:
            raise LexiconError(source, line_no, f"header says {size} words, found {len(words)}")
        return cls(words, np.array(rows, dtype=np.float64).reshape(len(words), dim))

    def __contains__(self, word: str) -> bool:
        return word in self.index

    def __len__(self) -> int:
        return len(self.words)


def cosine(emb: EmbeddingTable, a: str, b: str) -> float | None:
    """Cosine similarity, or None when either word has no vector."""
    ia, ib = emb.index.get(a), emb.index.get(b)
    if ia is None or ib is None:
        return None
    if ia == ib:
        return 1.0
    value = float(emb._unit[ia] @ emb._unit[ib])
    return min(1.0, max(-1.0, value))


def nearest(
    emb: EmbeddingTable,
    word: str,
    k: int,
    freq: FrequencyTable | None = None,
) -> list[tuple[str, float]]:
    """Top-``k`` neighbours by cosine; ties go to higher frequency, then codepoint order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    i = emb.index.get(word)
    if i is None:
        return []
    sims = np.clip(emb._unit @ emb._unit[i], -1.0, 1.0)
    counts = freq.counts if freq is not None else {}
    ranked = sorted(
        ((w, float(sims[j])) for j, w in enumerate(emb.words) if j != i),
        key=lambda ws: (-ws[1], -counts.get(ws[0], 0), ws[0]),
    )
    return ranked[:k]


@dataclass(frozen=True)
class LexiconBundle:
    synonyms: SynonymThesaurus
    freq: FrequencyTable
    valid: ValidWordList
    sememes: SememeKB
    embeddings: EmbeddingTable

    @classmethod
    def load(
        cls,
        synonyms: str | Path,
        frequency: str | Path,
        valid_words: str | Path,
        sememes: str | Path,
        embeddings: str | Path,
    ) -> "LexiconBundle":
        return cls(
            synonyms=load_resource(SynonymThesaurus, synonyms),
            freq=load_resource(FrequencyTable, frequency),
            valid=load_resource(ValidWordList, valid_words),
            sememes=load_resource(SememeKB, sememes),
            embeddings=load_resource(EmbeddingTable, embeddings),
        )


def load_resource(kind, path: str | Path):
    with open(path, encoding="utf-8") as fh:
        try:
            return kind.parse(fh, source=str(path))
        except LexiconError:
            raise
        except ValueError as exc:
            raise LexiconError(str(path), 0, str(exc)) from None
