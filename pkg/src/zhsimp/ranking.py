"""Substitution ranking by the average of four per-feature fractional ranks."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .lexicons import FrequencyTable, LexiconBundle, cosine, frequency
from .mlm import MASK, MlmBackend, TokenSequence, tokenize


class Feature(str, enum.Enum):
    LANGUAGE = "language"
    SIMILARITY = "similarity"
    FREQUENCY = "frequency"
    HOWNET = "hownet"

    @property
    def lower_is_better(self) -> bool:
        return self is Feature.LANGUAGE


ALL_FEATURES = (Feature.LANGUAGE, Feature.SIMILARITY, Feature.FREQUENCY, Feature.HOWNET)


@dataclass(frozen=True)
class FeatureScores:
    """Scores of one feature; ``None`` marks a value that cannot be computed."""

    feature: Feature
    values: Mapping[str, float | None]

    @property
    def lower_is_better(self) -> bool:
        return self.feature.lower_is_better


@dataclass(frozen=True)
class RankedCandidates:
    per_feature_ranks: dict[Feature, dict[str, Fraction]]
    avg_rank: dict[str, Fraction]
    order: tuple[str, ...]


@dataclass(frozen=True)
class RankerConfig:
    features: tuple[Feature, ...] = ALL_FEATURES
    window: int = 5

    def __post_init__(self) -> None:
        features = tuple(dict.fromkeys(Feature(f) for f in self.features))
        if not features:
            raise ValueError("at least one ranking feature must be enabled")
        if self.window < 1:
            raise ValueError("window must be >= 1")
        object.__setattr__(self, "features", features)


def lm_fluency(
    backend: MlmBackend, sentence: str, offset: int, length: int, candidate: str, window: int = 5
) -> float:
    """Mean masked-token loss over the candidate and up to ``window`` tokens each side.

    ``length`` is the character length of the word being replaced at ``offset``.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    left = tokenize(sentence[:offset])
    middle = tokenize(candidate)
    right = tokenize(sentence[offset + length:])
    tokens = left + middle + right
    start = max(0, len(left) - window)
    stop = min(len(tokens), len(left) + len(middle) + window)
    seq = TokenSequence.single(tokens)
    losses = [backend.token_loss(seq.replace(i, MASK), i, tokens[i]) for i in range(start, stop)]
    return sum(losses) / len(losses)


def emb_similarity(bundle: LexiconBundle, target: str, candidate: str) -> float | None:
    if candidate == target:
        return 1.0
    return cosine(bundle.embeddings, target, candidate)


def sememe_similarity(bundle: LexiconBundle, target: str, candidate: str) -> float:
    """Best Jaccard overlap between a sense of ``target`` and a sense of ``candidate``."""
    kb = bundle.sememes
    if target not in kb or candidate not in kb:
        return 0.0
    if candidate == target:
        return 1.0
    best = 0.0
    for s in kb.senses[target]:
        for t in kb.senses[candidate]:
            best = max(best, len(s & t) / len(s | t))
    return best


def score_feature(
    feature: Feature,
    candidates: Iterable[str],
    *,
    bundle: LexiconBundle,
    backend: MlmBackend | None,
    sentence: str,
    target: str,
    offset: int,
    window: int = 5,
) -> FeatureScores:
    values: dict[str, float | None] = {}
    for c in candidates:
        if feature is Feature.LANGUAGE:
            if backend is None:
                raise ValueError("the language feature needs a masked LM backend")
            values[c] = lm_fluency(backend, sentence, offset, len(target), c, window)
        elif feature is Feature.SIMILARITY:
            values[c] = emb_similarity(bundle, target, c)
        elif feature is Feature.FREQUENCY:
            values[c] = frequency(bundle.freq, c)
        else:
            values[c] = sememe_similarity(bundle, target, c)
    return FeatureScores(feature, values)


def rank_numbers(scores: FeatureScores, candidates: Sequence[str]) -> dict[str, Fraction]:
    """Fractional ranks, 1 = best; undefined values rank after every defined one."""
    sign = 1 if scores.lower_is_better else -1
    defined = [c for c in candidates if scores.values[c] is not None]
    undefined = [c for c in candidates if scores.values[c] is None]
    groups: list[list[str]] = []
    last = object()
    for c in sorted(defined, key=lambda c: sign * scores.values[c]):
        if groups and scores.values[c] == last:
            groups[-1].append(c)
        else:
            groups.append([c])
        last = scores.values[c]
    if undefined:
        groups.append(undefined)
    ranks: dict[str, Fraction] = {}
    position = 0
    for group in groups:
        # positions position+1 .. position+len(group) share their mean
        mean = Fraction(2 * position + len(group) + 1, 2)
        for c in group:
            ranks[c] = mean
        position += len(group)
    return ranks


def aggregate(
    features: Sequence[FeatureScores], candidates: Iterable[str], freq: FrequencyTable
) -> RankedCandidates:
    candidates = sorted(set(candidates))
    if not candidates:
        raise ValueError("cannot rank an empty candidate list")
    if not features:
        raise ValueError("at least one feature is required")
    per_feature = {fs.feature: rank_numbers(fs, candidates) for fs in features}
    avg = {c: sum(r[c] for r in per_feature.values()) / len(per_feature) for c in candidates}
    order = sorted(candidates, key=lambda c: (avg[c], -frequency(freq, c), c))
    return RankedCandidates(per_feature, avg, tuple(order))


def select_replacement(ranked: RankedCandidates, target: str, freq: FrequencyTable) -> str | None:
    """The top candidate unless it is the target; then the runner-up if it is more frequent."""
    if not ranked.order:
        raise ValueError("ranked candidate list is empty")
    first = ranked.order[0]
    if first != target:
        return first
    if len(ranked.order) > 1:
        second = ranked.order[1]
        if frequency(freq, second) > frequency(freq, target):
            return second
    return None
