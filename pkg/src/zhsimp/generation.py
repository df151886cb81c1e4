"""Substitution generation: five strategies sharing one word-list post-filter."""

from __future__ import annotations

import enum
import heapq
from dataclasses import dataclass
from typing import Protocol

from .lexicons import LexiconBundle, lookup_synonyms, nearest, sememe_candidates
from .mlm import MASK, MlmBackend, TokenSequence, tokenize


class Method(str, enum.Enum):
    SYNONYM = "synonym"
    EMBEDDING = "embedding"
    MLM = "mlm"
    SEMEME = "sememe"
    HYBRID = "hybrid"


class Slot(Protocol):
    """Anything naming a word inside a sentence; :class:`~zhsimp.core.Instance` qualifies."""

    sentence: str
    target: str
    offset: int


@dataclass(frozen=True)
class TargetSlot:
    sentence: str
    target: str
    offset: int


@dataclass(frozen=True)
class CandidateSet:
    instance_id: str | None
    method: Method
    target: str
    raw: frozenset[str]
    candidates: frozenset[str]

    @property
    def substitutes(self) -> frozenset[str]:
        """Candidates without the injected original word."""
        return self.candidates - {self.target}


@dataclass(frozen=True)
class GeneratorConfig:
    method: Method = Method.HYBRID
    top_n: int = 10
    max_mask_len: int = 4
    k: int = 10

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if self.top_n < 1 or self.max_mask_len < 1 or self.k < 1:
            raise ValueError("top_n, max_mask_len and k must all be >= 1")


def finalize(raw, bundle: LexiconBundle, target: str) -> frozenset[str]:
    """Keep words on the valid-word list and add the target, which bypasses the filter."""
    return frozenset(w for w in raw if w in bundle.valid) | {target}


def _candidate_set(method, slot, raw, bundle, instance_id) -> CandidateSet:
    raw = frozenset(raw)
    return CandidateSet(instance_id, method, slot.target, raw, finalize(raw, bundle, slot.target))


def generate_synonym(bundle: LexiconBundle, slot: Slot, instance_id: str | None = None) -> CandidateSet:
    raw = lookup_synonyms(bundle.synonyms, slot.target)
    return _candidate_set(Method.SYNONYM, slot, raw, bundle, instance_id)


def generate_embedding(
    bundle: LexiconBundle, slot: Slot, k: int = 10, instance_id: str | None = None
) -> CandidateSet:
    # The post-filter runs on the k nearest words, so fewer than k may survive.
    raw = [w for w, _ in nearest(bundle.embeddings, slot.target, k, bundle.freq)]
    return _candidate_set(Method.EMBEDDING, slot, raw, bundle, instance_id)


def generate_sememe(bundle: LexiconBundle, slot: Slot, instance_id: str | None = None) -> CandidateSet:
    raw = sememe_candidates(bundle.sememes, slot.target)
    return _candidate_set(Method.SEMEME, slot, raw, bundle, instance_id)


def masked_pair(slot: Slot, fills: tuple[str, ...], length: int) -> tuple[TokenSequence, int]:
    """The pair (S, S') with the target replaced by ``length`` slots, ``fills`` filled in.

    Returns the sequence and the position of the first still-masked slot.
    """
    end = slot.offset + len(slot.target)
    original = tokenize(slot.sentence)
    prefix = tokenize(slot.sentence[:slot.offset])
    suffix = tokenize(slot.sentence[end:])
    masked = prefix + list(fills) + [MASK] * (length - len(fills)) + suffix
    return TokenSequence.pair(original, masked), len(original) + len(prefix) + len(fills)


def mlm_fills(backend: MlmBackend, slot: Slot, length: int, top_n: int) -> list[tuple[str, float]]:
    """Best ``top_n`` fills of ``length`` masks by product of sequential probabilities.

    Masks are filled left to right, each query conditioned on the characters
    already chosen. The search is best-first on the running product, which
    can only shrink as masks are filled, so the first ``top_n`` complete
    strings popped are exactly the top ``top_n`` of the full enumeration.
    Ties fall to codepoint order of the string.
    """
    if length < 1 or top_n < 1:
        raise ValueError("length and top_n must be >= 1")
    heap: list[tuple[float, str, tuple[str, ...]]] = [(-1.0, "", ())]
    found: list[tuple[str, float]] = []
    seen: set[str] = set()
    while heap and len(found) < top_n:
        neg_p, text, fills = heapq.heappop(heap)
        if len(fills) == length:
            if text not in seen:
                seen.add(text)
                found.append((text, -neg_p))
            continue
        seq, pos = masked_pair(slot, fills, length)
        if len(fills) == length - 1:
            # at the last mask only a node's top_n children can ever be kept
            children = backend.predict_masked(seq, pos, top_n)
        else:
            children = backend.predict_all(seq, pos)
        for token, p in children:
            heapq.heappush(heap, (neg_p * p, text + token, fills + (token,)))
    return found


def generate_mlm(
    backend: MlmBackend,
    bundle: LexiconBundle,
    slot: Slot,
    top_n: int = 10,
    max_mask_len: int = 4,
    instance_id: str | None = None,
) -> CandidateSet:
    raw: set[str] = set()
    for length in range(1, min(len(slot.target), max_mask_len) + 1):
        raw.update(text for text, _ in mlm_fills(backend, slot, length, top_n))
    return _candidate_set(Method.MLM, slot, raw, bundle, instance_id)


def generate_hybrid(
    backend: MlmBackend,
    bundle: LexiconBundle,
    slot: Slot,
    top_n: int = 10,
    max_mask_len: int = 4,
    instance_id: str | None = None,
) -> CandidateSet:
    if slot.target in bundle.synonyms:
        base = generate_synonym(bundle, slot, instance_id)
    else:
        base = generate_mlm(backend, bundle, slot, top_n, max_mask_len, instance_id)
    return CandidateSet(instance_id, Method.HYBRID, base.target, base.raw, base.candidates)


def generate(
    config: GeneratorConfig,
    bundle: LexiconBundle,
    backend: MlmBackend | None,
    slot: Slot,
    instance_id: str | None = None,
) -> CandidateSet:
    method = config.method
    if method in (Method.MLM, Method.HYBRID) and backend is None:
        raise ValueError(f"the {method.value} generator needs a masked LM backend")
    if method is Method.SYNONYM:
        return generate_synonym(bundle, slot, instance_id)
    if method is Method.EMBEDDING:
        return generate_embedding(bundle, slot, config.k, instance_id)
    if method is Method.SEMEME:
        return generate_sememe(bundle, slot, instance_id)
    if method is Method.MLM:
        return generate_mlm(backend, bundle, slot, config.top_n, config.max_mask_len, instance_id)
    return generate_hybrid(backend, bundle, slot, config.top_n, config.max_mask_len, instance_id)
