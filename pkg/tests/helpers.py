"""Builders for small in-memory resources."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from zhsimp.core import GoldSubstitute, Instance
from zhsimp.generation import Method
from zhsimp.lexicons import (
    EmbeddingTable,
    FrequencyTable,
    LexiconBundle,
    SememeKB,
    SynonymThesaurus,
    ValidWordList,
)
from zhsimp.pipeline import SimplificationTrace, splice


def make_bundle(
    synonyms=(),
    freq=None,
    valid=None,
    sememes=None,
    vectors=None,
) -> LexiconBundle:
    vectors = vectors or {"占位": [1.0]}
    words = list(vectors)
    emb = EmbeddingTable(words, np.array([vectors[w] for w in words], dtype=float))
    valid = valid if valid is not None else set()
    return LexiconBundle(
        synonyms=SynonymThesaurus(synonyms),
        freq=FrequencyTable(freq or {}),
        valid=ValidWordList(valid),
        sememes=SememeKB(sememes or {}),
        embeddings=emb,
    )


def make_instance(sentence: str, target: str, gold=("替",), id=None) -> Instance:
    return Instance(
        sentence=sentence,
        target=target,
        offset=sentence.index(target),
        gold=tuple(GoldSubstitute(w, Fraction(i + 1)) for i, w in enumerate(gold)),
        id=id,
    )


def make_trace(inst: Instance, key: str, substitutes=(), replacement=None) -> SimplificationTrace:
    """A scripted trace: ``substitutes`` plus the injected target, ranked in the given order."""
    final = frozenset(substitutes) | {inst.target}
    order = tuple(dict.fromkeys([*substitutes, inst.target]))
    output = inst.sentence if replacement is None else splice(inst.sentence, inst.offset, inst.target, replacement)
    return SimplificationTrace(
        instance_id=key,
        method=Method.HYBRID,
        sentence=inst.sentence,
        target=inst.target,
        offset=inst.offset,
        candidates_raw=frozenset(substitutes),
        candidates_final=final,
        per_feature_scores={},
        avg_rank={w: Fraction(i + 1) for i, w in enumerate(order)},
        ranked_order=order,
        replacement=replacement,
        output_sentence=output,
    )
