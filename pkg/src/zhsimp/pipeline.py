"""End-to-end simplification with per-instance traces."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Protocol, Sequence

from .core import Dataset, Instance
from .generation import CandidateSet, GeneratorConfig, Method, TargetSlot, generate
from .lexicons import LexiconBundle, frequency
from .mlm import MlmBackend
from .ranking import Feature, RankerConfig, aggregate, score_feature, select_replacement


class ConfigurationError(ValueError):
    """The run is misconfigured (missing capability, empty feature set, ...)."""


@dataclass(frozen=True)
class SimplificationTrace:
    instance_id: str
    method: Method
    sentence: str
    target: str
    offset: int
    candidates_raw: frozenset[str]
    candidates_final: frozenset[str]
    per_feature_scores: dict[str, dict[str, float | None]]
    avg_rank: dict[str, Fraction]
    ranked_order: tuple[str, ...]
    replacement: str | None
    output_sentence: str
    rejected: str | None = None

    def to_json(self) -> str:
        record = {
            "instance_id": self.instance_id,
            "method": self.method.value,
            "sentence": self.sentence,
            "target": self.target,
            "offset": self.offset,
            "candidates_raw": sorted(self.candidates_raw),
            "candidates_final": sorted(self.candidates_final),
            "per_feature_scores": {
                f: {w: scores[w] for w in sorted(scores)} for f, scores in self.per_feature_scores.items()
            },
            "avg_rank": {w: str(self.avg_rank[w]) for w in self.ranked_order},
            "ranked_order": list(self.ranked_order),
            "replacement": self.replacement,
            "output_sentence": self.output_sentence,
        }
        if self.rejected is not None:
            record["rejected"] = self.rejected
        return json.dumps(record, ensure_ascii=False)

    @classmethod
    def from_json(cls, line: str) -> "SimplificationTrace":
        r = json.loads(line)
        return cls(
            instance_id=str(r["instance_id"]),
            method=Method(r["method"]),
            sentence=r["sentence"],
            target=r["target"],
            offset=r["offset"],
            candidates_raw=frozenset(r["candidates_raw"]),
            candidates_final=frozenset(r["candidates_final"]),
            per_feature_scores=r["per_feature_scores"],
            avg_rank={w: Fraction(v) for w, v in r["avg_rank"].items()},
            ranked_order=tuple(r["ranked_order"]),
            replacement=r["replacement"],
            output_sentence=r["output_sentence"],
            rejected=r.get("rejected"),
        )


def splice(sentence: str, offset: int, old: str, new: str) -> str:
    return sentence[:offset] + new + sentence[offset + len(old):]


class Simplifier:
    """Generate, rank and select a substitute for one word at a time.

    The backend may be omitted when neither the generator nor the enabled
    features need a masked LM.
    """

    def __init__(
        self,
        bundle: LexiconBundle,
        backend: MlmBackend | None,
        generator: GeneratorConfig = GeneratorConfig(),
        ranker: RankerConfig = RankerConfig(),
    ):
        needs_lm = generator.method in (Method.MLM, Method.HYBRID) or Feature.LANGUAGE in ranker.features
        if needs_lm and backend is None:
            raise ConfigurationError("this configuration needs a masked LM backend")
        self.bundle = bundle
        self.backend = backend
        self.generator = generator
        self.ranker = ranker

    def candidates(self, slot, instance_id: str | None = None) -> CandidateSet:
        return generate(self.generator, self.bundle, self.backend, slot, instance_id)

    def simplify_slot(self, sentence: str, target: str, offset: int, instance_id: str) -> SimplificationTrace:
        slot = TargetSlot(sentence, target, offset)
        cands = self.candidates(slot, instance_id)
        order = sorted(cands.candidates)
        scores = [
            score_feature(
                f, order, bundle=self.bundle, backend=self.backend,
                sentence=sentence, target=target, offset=offset, window=self.ranker.window,
            )
            for f in self.ranker.features
        ]
        ranked = aggregate(scores, order, self.bundle.freq)
        replacement = select_replacement(ranked, target, self.bundle.freq)
        output = sentence if replacement is None else splice(sentence, offset, target, replacement)
        return SimplificationTrace(
            instance_id=instance_id,
            method=cands.method,
            sentence=sentence,
            target=target,
            offset=offset,
            candidates_raw=cands.raw,
            candidates_final=cands.candidates,
            per_feature_scores={fs.feature.value: dict(fs.values) for fs in scores},
            avg_rank=ranked.avg_rank,
            ranked_order=ranked.order,
            replacement=replacement,
            output_sentence=output,
        )

    def simplify_instance(self, inst: Instance, instance_id: str | None = None) -> SimplificationTrace:
        key = instance_id if instance_id is not None else (inst.id or "")
        return self.simplify_slot(inst.sentence, inst.target, inst.offset, key)

    def simplify_dataset(self, dataset: Dataset, workers: int = 1) -> list[SimplificationTrace]:
        """Traces in dataset order, whatever the worker count."""
        jobs = dataset.keyed()
        if workers <= 1:
            return [self.simplify_instance(inst, key) for key, inst in jobs]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda job: self.simplify_instance(job[1], job[0]), jobs))

    def simplify_sentence(
        self, sentence: str, segmenter: "Segmenter | None", sentence_id: str = "0"
    ) -> tuple[str, list[SimplificationTrace]]:
        """Simplify every content word left to right against the evolving sentence.

        A replacement that is not strictly more frequent than the word it
        replaces is discarded.
        """
        if segmenter is None:
            raise ConfigurationError("whole-sentence mode needs a segmenter")
        traces = []
        shift = 0
        current = sentence
        for n, (offset, word, pos) in enumerate(word_offsets(segmenter.segment(sentence))):
            if not is_content_pos(pos):
                continue
            at = offset + shift
            trace = self.simplify_slot(current, word, at, f"{sentence_id}:{n}")
            repl = trace.replacement
            if repl is not None and frequency(self.bundle.freq, repl) <= frequency(self.bundle.freq, word):
                trace = _rejected(trace)
            traces.append(trace)
            if trace.replacement is not None:
                current = trace.output_sentence
                shift += len(trace.replacement) - len(word)
        return current, traces


def _rejected(trace: SimplificationTrace) -> SimplificationTrace:
    return replace(trace, rejected=trace.replacement, replacement=None, output_sentence=trace.sentence)


class Segmenter(Protocol):
    def segment(self, sentence: str) -> Sequence[tuple[str, str]]:
        """Words with POS tags, covering the sentence in order."""


def word_offsets(words: Iterable[tuple[str, str]]) -> list[tuple[int, str, str]]:
    out = []
    offset = 0
    for word, pos in words:
        out.append((offset, word, pos))
        offset += len(word)
    return out


_CONTENT_UNIVERSAL = {"NOUN", "VERB", "ADJ", "ADV"}
_PROPER = ("nr", "ns", "nt", "nz")


def is_content_pos(tag: str) -> bool:
    """Nouns, verbs, adjectives and adverbs in universal or ICTCLAS-style tags; proper nouns excluded."""
    if tag.upper() in _CONTENT_UNIVERSAL:
        return True
    return bool(tag) and tag[0] in "nvad" and not tag.startswith(_PROPER)


def parse_tagged(line: str) -> list[tuple[str, str]]:
    """Split ``word/TAG word/TAG ...`` into (word, tag) pairs."""
    out = []
    for item in line.split():
        word, sep, tag = item.rpartition("/")
        if not sep or not word:
            raise ValueError(f"expected word/TAG, got {item!r}")
        out.append((word, tag))
    return out


class PresegmentedText:
    """Segmenter for one sentence whose segmentation is already known."""

    def __init__(self, words: Iterable[tuple[str, str]]):
        self.words = list(words)
        self.text = "".join(w for w, _ in self.words)

    def segment(self, sentence: str) -> list[tuple[str, str]]:
        if sentence != self.text:
            raise ValueError("sentence does not match the given segmentation")
        return self.words


class JiebaSegmenter:
    """Segmentation and POS tagging through ``jieba.posseg`` (optional dependency)."""

    def __init__(self):
        try:
            import jieba.posseg as posseg
        except ImportError as exc:
            raise ConfigurationError("the jieba segmenter needs the 'jieba' package") from exc
        self._posseg = posseg

    def segment(self, sentence: str) -> list[tuple[str, str]]:
        return [(p.word, p.flag) for p in self._posseg.cut(sentence)]
