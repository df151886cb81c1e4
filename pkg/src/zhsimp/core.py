"""Dataset types and the JSON-lines instance format."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator


class DatasetParseError(ValueError):
    """A dataset line is not well-formed JSON or lacks required fields."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DatasetValidationError(ValueError):
    """A parsed instance violates an instance invariant."""

    def __init__(self, instance: str, message: str):
        super().__init__(f"instance {instance}: {message}")
        self.instance = instance
        self.message = message


def is_word(text: object) -> bool:
    return isinstance(text, str) and bool(text) and not any(ch.isspace() for ch in text)


@dataclass(frozen=True)
class GoldSubstitute:
    word: str
    rank: Fraction


@dataclass(frozen=True)
class Instance:
    """One evaluation unit: a sentence, its complex word and the ranked gold substitutes.

    ``offset`` counts unicode codepoints, so ``sentence[offset:offset + len(target)]``
    must be the target.
    """

    sentence: str
    target: str
    offset: int
    gold: tuple[GoldSubstitute, ...]
    pos: str | None = None
    id: str | None = None

    def __post_init__(self) -> None:
        problem = self.violation()
        if problem is not None:
            raise DatasetValidationError(self.id or repr(self.target), problem)

    def violation(self) -> str | None:
        if not is_word(self.target):
            return f"target {self.target!r} is not a word"
        if isinstance(self.offset, bool) or not isinstance(self.offset, int) or self.offset < 0:
            return f"offset {self.offset!r} is not a non-negative integer"
        found = self.sentence[self.offset:self.offset + len(self.target)]
        if found != self.target:
            return f"offset {self.offset} points at {found!r}, not {self.target!r}"
        if not self.gold:
            return "gold list is empty"
        seen: set[str] = set()
        previous = None
        for sub in self.gold:
            if not is_word(sub.word):
                return f"gold entry {sub.word!r} is not a word"
            if sub.word in seen:
                return f"duplicate gold word {sub.word!r}"
            seen.add(sub.word)
            if previous is not None and sub.rank < previous:
                return f"gold ranks decrease at {sub.word!r}"
            previous = sub.rank
        return None

    @property
    def gold_words(self) -> frozenset[str]:
        return frozenset(sub.word for sub in self.gold)

    def key(self, index: int) -> str:
        """Identifier used to align traces: the explicit id or the 0-based position."""
        return self.id if self.id is not None else str(index)


@dataclass(frozen=True)
class Dataset:
    instances: tuple[Instance, ...] = ()
    name: str = field(default="", compare=False)

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[Instance]:
        return iter(self.instances)

    def keys(self) -> list[str]:
        return [inst.key(i) for i, inst in enumerate(self.instances)]

    def keyed(self) -> list[tuple[str, Instance]]:
        return list(zip(self.keys(), self.instances))

    @property
    def mean_gold_size(self) -> float:
        if not self.instances:
            return 0.0
        return sum(len(inst.gold) for inst in self.instances) / len(self.instances)

    def __post_init__(self) -> None:
        counts = Counter(self.keys())
        dupes = sorted(k for k, n in counts.items() if n > 1)
        if dupes:
            raise DatasetValidationError(dupes[0], "duplicate instance id")


def _parse_rank(value: object) -> Fraction:
    # JSON numbers arrive as str/int via the decoder hooks below; "p/q" strings
    # carry ranks with no finite decimal form.
    if isinstance(value, bool):
        raise ValueError("rank must be a number")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise ValueError(f"rank must be a number, got {value!r}")


def _rank_to_json(rank: Fraction) -> int | float | str:
    if rank.denominator == 1:
        return rank.numerator
    as_float = float(rank)
    if Fraction(repr(as_float)) == rank:
        return as_float
    return f"{rank.numerator}/{rank.denominator}"


def instance_from_record(record: dict) -> Instance:
    for key, kind in (("sentence", str), ("target", str), ("offset", int), ("gold", list)):
        if key not in record:
            raise ValueError(f"missing field {key!r}")
        if not isinstance(record[key], kind) or isinstance(record[key], bool):
            raise ValueError(f"field {key!r} has wrong type")
    gold = []
    for entry in record["gold"]:
        if not isinstance(entry, dict) or "word" not in entry or "rank" not in entry:
            raise ValueError("gold entries need 'word' and 'rank'")
        if not isinstance(entry["word"], str):
            raise ValueError("gold word must be a string")
        gold.append(GoldSubstitute(entry["word"], _parse_rank(entry["rank"])))
    for key in ("pos", "id"):
        if key in record and not isinstance(record[key], str):
            raise ValueError(f"field {key!r} must be a string")
    return Instance(
        sentence=record["sentence"],
        target=record["target"],
        offset=record["offset"],
        gold=tuple(gold),
        pos=record.get("pos"),
        id=record.get("id"),
    )


def instance_to_record(inst: Instance) -> dict:
    record: dict = {"sentence": inst.sentence, "target": inst.target, "offset": inst.offset}
    record["gold"] = [{"word": g.word, "rank": _rank_to_json(g.rank)} for g in inst.gold]
    if inst.pos is not None:
        record["pos"] = inst.pos
    if inst.id is not None:
        record["id"] = inst.id
    return record


def parse_dataset(stream: Iterable[str], name: str = "") -> Dataset:
    """Read a JSON-lines dataset. Blank lines are skipped; nothing is repaired."""
    instances = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line, parse_float=str)
        except json.JSONDecodeError as exc:
            raise DatasetParseError(line_no, f"invalid JSON ({exc.msg})") from None
        if not isinstance(record, dict):
            raise DatasetParseError(line_no, "expected a JSON object")
        label = record.get("id") if isinstance(record.get("id"), str) else f"at line {line_no}"
        try:
            instances.append(instance_from_record(record))
        except DatasetValidationError as exc:
            raise DatasetValidationError(label, exc.message) from None
        except (ValueError, ZeroDivisionError) as exc:
            raise DatasetParseError(line_no, str(exc)) from None
    return Dataset(tuple(instances), name)


def serialize_dataset(dataset: Dataset) -> str:
    return "".join(
        json.dumps(instance_to_record(inst), ensure_ascii=False) + "\n" for inst in dataset
    )


def load_dataset(path: str | Path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_dataset(fh, name=str(path))


def write_dataset(dataset: Dataset, path: str | Path) -> None:
    Path(path).write_text(serialize_dataset(dataset), encoding="utf-8")
