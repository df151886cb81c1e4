"""Automatic metrics for substitution generation and full-pipeline output, plus error typing.

All ratios are exact :class:`fractions.Fraction` values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .core import Dataset, Instance
from .lexicons import FrequencyTable, frequency
from .pipeline import SimplificationTrace

ERROR_TYPES = (1, 2, 3, 4, 5)
ERROR_LABELS = {
    1: "no error",
    2: "no candidates",
    3: "no simpler candidates",
    4: "replacement not in gold",
    5: "word not simplified",
}


class AlignmentError(ValueError):
    """Traces and dataset instances do not correspond one to one."""

    def __init__(self, missing: Sequence[str], unexpected: Sequence[str]):
        parts = []
        if missing:
            parts.append("missing traces for ids " + ", ".join(missing))
        if unexpected:
            parts.append("traces for unknown ids " + ", ".join(unexpected))
        super().__init__("; ".join(parts) or "traces do not align with the dataset")
        self.missing = list(missing)
        self.unexpected = list(unexpected)


def align(traces: Iterable[SimplificationTrace], dataset: Dataset) -> list[tuple[str, Instance, SimplificationTrace]]:
    by_id: dict[str, SimplificationTrace] = {}
    dupes = []
    for t in traces:
        if t.instance_id in by_id:
            dupes.append(t.instance_id)
        by_id[t.instance_id] = t
    keyed = dataset.keyed()
    known = {k for k, _ in keyed}
    missing = [k for k, _ in keyed if k not in by_id]
    unexpected = sorted(set(by_id) - known) + sorted(set(dupes))
    if missing or unexpected:
        raise AlignmentError(missing, unexpected)
    rows = []
    for key, inst in keyed:
        t = by_id[key]
        if t.target != inst.target:
            raise AlignmentError([], [key])
        rows.append((key, inst, t))
    return rows


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def _mean(values: Iterable[Fraction]) -> Fraction:
    values = list(values)
    return sum(values, Fraction(0)) / len(values) if values else Fraction(0)


def _f1(p: Fraction, r: Fraction) -> Fraction:
    return 2 * p * r / (p + r) if p + r else Fraction(0)


@dataclass(frozen=True)
class SgRow:
    instance_id: str
    generated: int
    gold: int
    overlap: int


@dataclass(frozen=True)
class SgReport:
    potential: Fraction
    precision: Fraction
    recall: Fraction
    f1: Fraction
    macro: bool = False
    rows: tuple[SgRow, ...] = field(default=(), repr=False)


def sg_metrics(traces: Iterable[SimplificationTrace], dataset: Dataset, macro: bool = False) -> SgReport:
    """Potential, precision, recall and F1 of the generated substitutes.

    The original word injected before ranking is not counted as generated.
    Precision and recall are corpus sums unless ``macro`` is set, in which
    case they are means of per-instance ratios.
    """
    rows = []
    for key, inst, t in align(traces, dataset):
        generated = t.candidates_final - {inst.target}
        gold = inst.gold_words
        rows.append(SgRow(key, len(generated), len(gold), len(generated & gold)))
    n = len(rows)
    potential = _ratio(sum(1 for r in rows if r.overlap), n)
    if macro:
        precision = _mean(_ratio(r.overlap, r.generated) for r in rows)
        recall = _mean(_ratio(r.overlap, r.gold) for r in rows)
    else:
        overlap = sum(r.overlap for r in rows)
        precision = _ratio(overlap, sum(r.generated for r in rows))
        recall = _ratio(overlap, sum(r.gold for r in rows))
    return SgReport(potential, precision, recall, _f1(precision, recall), macro, tuple(rows))


@dataclass(frozen=True)
class SystemRow:
    instance_id: str
    final: str
    changed: bool
    in_gold: bool


@dataclass(frozen=True)
class SystemReport:
    pre_score: Fraction
    acc_score: Fraction
    changed: int
    auto: Fraction
    rows: tuple[SystemRow, ...] = field(default=(), repr=False)


def system_metrics(traces: Iterable[SimplificationTrace], dataset: Dataset) -> SystemReport:
    rows = []
    for key, inst, t in align(traces, dataset):
        final = t.replacement if t.replacement is not None else inst.target
        rows.append(SystemRow(key, final, final != inst.target, final in inst.gold_words))
    n = len(rows)
    pre = sum(1 for r in rows if not r.changed or r.in_gold)
    acc = sum(1 for r in rows if r.changed and r.in_gold)
    changed = sum(1 for r in rows if r.changed)
    return SystemReport(_ratio(pre, n), _ratio(acc, n), changed, _ratio(acc, changed), tuple(rows))


@dataclass(frozen=True)
class ErrorReport:
    counts: dict[int, tuple[int, Fraction]]
    types: tuple[tuple[str, frozenset[int]], ...] = field(default=(), repr=False)


def error_types(inst: Instance, trace: SimplificationTrace, freq: FrequencyTable) -> frozenset[int]:
    """Error types of one instance. Type 1 excludes the rest; 3 and 5 may co-occur."""
    target = inst.target
    gold = inst.gold_words
    base = frequency(freq, target)
    subs = trace.candidates_final - {target}
    simpler = {c for c in subs if frequency(freq, c) > base}
    repl = trace.replacement
    types = set()
    if not subs:
        types.add(2)
    elif not simpler:
        types.add(3)
    if repl is not None:
        if repl not in gold:
            types.add(4)
        elif frequency(freq, repl) > base:
            types.add(1)
        else:
            types.add(5)
    elif simpler:
        types.add(5)
    return frozenset(types)


def categorize_errors(
    traces: Iterable[SimplificationTrace], dataset: Dataset, freq: FrequencyTable
) -> ErrorReport:
    per_instance = [(key, error_types(inst, t, freq)) for key, inst, t in align(traces, dataset)]
    n = len(per_instance)
    counts = {}
    for kind in ERROR_TYPES:
        c = sum(1 for _, types in per_instance if kind in types)
        counts[kind] = (c, _ratio(c, n))
    return ErrorReport(counts, tuple(per_instance))


def report_dict(
    traces: Sequence[SimplificationTrace], dataset: Dataset, freq: FrequencyTable, macro: bool = False
) -> dict:
    """Every metric as one JSON-ready mapping, with per-instance rows."""
    sg = sg_metrics(traces, dataset, macro)
    system = system_metrics(traces, dataset)
    errors = categorize_errors(traces, dataset, freq)

    instances = []
    for sg_row, sys_row, (_, types) in zip(sg.rows, system.rows, errors.types):
        instances.append({
            "instance_id": sg_row.instance_id,
            "generated": sg_row.generated,
            "gold": sg_row.gold,
            "overlap": sg_row.overlap,
            "final": sys_row.final,
            "changed": sys_row.changed,
            "in_gold": sys_row.in_gold,
            "error_types": sorted(types),
        })
    return {
        "instances": len(dataset),
        "averaging": "macro" if macro else "micro",
        "generation": {
            "potential": float(sg.potential),
            "precision": float(sg.precision),
            "recall": float(sg.recall),
            "f1": float(sg.f1),
        },
        "system": {
            "pre": float(system.pre_score),
            "acc": float(system.acc_score),
            "changed": system.changed,
            "auto": float(system.auto),
        },
        "errors": {
            str(kind): {"label": ERROR_LABELS[kind], "count": c, "proportion": float(p)}
            for kind, (c, p) in errors.counts.items()
        },
        "exact": {
            "potential": str(sg.potential),
            "precision": str(sg.precision),
            "recall": str(sg.recall),
            "f1": str(sg.f1),
            "pre": str(system.pre_score),
            "acc": str(system.acc_score),
            "auto": str(system.auto),
        },
        "per_instance": instances,
    }
