from fractions import Fraction

import pytest
from helpers import make_instance, make_trace
from hypothesis import given, settings
from hypothesis import strategies as st

from zhsimp.core import Dataset
from zhsimp.evaluation import (
    AlignmentError,
    categorize_errors,
    error_types,
    report_dict,
    sg_metrics,
    system_metrics,
)
from zhsimp.lexicons import FrequencyTable


def _one(substitutes, gold, replacement=None, target="靶"):
    inst = make_instance(f"这{target}了", target, gold=gold, id="i")
    return inst, make_trace(inst, "i", substitutes, replacement)


def test_sg_closed_form():
    inst, trace = _one(["a", "d"], ["a", "b", "c"])
    report = sg_metrics([trace], Dataset((inst,)))
    assert (report.potential, report.precision, report.recall, report.f1) == (1, Fraction(1, 2), Fraction(1, 3), Fraction(2, 5))


def test_sg_excludes_injected_target():
    inst, trace = _one([], ["a"])
    report = sg_metrics([trace], Dataset((inst,)))
    assert trace.candidates_final == {"靶"}
    assert (report.potential, report.precision, report.recall, report.f1) == (0, 0, 0, 0)


def test_perfect_generation():
    insts = [make_instance("这靶了", "靶", gold=g, id=str(i)) for i, g in enumerate([["a"], ["b", "c"]])]
    traces = [make_trace(inst, inst.id, inst.gold_words) for inst in insts]
    report = sg_metrics(traces, Dataset(tuple(insts)))
    assert (report.potential, report.precision, report.recall, report.f1) == (1, 1, 1, 1)


def test_micro_versus_macro():
    a = make_instance("这靶了", "靶", gold=["x"], id="a")
    b = make_instance("这靶了", "靶", gold=["y", "z", "w"], id="b")
    traces = [make_trace(a, "a", ["x"]), make_trace(b, "b", ["y", "p", "q", "r"])]
    ds = Dataset((a, b))
    micro = sg_metrics(traces, ds)
    assert (micro.precision, micro.recall) == (Fraction(2, 5), Fraction(2, 4))
    macro = sg_metrics(traces, ds, macro=True)
    assert (macro.precision, macro.recall) == ((1 + Fraction(1, 4)) / 2, (1 + Fraction(1, 3)) / 2)


def test_system_no_change():
    inst, trace = _one(["a"], ["a"])
    report = system_metrics([trace], Dataset((inst,)))
    assert (report.pre_score, report.acc_score, report.changed, report.auto) == (1, 0, 0, 0)


def test_system_all_changed_to_gold():
    insts = [make_instance("这靶了", "靶", gold=["a", "b"], id=str(i)) for i in range(3)]
    traces = [make_trace(inst, inst.id, ["a"], "a") for inst in insts]
    report = system_metrics(traces, Dataset(tuple(insts)))
    assert (report.pre_score, report.acc_score, report.changed, report.auto) == (1, 1, 3, 1)


def test_system_mixed():
    insts = [make_instance("这靶了", "靶", gold=["a"], id=str(i)) for i in range(4)]
    traces = [
        make_trace(insts[0], "0", ["a"], "a"),  # changed, in gold
        make_trace(insts[1], "1", ["z"], "z"),  # changed, wrong
        make_trace(insts[2], "2", ["a"]),  # unchanged
        make_trace(insts[3], "3", ["z"], "z"),  # changed, wrong
    ]
    report = system_metrics(traces, Dataset(tuple(insts)))
    assert (report.pre_score, report.acc_score, report.changed, report.auto) == (
        Fraction(2, 4), Fraction(1, 4), 3, Fraction(1, 3)
    )


FREQ = FrequencyTable({"靶": 10, "易": 50, "僻": 1, "错": 99})


@pytest.mark.parametrize(
    "substitutes, gold, replacement, expected",
    [
        ([], ["易"], None, {2}),
        (["僻"], ["易"], None, {3}),
        (["错"], ["易"], "错", {4}),
        (["僻"], ["僻"], "僻", {3, 5}),
        (["易"], ["易"], "易", {1}),
        (["易"], ["易"], None, {5}),
        (["易", "僻"], ["僻"], None, {5}),
        (["僻"], ["易"], "僻", {3, 4}),
    ],
)
def test_error_types(substitutes, gold, replacement, expected):
    inst, trace = _one(substitutes, gold, replacement)
    assert error_types(inst, trace, FREQ) == expected


def test_categorize_counts_and_proportions():
    cases = [([], ["易"], None), (["易"], ["易"], "易"), (["易"], ["易"], "易"), (["错"], ["易"], "错")]
    insts = [make_instance("这靶了", "靶", gold=g, id=str(i)) for i, (_, g, _) in enumerate(cases)]
    traces = [make_trace(inst, inst.id, s, r) for inst, (s, _, r) in zip(insts, cases)]
    report = categorize_errors(traces, Dataset(tuple(insts)), FREQ)
    assert report.counts == {
        1: (2, Fraction(1, 2)), 2: (1, Fraction(1, 4)), 3: (0, 0), 4: (1, Fraction(1, 4)), 5: (0, 0)
    }


def test_misaligned_traces_raise():
    inst, trace = _one(["a"], ["a"])
    other = make_instance("这靶了", "靶", id="j")
    with pytest.raises(AlignmentError, match="j"):
        sg_metrics([trace], Dataset((inst, other)))
    with pytest.raises(AlignmentError, match="unknown ids x"):
        system_metrics([trace, make_trace(other, "x")], Dataset((inst,)))
    with pytest.raises(AlignmentError):
        sg_metrics([trace, trace], Dataset((inst,)))


def test_report_dict_shape():
    inst, trace = _one(["a", "d"], ["a", "b", "c"], "a")
    report = report_dict([trace], Dataset((inst,)), FREQ)
    assert report["generation"]["f1"] == pytest.approx(0.4)
    assert report["exact"]["recall"] == "1/3"
    assert report["system"]["changed"] == 1
    # neither a nor d is more frequent than the target
    assert report["per_instance"][0]["error_types"] == [3, 5]
    assert set(report["errors"]) == {"1", "2", "3", "4", "5"}


def test_potential_can_trail_micro_recall():
    a = make_instance("这靶了", "靶", gold=["x"], id="a")
    b = make_instance("这靶了", "靶", gold=["y", "z"], id="b")
    traces = [make_trace(a, "a", []), make_trace(b, "b", ["y", "z"])]
    report = sg_metrics(traces, Dataset((a, b)))
    assert (report.potential, report.recall) == (Fraction(1, 2), Fraction(2, 3))


WORDS = st.sampled_from(list("abcdefgh"))


@st.composite
def scripted_corpus(draw):
    n = draw(st.integers(1, 8))
    insts, traces = [], []
    for i in range(n):
        gold = draw(st.lists(WORDS, min_size=1, max_size=4, unique=True))
        subs = draw(st.lists(WORDS, max_size=5, unique=True))
        repl = draw(st.one_of(st.none(), st.sampled_from(subs) if subs else st.none()))
        inst = make_instance("这靶了", "靶", gold=gold, id=f"k{i}")
        insts.append(inst)
        traces.append(make_trace(inst, inst.id, subs, repl))
    return insts, traces


@settings(max_examples=200, deadline=None)
@given(scripted_corpus(), st.randoms())
def test_metric_invariants(corpus, rnd):
    insts, traces = corpus
    ds = Dataset(tuple(insts))
    sg = sg_metrics(traces, ds)
    system = system_metrics(traces, ds)
    assert sg.potential >= sg_metrics(traces, ds, macro=True).recall
    assert system.acc_score <= system.pre_score
    acc_count = system.acc_score * len(insts)
    assert system.auto == (acc_count / system.changed if system.changed else 0)
    if sg.precision + sg.recall:
        assert sg.f1 == 2 * sg.precision * sg.recall / (sg.precision + sg.recall)

    order = list(range(len(insts)))
    rnd.shuffle(order)
    shuffled = Dataset(tuple(insts[i] for i in order))
    s2, y2 = sg_metrics(traces[::-1], shuffled), system_metrics(traces[::-1], shuffled)
    assert (s2.potential, s2.precision, s2.recall, s2.f1) == (sg.potential, sg.precision, sg.recall, sg.f1)
    assert (y2.pre_score, y2.acc_score, y2.changed, y2.auto) == (system.pre_score, system.acc_score, system.changed, system.auto)

    freq = FrequencyTable({w: i * 3 for i, w in enumerate("abcdefgh")} | {"靶": 9})
    for inst, t in zip(insts, traces):
        types = error_types(inst, t, freq)
        assert types
        assert 1 not in types or types == {1}
