import json
import shutil

import pytest
from helpers import make_instance, make_trace

from zhsimp.cli import main, read_config
from zhsimp.core import Dataset, load_dataset, write_dataset
from zhsimp.generation import Method
from zhsimp.pipeline import Simplifier


def _run(*argv) -> int:
    return main([str(a) for a in argv])


def test_generate_empty_dataset(tmp_path, mini_dir):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    out = tmp_path / "cands.jsonl"
    assert _run("generate", "--config", mini_dir / "run.ini", "--out", out, empty) == 0
    assert out.read_text(encoding="utf-8") == ""


def test_generate_matches_library(tmp_path, mini_dir):
    ds = load_dataset(mini_dir / "dataset.jsonl")
    small = tmp_path / "three.jsonl"
    write_dataset(Dataset(ds.instances[:3]), small)
    out = tmp_path / "cands.jsonl"
    assert _run("generate", "--config", mini_dir / "run.ini", "--out", out, small) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3

    config = read_config(mini_dir / "run.ini")
    from zhsimp.cli import load_backend, load_bundle
    simp = Simplifier(load_bundle(config), load_backend(config), config.generator, config.ranker)
    for line, inst in zip(lines, ds.instances[:3]):
        cands = simp.candidates(inst, inst.id)
        record = json.loads(line)
        assert record["id"] == inst.id
        assert record["method"] == Method.HYBRID.value
        assert record["candidates"] == sorted(cands.candidates)

    again = tmp_path / "again.jsonl"
    _run("generate", "--config", mini_dir / "run.ini", "--out", again, small)
    assert again.read_bytes() == out.read_bytes()


def test_simplify_matches_library(tmp_path, mini_dir):
    out = tmp_path / "traces.jsonl"
    assert _run("simplify", "--config", mini_dir / "run.ini", "--out", out, mini_dir / "dataset.jsonl") == 0
    config = read_config(mini_dir / "run.ini")
    from zhsimp.cli import load_backend, load_bundle
    simp = Simplifier(load_bundle(config), load_backend(config), config.generator, config.ranker)
    expected = "".join(t.to_json() + "\n" for t in simp.simplify_dataset(load_dataset(mini_dir / "dataset.jsonl")))
    assert out.read_text(encoding="utf-8") == expected


def test_flag_overrides(tmp_path, mini_dir):
    out = tmp_path / "traces.jsonl"
    args = ["simplify", "--config", mini_dir / "run.ini", "--generator", "synonym",
            "--features", "frequency,hownet", "--workers", "3", "--out", out, mini_dir / "dataset.jsonl"]
    assert _run(*args) == 0
    records = [json.loads(x) for x in out.read_text(encoding="utf-8").splitlines()]
    assert {r["method"] for r in records} == {"synonym"}
    assert set(records[0]["per_feature_scores"]) == {"frequency", "hownet"}


def test_zero_features_is_config_error(tmp_path, mini_dir):
    out = tmp_path / "traces.jsonl"
    assert _run("simplify", "--config", mini_dir / "run.ini", "--features", "", "--out", out,
                mini_dir / "dataset.jsonl") == 1
    assert not out.exists()


def test_missing_resource_is_config_error(tmp_path, mini_dir, caplog):
    for name in ["run.ini", "dataset.jsonl", "synonyms.txt", "freq.tsv", "valid.txt", "mlm_table.tsv", "vectors.txt"]:
        shutil.copy(mini_dir / name, tmp_path / name)
    assert _run("simplify", "--config", tmp_path / "run.ini", tmp_path / "dataset.jsonl") == 1
    assert "sememes.tsv" in caplog.text


def test_unknown_config_key(tmp_path, mini_dir):
    bad = tmp_path / "bad.ini"
    bad.write_text((mini_dir / "run.ini").read_text(encoding="utf-8") + "\n[mlm]\ntopn = 3\n", encoding="utf-8")
    assert _run("simplify", "--config", bad, mini_dir / "dataset.jsonl") == 1


def test_bad_dataset_is_data_error(tmp_path, mini_dir):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"sentence": "他很难", "target": "难", "offset": 0, "gold": [{"word": "易", "rank": 1}]}\n',
                   encoding="utf-8")
    assert _run("simplify", "--config", mini_dir / "run.ini", bad) == 2


def test_text_mode(tmp_path, mini_dir, capsys):
    text = tmp_path / "in.txt"
    text.write_text("他/r 很/d 忙/a\n\n的/u\n", encoding="utf-8")
    assert _run("simplify", "--config", mini_dir / "run.ini", "--text", text) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [json.loads(x)["instance_id"] for x in lines] == ["0:1", "0:2"]


def _write_pair(tmp_path, insts, traces):
    ds_path, tr_path = tmp_path / "gold.jsonl", tmp_path / "traces.jsonl"
    write_dataset(Dataset(tuple(insts)), ds_path)
    tr_path.write_text("".join(t.to_json() + "\n" for t in traces), encoding="utf-8")
    return ds_path, tr_path


def _freq_config(tmp_path, counts):
    (tmp_path / "freq.tsv").write_text("".join(f"{w}\t{c}\n" for w, c in counts.items()), encoding="utf-8")
    config = tmp_path / "eval.ini"
    config.write_text("[resources]\nfrequency = freq.tsv\n", encoding="utf-8")
    return config


def test_evaluate_perfect(tmp_path):
    insts = [make_instance("他很难", "难", gold=["易", "简"], id=f"p{i}") for i in range(3)]
    traces = [make_trace(inst, inst.id, ["易", "简"], "易") for inst in insts]
    ds_path, tr_path = _write_pair(tmp_path, insts, traces)
    out = tmp_path / "report.json"
    assert _run("evaluate", "--config", _freq_config(tmp_path, {"易": 9, "难": 1}), "--out", out, ds_path, tr_path) == 0
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["generation"] == {"potential": 1.0, "precision": 1.0, "recall": 1.0, "f1": 1.0}
    assert (report["system"]["pre"], report["system"]["acc"], report["system"]["auto"]) == (1.0, 1.0, 1.0)
    assert report["errors"]["1"]["count"] == 3


def test_evaluate_hand_built_five(tmp_path):
    g = ["易", "简"]
    insts = [make_instance("他很难", "难", gold=g, id=f"h{i}") for i in range(5)]
    traces = [
        make_trace(insts[0], "h0", ["易", "繁"], "易"),  # overlap 1 of 2; changed to gold
        make_trace(insts[1], "h1", [], None),  # no candidates
        make_trace(insts[2], "h2", ["繁"], "繁"),  # changed, not gold
        make_trace(insts[3], "h3", ["易", "简"], None),  # overlap 2; left alone
        make_trace(insts[4], "h4", ["简"], "简"),  # overlap 1; changed to gold
    ]
    ds_path, tr_path = _write_pair(tmp_path, insts, traces)
    config = _freq_config(tmp_path, {"难": 5, "易": 9, "简": 7, "繁": 1})
    out = tmp_path / "report.json"
    assert _run("evaluate", "--config", config, "--out", out, ds_path, tr_path) == 0
    exact = json.loads(out.read_text(encoding="utf-8"))["exact"]
    # generated 2+0+1+2+1 = 6, overlap 1+0+0+2+1 = 4, gold 10
    assert exact["potential"] == "3/5"
    assert exact["precision"] == "2/3"
    assert exact["recall"] == "2/5"
    assert exact["f1"] == "1/2"
    # changed h0, h2, h4; gold hits h0, h4; unchanged h1, h3
    assert (exact["pre"], exact["acc"], exact["auto"]) == ("4/5", "2/5", "2/3")
    errors = json.loads(out.read_text(encoding="utf-8"))["errors"]
    # h0 -> 1, h1 -> 2, h2 -> 3 and 4, h3 -> 5, h4 -> 1
    assert {k: v["count"] for k, v in errors.items()} == {"1": 2, "2": 1, "3": 1, "4": 1, "5": 1}


def test_evaluate_mismatched_ids(tmp_path, caplog):
    insts = [make_instance("他很难", "难", id=f"m{i}") for i in range(3)]
    traces = [make_trace(inst, inst.id) for inst in insts[:2]]
    ds_path, tr_path = _write_pair(tmp_path, insts, traces)
    out = tmp_path / "report.json"
    code = _run("evaluate", "--config", _freq_config(tmp_path, {}), "--out", out, ds_path, tr_path)
    assert code != 0
    assert not out.exists()
    assert "m2" in caplog.text


def test_evaluate_needs_frequency(tmp_path):
    config = tmp_path / "empty.ini"
    config.write_text("", encoding="utf-8")
    insts = [make_instance("他很难", "难", id="a")]
    ds_path, tr_path = _write_pair(tmp_path, insts, [make_trace(insts[0], "a")])
    assert _run("evaluate", "--config", config, ds_path, tr_path) == 1


@pytest.mark.parametrize("argv", [[], ["frobnicate"]])
def test_bad_usage_exits(argv):
    with pytest.raises(SystemExit):
        main(argv)
