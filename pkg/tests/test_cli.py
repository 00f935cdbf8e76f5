import csv
import json
import os

import pytest

from qualgraph.cli import main

from conftest import fixture_path


def write(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        if isinstance(doc, str):
            fh.write(doc)
        else:
            json.dump(doc, fh)
    return str(path)


def score_config(tmp_path, out_dir, graphs=("gold_graph.json",)):
    return write(tmp_path / "config.json", {
        "corpus": fixture_path("gold_corpus.jsonl"),
        "graphs": [fixture_path(g) for g in graphs],
        "judge": {"kind": "mock", "seed": 0,
                  "rules": fixture_path("gold_rules.json")},
        "output_dir": str(out_dir),
    })


def test_validate_ok(capsys):
    assert main(["validate", fixture_path("gold_graph.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["passed"] and out["violations"] == []


def test_validate_domain_failure(tmp_path, capsys):
    doc = json.loads(open(fixture_path("gold_graph.json")).read())
    doc["nodes"][0]["evidence"] = []
    path = write(tmp_path / "bad.json", doc)
    assert main(["validate", path]) == 1
    out = json.loads(capsys.readouterr().out)
    assert any(v["rule"] == "R1" for v in out["violations"])


def test_validate_parse_error(tmp_path, capsys):
    path = write(tmp_path / "broken.json", "{not json")
    assert main(["validate", path]) == 2
    assert "parse error" in capsys.readouterr().err


def test_score_writes_reports_and_manifest(tmp_path, capsys):
    out_dir = tmp_path / "out"
    config = score_config(tmp_path, out_dir)
    assert main(["score", "--config", config]) == 0
    assert json.loads(capsys.readouterr().out)["graph_id"] == "gold"
    for name in ("report.json", "report.md", "report_graph.json",
                 "run_manifest.json"):
        assert (out_dir / name).exists()
    manifest = json.loads((out_dir / "run_manifest.json").read_text())
    assert manifest["command"] == "score"
    assert fixture_path("gold_corpus.jsonl") in manifest["input_hashes"]


def test_score_select_level_picks_best(tmp_path, capsys):
    out_dir = tmp_path / "out"
    config = score_config(tmp_path, out_dir,
                          graphs=("corrupted_graph.json", "gold_graph.json"))
    assert main(["score", "--config", config, "--select-level"]) == 0
    assert capsys.readouterr().out.strip() == "gold"
    assert (out_dir / "report_gold.json").exists()
    assert (out_dir / "report_corrupted.json").exists()


def test_score_requires_seed_for_mock(tmp_path, capsys):
    config = write(tmp_path / "c.json", {
        "corpus": fixture_path("gold_corpus.jsonl"),
        "graphs": [fixture_path("gold_graph.json")],
        "judge": {"kind": "mock"},
        "output_dir": str(tmp_path / "out"),
    })
    assert main(["score", "--config", config]) == 1
    assert "seed" in capsys.readouterr().err


def test_score_remote_without_endpoint_is_external_error(tmp_path, capsys):
    config = write(tmp_path / "c.json", {
        "corpus": fixture_path("gold_corpus.jsonl"),
        "graphs": [fixture_path("gold_graph.json")],
        "judge": {"kind": "remote"},
        "output_dir": str(tmp_path / "out"),
    })
    assert main(["score", "--config", config]) == 3
    assert "judge failure" in capsys.readouterr().err


def test_score_bad_corpus_is_format_error(tmp_path, capsys):
    bad_corpus = write(tmp_path / "bad.jsonl", "{oops\n")
    config = write(tmp_path / "c.json", {
        "corpus": bad_corpus,
        "graphs": [fixture_path("gold_graph.json")],
        "judge": {"kind": "mock", "seed": 0},
        "output_dir": str(tmp_path / "out"),
    })
    assert main(["score", "--config", config]) == 2


def test_score_does_not_mutate_inputs(tmp_path):
    before = open(fixture_path("gold_graph.json"), "rb").read()
    out_dir = tmp_path / "out"
    config = score_config(tmp_path, out_dir)
    assert main(["score", "--config", config]) == 0
    assert open(fixture_path("gold_graph.json"), "rb").read() == before


def test_induce_writes_graph(tmp_path, capsys):
    out_dir = tmp_path / "out"
    config = write(tmp_path / "c.json", {
        "corpus": fixture_path("coded_corpus.jsonl"),
        "codebook": fixture_path("codebook.json"),
        "judge": {"kind": "mock", "seed": 0,
                  "rules": fixture_path("induction_rules.json")},
        "output_dir": str(out_dir),
    })
    assert main(["induce", "--config", config]) == 0
    graph = json.loads((out_dir / "induced_graph.json").read_text())
    assert graph["level"] == "L3"
    assert [e["src"] for e in graph["edges"]] == ["A"]


def test_simulate_writes_trajectory(tmp_path):
    out_dir = tmp_path / "out"
    assert main(["simulate", fixture_path("l4_graph.json"),
                 fixture_path("l4_init.json"), "--horizon", "4",
                 "--out", str(out_dir)]) == 0
    with open(out_dir / "trajectory.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "var", "value"]
    assert len(rows) == 1 + 5 * 2  # header + (T+1) steps x 2 vars
    assert rows[1] == ["0", "s_demand", "HIGH"]


def test_simulate_rejects_bad_init(tmp_path, capsys):
    init = write(tmp_path / "init.json", {"s_demand": "HIGH"})
    assert main(["simulate", fixture_path("l4_graph.json"), init,
                 "--out", str(tmp_path / "out")]) == 1


def test_deid_end_to_end(tmp_path):
    out_dir = tmp_path / "out"
    config = write(tmp_path / "c.json", {
        "corpus": fixture_path("pii_corpus.jsonl"),
        "output_dir": str(out_dir),
    })
    map_store = tmp_path / "map.json"
    assert main(["deid", "--config", config,
                 "--policy", fixture_path("deid_policy.json"),
                 "--tier", "B", "--map-store", str(map_store),
                 "--seed", "7"]) == 0
    bundle = json.loads((out_dir / "tier_B_bundle.json").read_text())
    texts = [e["text"] for e in bundle["excerpts"]]
    assert any("[EMAIL_1]" in t for t in texts)
    assert not any("alice.smith" in t for t in texts)
    audit = (out_dir / "audit_log.jsonl").read_text().splitlines()
    assert audit and all(json.loads(line)["action"] for line in audit)
    assert map_store.exists()
    assert (os.stat(map_store).st_mode & 0o777) == 0o600


def test_deid_refuses_map_store_inside_output(tmp_path, capsys):
    out_dir = tmp_path / "out"
    config = write(tmp_path / "c.json", {
        "corpus": fixture_path("pii_corpus.jsonl"),
        "output_dir": str(out_dir),
    })
    assert main(["deid", "--config", config,
                 "--policy", fixture_path("deid_policy.json"),
                 "--map-store", str(out_dir / "map.json")]) == 1
    assert "must not live inside" in capsys.readouterr().err


def test_agree_outputs_statistics(tmp_path, capsys):
    def label_csv(name, rows):
        path = tmp_path / name
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item_id", "label"])
            writer.writerows(rows)
        return str(path)

    pred = label_csv("pred.csv", [("a", "L1"), ("b", "L2"), ("c", "L3")])
    gold = label_csv("gold.csv", [("a", "L1"), ("b", "L2"), ("c", "L4")])
    assert main(["agree", pred, gold]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["exact_match"] == pytest.approx(2 / 3)
    assert "kappa_per_gt_normalized" in out

    mismatched = label_csv("gold2.csv", [("z", "L1")])
    assert main(["agree", pred, mismatched]) == 1


def test_classify_with_fixture_judge(tmp_path, capsys):
    config = write(tmp_path / "c.json", {
        "judge": {"kind": "mock", "seed": 0,
                  "meaning_fixture": "Level 2", "modeling_fixture": "Level 3"},
    })
    paper = write(tmp_path / "paper.txt", "a study of stages")
    assert main(["classify", "--config", config, paper]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["meaning_level"] == "L2" and out["modeling_level"] == "L3"


def test_manifest_honors_source_date_epoch(tmp_path, monkeypatch):
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    config_a = score_config(tmp_path, out_a)
    assert main(["score", "--config", config_a]) == 0
    config_b = write(tmp_path / "config_b.json", json.loads(open(config_a).read()))
    # same config contents but different output dir
    doc = json.loads(open(config_b).read())
    doc["output_dir"] = str(out_b)
    write(tmp_path / "config_b.json", doc)
    assert main(["score", "--config", str(tmp_path / "config_b.json")]) == 0
    a = json.loads((out_a / "run_manifest.json").read_text())
    b = json.loads((out_b / "run_manifest.json").read_text())
    assert a["timestamp"] == b["timestamp"]
    assert a["input_hashes"] == b["input_hashes"]
