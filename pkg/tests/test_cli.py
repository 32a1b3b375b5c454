import json

import pytest

from gcsc_eval.cli import main

CORPUS_TSV = (
    "1\t和友人吃饭\t和友人吃饭\t和朋友吃饭\n"
    "2\t庆祖但\t庆祝但\t庆祝，但\n"
    "3\t以位邻居\t一位邻居\t一位邻居\n"
)
LEXICON = "友人\n朋友\n吃饭\n一位\n邻居\n庆祝\n"


@pytest.fixture
def corpus_path(tmp_path):
    path = tmp_path / "corpus.tsv"
    path.write_text(CORPUS_TSV, encoding="utf-8")
    return path


@pytest.fixture
def lexicon_path(tmp_path):
    path = tmp_path / "lexicon.txt"
    path.write_text(LEXICON, encoding="utf-8")
    return path


def evaluate_args(corpus_path, lexicon_path, out_dir, *extra):
    return [
        "evaluate",
        "--corpus", str(corpus_path),
        "--lexicon", str(lexicon_path),
        "--out", str(out_dir),
        *extra,
    ]


class TestEvaluate:
    def test_exact_judge_writes_both_reports(self, corpus_path, lexicon_path, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(evaluate_args(corpus_path, lexicon_path, out, "--judge", "exact"))
        assert code == 0
        gcsc = json.loads((out / "eval_gcsc.json").read_text(encoding="utf-8"))
        csc = json.loads((out / "eval_csc.json").read_text(encoding="utf-8"))
        assert gcsc["metric"] == "eval_gcsc" and csc["metric"] == "eval_csc"
        assert gcsc["tool_version"]
        assert gcsc["config"]["judge"] == "exact"
        # samples 1 and 2 fail exact matching, sample 3 succeeds
        assert gcsc["counts"]["ops_total"] == 3
        assert gcsc["counts"]["ops_correct"] == 1
        stdout = capsys.readouterr().out
        assert "eval_gcsc" in stdout and "eval_csc" in stdout

    def test_reports_identical_across_job_counts(self, corpus_path, lexicon_path, tmp_path):
        out1, out8 = tmp_path / "j1", tmp_path / "j8"
        assert main(evaluate_args(corpus_path, lexicon_path, out1, "--judge", "exact", "--jobs", "1")) == 0
        assert main(evaluate_args(corpus_path, lexicon_path, out8, "--judge", "exact", "--jobs", "8")) == 0
        for name in ("eval_gcsc.json", "eval_csc.json"):
            assert (out1 / name).read_bytes() == (out8 / name).read_bytes()

    def test_missing_judge_is_config_error(self, corpus_path, lexicon_path, tmp_path):
        assert main(evaluate_args(corpus_path, lexicon_path, tmp_path / "o")) == 1

    def test_embedding_without_threshold(self, corpus_path, lexicon_path, tmp_path):
        code = main(
            evaluate_args(corpus_path, lexicon_path, tmp_path / "o", "--judge", "embedding")
        )
        assert code == 1

    def test_missing_corpus_file(self, lexicon_path, tmp_path):
        code = main(
            ["evaluate", "--corpus", str(tmp_path / "nope.tsv"), "--judge", "exact",
             "--out", str(tmp_path / "o")]
        )
        assert code == 1

    def test_malformed_corpus_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.tsv"
        bad.write_text("only\ttwo\n", encoding="utf-8")
        code = main(["evaluate", "--corpus", str(bad), "--judge", "exact",
                     "--out", str(tmp_path / "o")])
        assert code == 2

    def test_csc_only_needs_no_judge(self, corpus_path, tmp_path):
        out = tmp_path / "o"
        code = main(["evaluate", "--corpus", str(corpus_path), "--metric", "csc",
                     "--out", str(out)])
        assert code == 0
        assert (out / "eval_csc.json").exists()
        assert not (out / "eval_gcsc.json").exists()

    def test_dump_ops_and_judgments(self, corpus_path, lexicon_path, tmp_path):
        out = tmp_path / "o"
        ops_path = tmp_path / "ops.jsonl"
        judgments_path = tmp_path / "judgments.tsv"
        code = main(
            evaluate_args(
                corpus_path, lexicon_path, out,
                "--judge", "exact",
                "--dump-ops", str(ops_path),
                "--dump-judgments", str(judgments_path),
            )
        )
        assert code == 0
        records = [json.loads(line) for line in ops_path.read_text(encoding="utf-8").splitlines()]
        assert len(records) == 3
        assert {r["sample_id"] for r in records} == {"1", "2", "3"}
        assert all("pred_word" in r for r in records)
        lines = judgments_path.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 3

    def test_llm_judge_against_mock(self, corpus_path, lexicon_path, tmp_path, judge_server):
        out = tmp_path / "o"
        code = main(
            evaluate_args(
                corpus_path, lexicon_path, out,
                "--metric", "gcsc",
                "--judge", "llm",
                "--endpoint", judge_server.endpoint,
                "--cache-dir", str(tmp_path / "cache"),
            )
        )
        assert code == 0
        report = json.loads((out / "eval_gcsc.json").read_text(encoding="utf-8"))
        assert report["counts"]["ops_unjudged"] == 0
        assert report["counts"]["ops_correct"] == 3  # mock answers 1 for everything

    def test_unreachable_endpoint_exit_code(self, corpus_path, lexicon_path, tmp_path):
        code = main(
            evaluate_args(
                corpus_path, lexicon_path, tmp_path / "o",
                "--metric", "gcsc",
                "--judge", "llm",
                "--endpoint", "http://127.0.0.1:1/v1/chat",
                "--max-attempts", "1",
            )
        )
        assert code == 3


class TestStats:
    def test_missing_pinyin_table_fails_before_work(self, corpus_path, tmp_path):
        out = tmp_path / "stats.json"
        code = main(["stats", "--corpus", str(corpus_path),
                     "--pinyin", str(tmp_path / "nope.tsv"), "--out", str(out)])
        assert code == 1
        assert not out.exists()

    def test_stats_report(self, corpus_path, pinyin_table_path, tmp_path, capsys):
        out = tmp_path / "stats.json"
        code = main(["stats", "--corpus", str(corpus_path),
                     "--pinyin", str(pinyin_table_path), "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text(encoding="utf-8"))
        stats = payload["stats"]
        # sample 1: equal subst; sample 2: unequal subst; sample 3: equal subst
        assert stats["ops_total"] == 3
        assert stats["subst_equal"] == 2
        assert stats["subst_unequal"] == 1
        assert stats["unequal_correct_pct"] is None
        assert "ops_total" in capsys.readouterr().out


class TestCorrelate:
    def test_same_file_scores_one(self, tmp_path, capsys):
        judgments = tmp_path / "j.tsv"
        judgments.write_text("1\t0\t1\n2\t0\t0\n", encoding="utf-8")
        code = main(["correlate", "--judgments-a", str(judgments),
                     "--judgments-b", str(judgments)])
        assert code == 0
        assert capsys.readouterr().out.strip() == "1.000000"

    def test_universe_mismatch_is_data_error(self, tmp_path):
        a = tmp_path / "a.tsv"
        b = tmp_path / "b.tsv"
        a.write_text("1\t0\t1\n", encoding="utf-8")
        b.write_text("2\t0\t1\n", encoding="utf-8")
        assert main(["correlate", "--judgments-a", str(a), "--judgments-b", str(b)]) == 2


class TestSweep:
    def test_two_threshold_csv(self, tmp_path, capsys):
        corpus = tmp_path / "c.tsv"
        corpus.write_text("1\t和友人吃饭\t和友人吃饭\t和朋友吃饭\n", encoding="utf-8")
        store = tmp_path / "store.jsonl"
        rows = [
            {"text": "和友人吃饭", "vector": [1.0, 0.0]},
            {"text": "和朋友吃饭", "vector": [0.93, 0.368]},
        ]
        store.write_text("\n".join(json.dumps(r, ensure_ascii=False) for r in rows) + "\n",
                         encoding="utf-8")
        reference = tmp_path / "ref.tsv"
        reference.write_text("1\t0\t1\n", encoding="utf-8")
        csv_path = tmp_path / "sweep.csv"
        out_path = tmp_path / "sweep.json"
        code = main(["sweep", "--corpus", str(corpus), "--store", str(store),
                     "--thresholds", "0.90,0.96", "--reference", str(reference),
                     "--csv", str(csv_path), "--out", str(out_path)])
        assert code == 0
        lines = csv_path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "threshold,jaccard"
        assert len(lines) == 3  # header + one row per threshold
        payload = json.loads(out_path.read_text(encoding="utf-8"))
        assert payload["correlation"]["peak_threshold"] == 0.9
        assert "peak_threshold" in capsys.readouterr().out


class TestAnnotate:
    def test_emit_ingest_cycle(self, corpus_path, lexicon_path, tmp_path):
        template = tmp_path / "template.txt"
        code = main(["annotate", "emit", "--corpus", str(corpus_path),
                     "--lexicon", str(lexicon_path), "--out", str(template)])
        assert code == 0
        # untouched template: every op unannotated
        judgments_out = tmp_path / "j.tsv"
        code = main(["annotate", "ingest", "--corpus", str(corpus_path),
                     "--lexicon", str(lexicon_path),
                     "--template", str(template), "--out", str(judgments_out)])
        assert code == 2
        filled = template.read_text(encoding="utf-8").replace(
            "正确的修改编号：", "正确的修改编号：1"
        )
        template.write_text(filled, encoding="utf-8")
        code = main(["annotate", "ingest", "--corpus", str(corpus_path),
                     "--lexicon", str(lexicon_path),
                     "--template", str(template), "--out", str(judgments_out)])
        assert code == 0
        lines = judgments_out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 3

        # the produced judgment file drives the human judge end to end
        out = tmp_path / "human_out"
        code = main(
            evaluate_args(corpus_path, lexicon_path, out,
                          "--metric", "gcsc", "--judge", "human",
                          "--judgments", str(judgments_out))
        )
        assert code == 0
        report = json.loads((out / "eval_gcsc.json").read_text(encoding="utf-8"))
        assert report["counts"]["ops_correct"] == 3


class TestDumpOps:
    def test_dump_round_trips(self, corpus_path, lexicon_path, tmp_path):
        out = tmp_path / "ops.jsonl"
        code = main(["dump-ops", "--corpus", str(corpus_path),
                     "--lexicon", str(lexicon_path), "--out", str(out)])
        assert code == 0
        records = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
        assert len(records) == 3
        by_id = {r["sample_id"]: r for r in records}
        assert by_id["1"]["src_word"] == "友人"
        assert by_id["1"]["pred_word"] == "朋友"


def test_usage_error_exits_one():
    assert main(["evaluate"]) == 1  # --corpus missing


def test_unknown_command_exits_one():
    assert main(["frobnicate"]) == 1
