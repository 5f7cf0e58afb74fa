from __future__ import annotations

import json
import shutil

import pandas as pd
import pytest

from bpAssist.errors import CorpusError
from bpAssist.steps.evaluation import (
    PairResult, aggregate, check_pair, classifier_metrics, classifier_report, eval_breakpoints,
    evaluate_pair, f1_consistent, load_corpus, load_pair, load_verdict_rows, main,
    metrics_from_counts, set_metrics, write_artifacts,
)
from bpAssist.steps.recommender import BreakpointPlan

from .conftest import CORPUS


def test_metrics_from_counts():
    m = metrics_from_counts(63, 7, 27)
    assert m.precision == pytest.approx(0.9)
    assert m.recall == pytest.approx(0.7)
    assert m.f1 == pytest.approx(0.7875)


def test_degenerate_counts():
    assert metrics_from_counts(0, 0, 0).f1 == 1.0
    empty_prediction = metrics_from_counts(0, 0, 4)
    assert (empty_prediction.precision, empty_prediction.recall, empty_prediction.f1) == (0.0, 0.0, 0.0)


def test_set_metrics():
    m = set_metrics([4, 3, 5], [3, 4, 8])
    assert (m.tp, m.fp, m.fn) == (2, 1, 1)


def test_classifier_metrics():
    rows = [(True, True), (True, False), (False, True), (False, False)]
    m = classifier_metrics(rows)
    assert (m.tp, m.fp, m.fn) == (1, 1, 1)
    assert m.precision == pytest.approx(0.5)
    assert classifier_metrics([]).f1 == 1.0


def test_f1_consistency_of_rounded_triples():
    assert f1_consistent(0.70, 0.87, 0.78)
    assert f1_consistent(0.68, 0.88, 0.76)
    assert f1_consistent(0.9, 0.7, 0.79)
    assert not f1_consistent(0.9, 0.7, 0.85)
    assert round(metrics_from_counts(63, 7, 27).f1, 2) == 0.79


def test_micro_and_macro_differ():
    perfect = PairResult("a", BreakpointPlan("t", "x"), (1, 2, 3), set_metrics([1, 2, 3], [1, 2, 3]))
    empty = PairResult("b", BreakpointPlan("t", "y"), (1, 2), set_metrics([], [1, 2]))
    micro, macro = aggregate([perfect, empty])
    assert (micro.precision, micro.recall) == pytest.approx((1.0, 0.6))
    assert micro.f1 == pytest.approx(0.75)
    assert (macro.precision, macro.recall, macro.f1) == pytest.approx((0.5, 0.5, 0.5))


def test_missing_gold_file(tmp_path):
    shutil.copytree(CORPUS / "pair-01", tmp_path / "pair-07")
    (tmp_path / "pair-07" / "gold_breakpoints.json").unlink()
    with pytest.raises(CorpusError, match="pair-07: gold_breakpoints.json not found"):
        load_corpus(tmp_path)


def test_unknown_failed_test(tmp_path):
    shutil.copytree(CORPUS / "pair-01", tmp_path / "pair-01")
    (tmp_path / "pair-01" / "failed_test.txt").write_text("sum_99\n")
    with pytest.raises(CorpusError, match="sum_99"):
        load_pair(tmp_path / "pair-01")


def test_validity_gate_rejects_passing_student(tmp_path):
    shutil.copytree(CORPUS / "pair-01", tmp_path / "pair-01")
    shutil.copy(CORPUS / "pair-01" / "fixed.ml", tmp_path / "pair-01" / "student.ml")
    with pytest.raises(CorpusError, match="already passes"):
        check_pair(load_pair(tmp_path / "pair-01"))


def test_bundled_corpus_is_valid():
    pairs = load_corpus(CORPUS)
    assert len(pairs) >= 20
    for pair in pairs:
        check_pair(pair)


def test_spot_checked_pairs():
    by_id = {p.pair_id: p for p in load_corpus(CORPUS)}
    expected = {
        "pair-01": (5, 0, 0),
        "pair-02": (3, 0, 1),
        "pair-03": (2, 1, 0),
    }
    for pair_id, counts in expected.items():
        m = evaluate_pair(by_id[pair_id]).metrics
        assert (m.tp, m.fp, m.fn) == counts, pair_id
    assert evaluate_pair(by_id["pair-02"]).metrics.f1 == pytest.approx(6 / 7)
    assert evaluate_pair(by_id["pair-03"]).metrics.f1 == pytest.approx(0.8)


def test_eval_breakpoints_report():
    report = eval_breakpoints(CORPUS)
    doc = report.to_json()
    assert set(doc) == {"pairs", "micro", "macro"}
    assert [r["pair_id"] for r in doc["pairs"]] == sorted(r["pair_id"] for r in doc["pairs"])
    assert isinstance(report.per_pair, pd.DataFrame)
    assert len(report.per_pair) == len(report.results)
    assert report.dumps() == eval_breakpoints(CORPUS, n_jobs=2).dumps()


BUNDLED_COUNTS = {
    "pair-01": (5, 0, 0), "pair-02": (3, 0, 1), "pair-03": (2, 1, 0), "pair-04": (3, 0, 0),
    "pair-05": (1, 0, 1), "pair-06": (5, 0, 0), "pair-07": (1, 1, 1), "pair-08": (3, 1, 0),
    "pair-09": (3, 1, 0), "pair-10": (3, 1, 0), "pair-11": (3, 1, 0), "pair-12": (3, 0, 0),
    "pair-13": (3, 1, 1), "pair-14": (2, 1, 2), "pair-15": (2, 2, 2), "pair-16": (2, 1, 0),
    "pair-17": (2, 0, 1), "pair-18": (2, 2, 1), "pair-19": (2, 2, 1), "pair-20": (2, 1, 1),
}


def test_bundled_corpus_scores():
    report = eval_breakpoints(CORPUS)
    assert {r.pair_id: (r.metrics.tp, r.metrics.fp, r.metrics.fn) for r in report.results} == BUNDLED_COUNTS

    micro = report.micro.to_json()
    assert (micro["tp"], micro["fp"], micro["fn"]) == (52, 16, 12)
    assert micro["precision"] == pytest.approx(52 / 68)
    assert micro["recall"] == pytest.approx(52 / 64)
    assert micro["f1"] == pytest.approx(26 / 33)

    macro = report.macro.to_json()
    assert (macro["tp"], macro["fp"], macro["fn"]) == (52, 16, 12)
    assert macro["precision"] == pytest.approx(37 / 48)
    assert macro["recall"] == pytest.approx(97 / 120)
    assert macro["f1"] == pytest.approx(3589 / 4548)


def test_write_artifacts(tmp_path):
    report = eval_breakpoints(CORPUS)
    out = write_artifacts(report, tmp_path / "01_plans", tmp_path / "02_metrics", tmp_path / "report.json")
    assert json.loads(out.read_text())["micro"] == report.micro.to_json()
    assert (tmp_path / "01_plans" / "pair-01.json").is_file()
    table = pd.read_csv(tmp_path / "02_metrics" / "per_pair.tsv", sep="\t")
    assert list(table["pair_id"]) == [r.pair_id for r in report.results]


def test_verdict_rows(tmp_path):
    path = tmp_path / "verdicts.jsonl"
    path.write_text('{"predicted_pass": true, "actual_pass": true}\n\n'
                    '{"predicted_pass": true, "actual_pass": false}\n')
    rows = load_verdict_rows(path)
    assert rows == [(True, True), (True, False)]
    report = classifier_report(rows, name="scripted")
    assert report["precision"] == 0.5 and report["recall"] == 1.0
    path.write_text('{"predicted_pass": true}\n')
    with pytest.raises(CorpusError, match="row 1"):
        load_verdict_rows(path)


def test_script_entry_point(tmp_path):
    main(["--corpus", str(CORPUS), "--output_dir", str(tmp_path), "--log_level", "WARNING"])
    assert (tmp_path / "report.json").is_file()
    assert (tmp_path / "02_metrics" / "per_pair.tsv").is_file()


def test_script_entry_point_exits_on_bad_corpus(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["--corpus", str(tmp_path / "nowhere"), "--output_dir", str(tmp_path)])
    assert exc.value.code == 1
