#!/usr/bin/env python
"""
Script: evaluation

Inputs:
  --corpus         Corpus directory; one sub-directory per pair holding
                   student.ml, fixed.ml, tests.json, failed_test.txt and
                   gold_breakpoints.json ({"lines": [int]}).
  --output_dir     Directory in which to write outputs (created if missing).
  --max_breakpoints  Plan size cap (default 10).
  --no_h1_exit     Drop the after-construct line from the conditional heuristic.
  --n_jobs         Pairs evaluated concurrently (default 1).
  --log_level      Logging verbosity level (choices: DEBUG, INFO, WARNING, ERROR). Default: INFO.

Outputs:
  01_plans/<pair>.json        breakpoint plan recommended for every pair.
  02_metrics/per_pair.tsv     tp / fp / fn / precision / recall / f1 per pair.
  report.json                 per-pair rows plus micro and macro averages.

Instructions of Use:
  Every pair is run through the recommender with its bundled fixed program
  (no repair step).  Predicted lines are compared with the gold lines of the
  student program.  Micro averages pool tp/fp/fn over all pairs; macro
  averages take the mean precision and recall per pair and derive F1 from
  those two means.

  Classifier accuracy is measured separately from (predicted_pass,
  actual_pass) rows, one JSON object per line, as written by
  ``bpAssist repair --validate --verdicts-out``.

Usage Example:
  python -m bpAssist.steps.evaluation \
    --corpus bpAssist/corpus \
    --output_dir results/ \
    --log_level INFO
"""

# ────────────────────────────── standard library ─────────────────────────────
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

# ──────────────────────────────── 3rd‑party ──────────────────────────────────
import pandas as pd
from joblib import Parallel, delayed
from sklearn.metrics import confusion_matrix

# ──────────────────────────────── local ──────────────────────────────────────
from ..config import RecommenderConfig
from ..errors import BpAssistError, CorpusError
from ..minilang import Program, Suite, load_suite, parse, run_test
from .recommender import BreakpointPlan, recommend

log = logging.getLogger(__name__)

PAIR_FILES = ("student.ml", "fixed.ml", "tests.json", "failed_test.txt", "gold_breakpoints.json")


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                metrics                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def to_json(self) -> Dict[str, Any]:
        return asdict(self)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def metrics_from_counts(tp: int, fp: int, fn: int) -> Metrics:
    """Precision/recall with an empty denominator are 1.0 when nothing was
    expected and nothing predicted, 0.0 otherwise."""
    nothing = tp + fp == 0 and tp + fn == 0
    precision = tp / (tp + fp) if tp + fp else (1.0 if nothing else 0.0)
    recall = tp / (tp + fn) if tp + fn else (1.0 if nothing else 0.0)
    return Metrics(precision, recall, f1_score(precision, recall), tp, fp, fn)


def set_metrics(predicted: Iterable[int], gold: Iterable[int]) -> Metrics:
    predicted, gold = set(predicted), set(gold)
    return metrics_from_counts(len(predicted & gold), len(predicted - gold), len(gold - predicted))


def classifier_metrics(rows: Sequence[Tuple[bool, bool]]) -> Metrics:
    """``rows`` are (predicted_pass, actual_pass); "predicted pass" is the positive class."""
    if not rows:
        return metrics_from_counts(0, 0, 0)
    predicted = [bool(p) for p, _ in rows]
    actual = [bool(a) for _, a in rows]
    tn, fp, fn, tp = confusion_matrix(actual, predicted, labels=[False, True]).ravel()
    return metrics_from_counts(int(tp), int(fp), int(fn))


def f1_consistent(precision: float, recall: float, f1: float, ndigits: int = 2) -> bool:
    """
    Whether a published (P, R, F1) triple, each rounded to ``ndigits``, can
    come from one unrounded (P, R) pair.  F1 grows with both arguments, so the
    reachable F1 values form an interval bounded by the corners of the
    rounding box.
    """
    half = 0.5 * 10 ** -ndigits
    lo = f1_score(max(precision - half, 0.0), max(recall - half, 0.0))
    hi = f1_score(min(precision + half, 1.0), min(recall + half, 1.0))
    return lo <= f1 + half and f1 - half <= hi


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                 corpus                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
@dataclass(frozen=True)
class CorpusPair:
    pair_id: str
    student_source: str
    fixed_source: str
    suite: Suite
    failed_test_id: str
    gold: Tuple[int, ...]

    def programs(self) -> Tuple[Program, Program]:
        try:
            return parse(self.student_source), parse(self.fixed_source)
        except BpAssistError as exc:
            raise CorpusError(f"{self.pair_id}: {exc.prefix}: {exc}") from None


def load_pair(pair_dir: Path) -> CorpusPair:
    pair_id = pair_dir.name
    for name in PAIR_FILES:
        if not (pair_dir / name).is_file():
            raise CorpusError(f"{pair_id}: {name} not found")
    try:
        suite = load_suite(pair_dir / "tests.json")
        gold_doc = json.loads((pair_dir / "gold_breakpoints.json").read_text(encoding="utf-8"))
        gold = tuple(sorted({int(l) for l in gold_doc["lines"]}))
    except BpAssistError as exc:
        raise CorpusError(f"{pair_id}: {exc}") from None
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorpusError(f"{pair_id}: gold_breakpoints.json is malformed ({exc})") from None
    failed = (pair_dir / "failed_test.txt").read_text(encoding="utf-8").strip()
    try:
        suite.get(failed)
    except BpAssistError:
        raise CorpusError(f"{pair_id}: failed test '{failed}' is not in tests.json") from None
    return CorpusPair(
        pair_id=pair_id,
        student_source=(pair_dir / "student.ml").read_text(encoding="utf-8"),
        fixed_source=(pair_dir / "fixed.ml").read_text(encoding="utf-8"),
        suite=suite,
        failed_test_id=failed,
        gold=gold,
    )


def load_corpus(corpus_path: Path) -> List[CorpusPair]:
    corpus_path = Path(corpus_path)
    if not corpus_path.is_dir():
        raise CorpusError(f"{corpus_path}: corpus directory not found")
    pairs = [load_pair(d) for d in sorted(corpus_path.iterdir()) if d.is_dir()]
    if not pairs:
        raise CorpusError(f"{corpus_path}: no pairs found")
    return pairs


def check_pair(pair: CorpusPair) -> None:
    """The fixed program passes the designated test and the student program fails it."""
    student, fixed = pair.programs()
    test = pair.suite.get(pair.failed_test_id)
    if not run_test(fixed, test).passed:
        raise CorpusError(f"{pair.pair_id}: fixed.ml does not pass '{test.id}'")
    if run_test(student, test).passed:
        raise CorpusError(f"{pair.pair_id}: student.ml already passes '{test.id}'")
    nodes = set(student.statement_lines()) | {fn.header_line for fn in student.functions}
    stray = [l for l in pair.gold if l not in nodes]
    if stray:
        raise CorpusError(f"{pair.pair_id}: gold lines {stray} are not statement lines")


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                harness                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
@dataclass(frozen=True)
class PairResult:
    pair_id: str
    plan: BreakpointPlan
    gold: Tuple[int, ...]
    metrics: Metrics

    def to_row(self) -> Dict[str, Any]:
        return {
            "pair_id": self.pair_id,
            "predicted": " ".join(str(l) for l in sorted(self.plan.lines)),
            "gold": " ".join(str(l) for l in self.gold),
            **self.metrics.to_json(),
        }


@dataclass(frozen=True)
class BreakpointReport:
    results: Tuple[PairResult, ...]
    micro: Metrics
    macro: Metrics
    per_pair: pd.DataFrame = field(compare=False, repr=False, default=None)

    def to_json(self) -> Dict[str, Any]:
        return {
            "pairs": [r.to_row() for r in self.results],
            "micro": self.micro.to_json(),
            "macro": self.macro.to_json(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def evaluate_pair(pair: CorpusPair, cfg: RecommenderConfig = RecommenderConfig()) -> PairResult:
    check_pair(pair)
    student, fixed = pair.programs()
    test = pair.suite.get(pair.failed_test_id)
    try:
        plan = recommend(student, fixed, test, cfg, task_id=pair.suite.task_id)
    except BpAssistError as exc:
        raise CorpusError(f"{pair.pair_id}: {exc.prefix}: {exc}") from None
    metrics = set_metrics(plan.lines, pair.gold)
    log.info("%s: P %.3f R %.3f F1 %.3f", pair.pair_id, metrics.precision, metrics.recall, metrics.f1)
    return PairResult(pair.pair_id, plan, pair.gold, metrics)


def aggregate(results: Sequence[PairResult]) -> Tuple[Metrics, Metrics]:
    tp = sum(r.metrics.tp for r in results)
    fp = sum(r.metrics.fp for r in results)
    fn = sum(r.metrics.fn for r in results)
    micro = metrics_from_counts(tp, fp, fn)
    if not results:
        return micro, micro
    p = sum(r.metrics.precision for r in results) / len(results)
    r_ = sum(r.metrics.recall for r in results) / len(results)
    macro = Metrics(p, r_, f1_score(p, r_), tp, fp, fn)
    return micro, macro


def eval_breakpoints(corpus_path: Path, cfg: RecommenderConfig = RecommenderConfig(),
                     n_jobs: int = 1) -> BreakpointReport:
    pairs = load_corpus(corpus_path)
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(evaluate_pair)(pair, cfg) for pair in pairs
    )
    results = tuple(sorted(results, key=lambda r: r.pair_id))
    micro, macro = aggregate(results)
    df = pd.DataFrame([r.to_row() for r in results])
    log.info("micro F1 %.3f | macro F1 %.3f over %d pair(s)", micro.f1, macro.f1, len(results))
    return BreakpointReport(results, micro, macro, df)


def write_artifacts(report: BreakpointReport, plans_dir: Path, metrics_dir: Path,
                    report_path: Path) -> Path:
    plans_dir, metrics_dir, report_path = Path(plans_dir), Path(metrics_dir), Path(report_path)
    plans_dir.mkdir(parents=True, exist_ok=True)
    metrics_dir.mkdir(parents=True, exist_ok=True)
    for r in report.results:
        (plans_dir / f"{r.pair_id}.json").write_text(r.plan.dumps(), encoding="utf-8")
    report.per_pair.to_csv(metrics_dir / "per_pair.tsv", sep="\t", index=False)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(report.dumps(), encoding="utf-8")
    log.info("All outputs written to %s", report_path.parent)
    return report_path


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                           classifier verdicts                            │
# ╰──────────────────────────────────────────────────────────────────────────╯
def load_verdict_rows(path: Path) -> List[Tuple[bool, bool]]:
    rows: List[Tuple[bool, bool]] = []
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise CorpusError(f"{path}: {exc}") from None
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
            rows.append((bool(doc["predicted_pass"]), bool(doc["actual_pass"])))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise CorpusError(f"{path}: verdict row {lineno} is malformed ({exc})") from None
    return rows


def classifier_report(rows: Sequence[Tuple[bool, bool]], name: Optional[str] = None) -> Dict[str, Any]:
    m = classifier_metrics(rows)
    return {
        "classifier": name,
        "rows": len(rows),
        "precision": round(m.precision, 2),
        "recall": round(m.recall, 2),
        "f1": round(m.f1, 2),
        "counts": {"tp": m.tp, "fp": m.fp, "fn": m.fn},
    }


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                   CLI                                    │
# ╰──────────────────────────────────────────────────────────────────────────╯
def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    p = argparse.ArgumentParser("Breakpoint evaluation against gold labels")
    p.add_argument("--corpus", type=Path, required=True, help="corpus directory (one sub-directory per pair)")
    p.add_argument("--output_dir", type=Path, required=True, help="directory for outputs")
    p.add_argument("--max_breakpoints", type=int, default=10, help="plan size cap")
    p.add_argument("--no_h1_exit", action="store_true", help="omit the after-construct line in H1")
    p.add_argument("--n_jobs", type=int, default=1, help="pairs evaluated concurrently")
    p.add_argument("--log_level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return p.parse_args(argv)


def main(argv: Optional[Sequence[str]] = None) -> None:
    args = parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s | %(levelname)-8s | %(message)s",
        datefmt="%H:%M:%S",
    )
    try:
        cfg = RecommenderConfig(args.max_breakpoints, not args.no_h1_exit)
        report = eval_breakpoints(args.corpus, cfg, args.n_jobs)
        out = args.output_dir
        write_artifacts(report, out / "01_plans", out / "02_metrics", out / "report.json")
    except BpAssistError as exc:
        logging.error("%s: %s", exc.prefix, exc)
        sys.exit(1)


if __name__ == "__main__":
    main()
