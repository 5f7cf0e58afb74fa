"""
Step: repair

Inputs:
  student source, failed TestCase, task id, providers, RetrievalStore,
  RepairConfig.

Outputs:
  RepairOutcome   either a retrieved validated solution or the best of
                  ``n_candidates`` generated ones, with the candidate ledger.
  UploadReport    after ``validate_and_upload``: how many candidates were
                  executed, how many were stored, and how often the
                  classifier's prediction disagreed with the real test run.

Flow:
  1. embed the canonical student program and query the store;
     a hit ends the request without any generator/classifier call.
  2. on a miss, ask the generator for n candidates in one request.
  3. parse each candidate; unparsable ones are predicted to fail and never
     reach the classifier.  The rest are classified concurrently.
  4. predicted passes are ranked by similarity to the student program.

Validation is a separate call so it can run after the answer has been
returned to the student.
"""

# ────────────────────────────── standard library ─────────────────────────────
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

# ──────────────────────────────── 3rd‑party ──────────────────────────────────
import numpy as np
from joblib import Parallel, delayed

# ──────────────────────────────── local ──────────────────────────────────────
from ..config import RepairConfig
from ..errors import (
    AllCandidatesRejected, BpAssistError, EmptyText, ProviderError, RepairError,
    StudentAlreadyPasses,
)
from ..minilang import (
    DEFAULT_STEP_LIMIT, Program, Suite, TestCase, parse, pretty_print, run_suite, run_test,
)
from .providers import ClassifierProvider, EmbeddingProvider, GeneratorProvider
from .store import HashingEmbedder, RetrievalStore, StoreEntry, cosine

log = logging.getLogger(__name__)


class RepairSource(str, Enum):
    RETRIEVED = "retrieved"
    GENERATED = "generated"


@dataclass(frozen=True)
class CandidateRow:
    index: int
    source_text: str
    predicted_pass: bool
    similarity: float = 0.0
    parsed: bool = True

    def to_json(self) -> Dict[str, Any]:
        prog = _canonical(self.source_text) if self.parsed else None
        return {
            "index": self.index,
            "predicted_pass": self.predicted_pass,
            "similarity": round(self.similarity, 6),
            "parsed": self.parsed,
            # unparsable candidates keep the generator's raw text
            "source_text": self.source_text if prog is None else pretty_print(prog),
        }


@dataclass(frozen=True)
class RepairOutcome:
    source: RepairSource
    fixed_source: str
    task_id: str
    failed_test_id: str
    entry_id: Optional[str] = None
    similarity: Optional[float] = None
    candidates: Tuple[CandidateRow, ...] = ()
    llm_calls: int = 0
    selected_index: Optional[int] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "source": self.source.value,
            "task_id": self.task_id,
            "failed_test_id": self.failed_test_id,
            "entry_id": self.entry_id,
            "similarity": None if self.similarity is None else round(self.similarity, 6),
            "llm_calls": self.llm_calls,
            "selected_index": self.selected_index,
            "candidates": [c.to_json() for c in self.candidates],
            "fixed_source": self.fixed_source,
        }


@dataclass
class Providers:
    embedder: EmbeddingProvider = field(default_factory=HashingEmbedder)
    generator: Optional[GeneratorProvider] = None
    classifier: Optional[ClassifierProvider] = None


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                ranking                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
def rank_candidates(ledger: Sequence[CandidateRow],
                    student_embedding: Optional[np.ndarray] = None,
                    embedder: Optional[EmbeddingProvider] = None) -> List[CandidateRow]:
    """
    Predicted passes first, most similar to the student first, ties by ledger
    index; predicted failures keep their order at the tail.  With an embedding
    and an embedder the similarities are recomputed before sorting.
    """
    rows = list(ledger)
    if student_embedding is not None and embedder is not None:
        rows = [replace(r, similarity=_similarity(embedder, r.source_text, student_embedding))
                if r.parsed else r for r in rows]
    passing = sorted((r for r in rows if r.predicted_pass), key=lambda r: (-r.similarity, r.index))
    failing = sorted((r for r in rows if not r.predicted_pass), key=lambda r: r.index)
    return passing + failing


def _similarity(embedder: EmbeddingProvider, text: str, q: np.ndarray) -> float:
    try:
        return cosine(embedder.embed(text), q)
    except EmptyText:
        return 0.0


def _canonical(source: str) -> Optional[Program]:
    try:
        return parse(source)
    except BpAssistError:
        return None


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                 repair                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
def repair(student_source: str, failed_test: TestCase, task_id: str, providers: Providers,
           store: RetrievalStore, cfg: RepairConfig = RepairConfig(), *,
           task_description: str = "", reference_source: Optional[str] = None,
           step_limit: int = DEFAULT_STEP_LIMIT, n_jobs: Optional[int] = None) -> RepairOutcome:
    student = parse(student_source)
    if run_test(student, failed_test, step_limit).passed:
        raise StudentAlreadyPasses(f"student program already passes '{failed_test.id}'")
    canonical = pretty_print(student)
    q = providers.embedder.embed(canonical)

    hit = store.query(task_id, failed_test.id, q, cfg.retrieval)
    if hit is not None:
        return RepairOutcome(RepairSource.RETRIEVED, hit.entry.source_text, task_id,
                             failed_test.id, entry_id=hit.entry.entry_id,
                             similarity=hit.similarity)

    if providers.generator is None or providers.classifier is None:
        raise RepairError(
            "no stored solution matched and no provider is configured; "
            "pass --mock <fixture> or set BPA_PROVIDER_URL")

    n = cfg.n_candidates
    texts = providers.generator.generate(task_description, student_source, failed_test, n,
                                         reference_source)
    if len(texts) != n:
        raise ProviderError(f"generator returned {len(texts)} candidate(s), expected {n}")
    programs = [_canonical(t) for t in texts]
    to_classify = [i for i, prog in enumerate(programs) if prog is not None]

    # ledger slots are indexed by request position, not completion order
    predictions = Parallel(n_jobs=n_jobs or len(to_classify) or 1, prefer="threads")(
        delayed(providers.classifier.predict_pass)(texts[i], failed_test) for i in to_classify
    )
    predicted = dict(zip(to_classify, predictions))

    ledger = []
    for i, (text, prog) in enumerate(zip(texts, programs)):
        if prog is None:
            ledger.append(CandidateRow(i, text, False, 0.0, parsed=False))
            continue
        sim = _similarity(providers.embedder, pretty_print(prog), q)
        ledger.append(CandidateRow(i, text, bool(predicted[i]), sim))
    llm_calls = 1 + len(to_classify)

    ranked = rank_candidates(ledger)
    chosen = ranked[0] if ranked and ranked[0].predicted_pass else None
    if chosen is None and cfg.fallback_execute:
        for row in ledger:
            prog = programs[row.index]
            if prog is not None and run_test(prog, failed_test, step_limit).passed:
                log.warning("classifier rejected every candidate; candidate %d passes on execution",
                            row.index)
                chosen = row
                break
    if chosen is None:
        raise AllCandidatesRejected(
            f"none of the {n} generated candidates is predicted to pass '{failed_test.id}'")

    log.info("generated fix: candidate %d (similarity %.3f), %d provider call(s)",
             chosen.index, chosen.similarity, llm_calls)
    return RepairOutcome(RepairSource.GENERATED, chosen.source_text, task_id, failed_test.id,
                         similarity=chosen.similarity, candidates=tuple(ledger),
                         llm_calls=llm_calls, selected_index=chosen.index)


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                          validation and upload                           │
# ╰──────────────────────────────────────────────────────────────────────────╯
@dataclass(frozen=True)
class VerdictRow:
    task_id: str
    failed_test_id: str
    candidate_index: int
    predicted_pass: bool
    actual_pass: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "task_id": self.task_id,
            "failed_test_id": self.failed_test_id,
            "candidate_index": self.candidate_index,
            "predicted_pass": self.predicted_pass,
            "actual_pass": self.actual_pass,
        }


@dataclass(frozen=True)
class UploadReport:
    executed: int = 0
    uploaded: int = 0
    classifier_errors: int = 0
    rows: Tuple[VerdictRow, ...] = ()
    entry_ids: Tuple[str, ...] = ()

    def to_json(self) -> Dict[str, Any]:
        return {
            "executed": self.executed,
            "uploaded": self.uploaded,
            "classifier_errors": self.classifier_errors,
            "entry_ids": list(self.entry_ids),
        }


def entry_id_for(task_id: str, canonical_source: str) -> str:
    return f"{task_id}-{hashlib.sha256(canonical_source.encode('utf-8')).hexdigest()[:12]}"


def validate_and_upload(outcome: RepairOutcome, suite: Suite, store: RetrievalStore,
                        task_id: str, embedder: Optional[EmbeddingProvider] = None,
                        step_limit: int = DEFAULT_STEP_LIMIT) -> UploadReport:
    if outcome.source is RepairSource.RETRIEVED:
        return UploadReport()
    embedder = embedder or HashingEmbedder(store.dimension)
    executed = uploaded = errors = 0
    rows: List[VerdictRow] = []
    ids: List[str] = []
    for cand in outcome.candidates:
        executed += 1
        prog = _canonical(cand.source_text)
        if prog is None:
            continue
        verdicts = run_suite(prog, suite, step_limit)
        passing = [v.test_id for v in verdicts if v.passed]
        actual = outcome.failed_test_id in passing
        rows.append(VerdictRow(task_id, outcome.failed_test_id, cand.index,
                               cand.predicted_pass, actual))
        if cand.predicted_pass != actual:
            errors += 1
            log.warning("classifier predicted %s for candidate %d, execution says %s",
                        cand.predicted_pass, cand.index, actual)
        if not actual:
            continue
        canonical = pretty_print(prog)
        eid = entry_id_for(task_id, canonical)
        if eid in store:
            log.info("candidate %d already stored as %s", cand.index, eid)
            continue
        store.put(StoreEntry.create(eid, task_id, canonical, embedder.embed(canonical),
                                    passing, validated=True))
        uploaded += 1
        ids.append(eid)
    log.info("validated %d candidate(s): %d uploaded, %d classifier error(s)",
             executed, uploaded, errors)
    return UploadReport(executed, uploaded, errors, tuple(rows), tuple(ids))
