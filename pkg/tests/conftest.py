from __future__ import annotations

from pathlib import Path

import pytest

from bpAssist.config import RetrievalConfig
from bpAssist.minilang import Suite, TestCase, parse
from bpAssist.steps.store import cosine

CORPUS = Path(__file__).resolve().parents[1] / "bpAssist" / "corpus"

STU_SRC = """\
fun sum(n) {
  let s = 0;
  let i = 1;
  while (i < n) {
    s = s + i;
    i = i + 1;
  }
  return s;
}
"""

FIX_SRC = STU_SRC.replace("while (i < n)", "while (i <= n)")

FACT_SRC = """\
fun fact(n) {
  let r = 1;
  for (k in 1..n) {
    r = r * k;
  }
  return r;
}
"""


@pytest.fixture
def stu_src() -> str:
    return STU_SRC


@pytest.fixture
def fix_src() -> str:
    return FIX_SRC


@pytest.fixture
def stu():
    return parse(STU_SRC)


@pytest.fixture
def fix():
    return parse(FIX_SRC)


@pytest.fixture
def sum_3() -> TestCase:
    return TestCase("sum_3", "sum", (3,), 6)


@pytest.fixture
def sum_suite() -> Suite:
    return Suite("sum", (
        TestCase("sum_3", "sum", (3,), 6),
        TestCase("sum_1", "sum", (1,), 1),
        TestCase("sum_0", "sum", (0,), 0),
    ))


@pytest.fixture
def corpus_dir() -> Path:
    return CORPUS


def corpus_pairs():
    return sorted(p for p in CORPUS.iterdir() if p.is_dir())


def assert_sound_hit(store, entry_id, similarity, task_id, test_id, q, threshold):
    """A retrieval answer names a validated entry of the task that passes the test."""
    e = store.get(entry_id)
    assert e is not None
    assert e.task_id == task_id
    assert e.validated
    assert test_id in e.passing_test_ids
    assert similarity >= threshold
    assert similarity == pytest.approx(cosine(q, e.vector), abs=1e-6)


def query_store(store, task_id, test_id, q, cfg=RetrievalConfig()):
    hit = store.query(task_id, test_id, q, cfg)
    if hit is not None:
        assert_sound_hit(store, hit.entry.entry_id, hit.similarity, task_id, test_id, q,
                         cfg.similarity_threshold)
    return hit
