from __future__ import annotations

import math

import numpy as np
import pytest

from bpAssist.config import RetrievalConfig
from bpAssist.errors import (
    CorruptStore, DimensionMismatch, DuplicateId, EmptyText, NotNormalized, StoreNotFound,
)
from bpAssist.steps.store import HashingEmbedder, RetrievalStore, StoreEntry, cosine, is_normalized

from .conftest import FACT_SRC, FIX_SRC, STU_SRC, query_store


def entry(eid, vec, task="sum", passing=("sum_3",), validated=True, source="fun f() {}\n"):
    return StoreEntry.create(eid, task, source, vec, passing, validated)


def test_hashing_embedder_is_normalized_and_stable():
    emb = HashingEmbedder(256)
    a, b = emb.embed(STU_SRC), HashingEmbedder(256).embed(STU_SRC)
    assert a.shape == (256,)
    assert is_normalized(a)
    assert a.tobytes() == b.tobytes()


def test_similar_programs_score_higher():
    emb = HashingEmbedder()
    stu, fix, fact = emb.embed(STU_SRC), emb.embed(FIX_SRC), emb.embed(FACT_SRC)
    assert cosine(stu, fix) > cosine(stu, fact)


def test_embedder_handles_unlexable_text():
    vec = HashingEmbedder(64).embed("weird @ text # here")
    assert is_normalized(vec)


def test_embed_empty_text():
    with pytest.raises(EmptyText):
        HashingEmbedder().embed("   // only a comment\n")


def test_cosine_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        cosine(np.ones(2), np.ones(3))


def test_put_rejects_bad_entries():
    store = RetrievalStore(dimension=2)
    store.put(entry("e1", (1.0, 0.0)))
    with pytest.raises(DuplicateId):
        store.put(entry("e1", (0.0, 1.0)))
    with pytest.raises(NotNormalized):
        store.put(entry("e2", (1.0, 1.0)))
    with pytest.raises(DimensionMismatch):
        store.put(entry("e3", (1.0, 0.0, 0.0)))
    assert len(store) == 1


def test_threshold_is_inclusive():
    store = RetrievalStore(dimension=2)
    store.put(entry("e1", (1.0, 0.0)))
    cfg = RetrievalConfig(similarity_threshold=0.8, dimension=2)
    hit = query_store(store, "sum", "sum_3", np.array([0.8, 0.6]), cfg)
    assert hit is not None and hit.entry.entry_id == "e1"
    assert hit.similarity == pytest.approx(0.8)
    below = np.array([0.79, math.sqrt(1 - 0.79 ** 2)])
    assert query_store(store, "sum", "sum_3", below, cfg) is None


def test_query_filters_task_test_and_validation():
    store = RetrievalStore(dimension=2)
    store.put(entry("other-task", (1.0, 0.0), task="fact"))
    store.put(entry("other-test", (1.0, 0.0), passing=("sum_1",)))
    store.put(entry("unvalidated", (1.0, 0.0), validated=False))
    cfg = RetrievalConfig(similarity_threshold=0.5, dimension=2)
    assert query_store(store, "sum", "sum_3", np.array([1.0, 0.0]), cfg) is None
    store.put(entry("good", (0.6, 0.8)))
    assert query_store(store, "sum", "sum_3", np.array([1.0, 0.0]), cfg).entry.entry_id == "good"


def test_ties_go_to_the_smallest_id():
    store = RetrievalStore(dimension=2)
    store.put(entry("b", (1.0, 0.0)))
    store.put(entry("a", (1.0, 0.0)))
    hit = query_store(store, "sum", "sum_3", np.array([1.0, 0.0]), RetrievalConfig(dimension=2))
    assert hit.entry.entry_id == "a"


def test_every_hit_is_sound_over_a_mixed_store():
    rng = np.random.default_rng(7)

    def unit():
        v = rng.normal(size=8)
        return v / np.linalg.norm(v)

    store = RetrievalStore(dimension=8)
    subsets = [(), ("sum_3",), ("fact_4",), ("sum_3", "fact_4")]
    for i in range(40):
        store.put(entry(f"e{i:02d}", unit(), task=str(rng.choice(["sum", "fact"])),
                        passing=subsets[rng.integers(4)], validated=bool(rng.integers(2))))
    cfg = RetrievalConfig(similarity_threshold=0.3, dimension=8)
    hits = 0
    for _ in range(50):
        q = unit()
        for task in ("sum", "fact"):
            for test_id in ("sum_3", "fact_4"):
                hits += query_store(store, task, test_id, q, cfg) is not None
    assert hits > 0


def test_save_and_load(tmp_path):
    path = tmp_path / "store.jsonl"
    store = RetrievalStore(dimension=2, path=path)
    store.put(entry("e1", (1.0, 0.0), source="fun sum(n) {\n  return n;\n}\n"))
    store.put(entry("e2", (0.0, 1.0), validated=False))
    store.save()
    loaded = RetrievalStore.load(path, dimension=2)
    assert sorted(e.entry_id for e in loaded.entries) == ["e1", "e2"]
    assert loaded.get("e1") == store.get("e1")
    assert loaded.dumps() == store.dumps()


def test_load_missing_store(tmp_path):
    with pytest.raises(StoreNotFound):
        RetrievalStore.load(tmp_path / "absent.jsonl")
    assert len(RetrievalStore.load(tmp_path / "absent.jsonl", create=True)) == 0


def test_corrupt_record_reports_line(tmp_path):
    good = RetrievalStore(dimension=2)
    good.put(entry("e1", (1.0, 0.0)))
    path = tmp_path / "store.jsonl"
    path.write_text(good.dumps() + "{broken\n")
    with pytest.raises(CorruptStore, match="record 2"):
        RetrievalStore.load(path, dimension=2)


def test_load_checks_configured_dimension(tmp_path):
    store = RetrievalStore(dimension=2, path=tmp_path / "s.jsonl")
    store.put(entry("e1", (1.0, 0.0)))
    store.save()
    with pytest.raises(DimensionMismatch):
        RetrievalStore.load(tmp_path / "s.jsonl", dimension=256)


def test_stats():
    store = RetrievalStore(dimension=2)
    assert list(store.stats().columns) == ["task_id", "validated", "unvalidated", "total"]
    store.put(entry("a", (1.0, 0.0)))
    store.put(entry("b", (1.0, 0.0), validated=False))
    store.put(entry("c", (1.0, 0.0), task="fact"))
    table = store.stats()
    assert table.to_dict("records") == [
        {"task_id": "fact", "validated": 1, "unvalidated": 0, "total": 1},
        {"task_id": "sum", "validated": 1, "unvalidated": 1, "total": 2},
    ]
