"""
Step: store

The retrieval database behind the repair step: previously seen solutions,
embedded and tagged with the tests they were observed to pass.

Inputs:
  solution text, task id, passing test ids (from real execution).

Outputs:
  store file        newline-delimited JSON, one record per entry:
                    {"entry_id", "task_id", "source_text", "embedding",
                     "passing_test_ids", "validated"}
  StoreHit          best validated entry for (task, failed test) whose cosine
                    similarity to the query reaches the threshold.

The default embedder hashes token unigrams and bigrams into ``dimension``
buckets with a keyed BLAKE2b digest, so vectors are identical on every
platform and run.

Usage Example:
  store = RetrievalStore.load(Path("store.jsonl"), create=True)
  emb = HashingEmbedder(256)
  hit = store.query("sum", "sum_3", emb.embed(text), RetrievalConfig())
"""

# ────────────────────────────── standard library ─────────────────────────────
from __future__ import annotations

import hashlib
import json
import logging
import math
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

# ──────────────────────────────── 3rd‑party ──────────────────────────────────
import numpy as np
import pandas as pd

# ──────────────────────────────── local ──────────────────────────────────────
from ..config import RetrievalConfig
from ..errors import (
    CorruptStore, DimensionMismatch, DuplicateId, EmptyText, LexError,
    NotNormalized, StoreNotFound,
)
from ..minilang.lexer import tokenize

log = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-9
HASH_KEY = b"bpAssist-embed-v1"
FALLBACK_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                               embeddings                                 │
# ╰──────────────────────────────────────────────────────────────────────────╯
def l2_norm(vec: np.ndarray) -> float:
    return math.sqrt(math.fsum(float(x) * float(x) for x in vec))


def normalize(vec: np.ndarray) -> np.ndarray:
    norm = l2_norm(vec)
    if norm == 0.0:
        raise NotNormalized("cannot normalize a zero vector")
    return np.asarray(vec, dtype=np.float64) / norm


def is_normalized(vec: np.ndarray) -> bool:
    return abs(l2_norm(vec) - 1.0) <= NORM_TOLERANCE


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare dimension {a.size} with {b.size}")
    value = math.fsum((a * b).tolist())
    return max(-1.0, min(1.0, value))


def text_tokens(text: str) -> List[str]:
    """MiniLang lexemes when ``text`` lexes, otherwise a generic word split."""
    try:
        return [tok.lexeme for tok in tokenize(text)]
    except LexError:
        return FALLBACK_TOKEN_RE.findall(text)


def _bucket(feature: str, dimension: int) -> int:
    digest = hashlib.blake2b(feature.encode("utf-8"), digest_size=8, key=HASH_KEY).digest()
    return int.from_bytes(digest, "little") % dimension


class HashingEmbedder:
    """Feature-hashed unigram + bigram term frequencies, L2-normalized."""

    name = "hashing"

    def __init__(self, dimension: int = 256) -> None:
        self.dimension = dimension

    def embed(self, text: str) -> np.ndarray:
        tokens = text_tokens(text)
        if not tokens:
            raise EmptyText("cannot embed text without tokens")
        features = [f"u:{t}" for t in tokens]
        features += [f"b:{a} {b}" for a, b in zip(tokens, tokens[1:])]
        counts = np.zeros(self.dimension, dtype=np.float64)
        for feat in features:
            counts[_bucket(feat, self.dimension)] += 1.0
        return normalize(counts)

    def embed_many(self, texts: Sequence[str]) -> List[np.ndarray]:
        return [self.embed(t) for t in texts]


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                entries                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
@dataclass(frozen=True)
class StoreEntry:
    entry_id: str
    task_id: str
    source_text: str
    embedding: Tuple[float, ...]
    passing_test_ids: Tuple[str, ...] = ()
    validated: bool = False

    @classmethod
    def create(cls, entry_id: str, task_id: str, source_text: str, embedding: Iterable[float],
               passing_test_ids: Iterable[str] = (), validated: bool = False) -> "StoreEntry":
        return cls(entry_id, task_id, source_text, tuple(float(x) for x in embedding),
                   tuple(sorted(set(passing_test_ids))), validated)

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.embedding, dtype=np.float64)

    def to_json(self) -> Dict[str, Any]:
        return {
            "entry_id": self.entry_id,
            "task_id": self.task_id,
            "source_text": self.source_text,
            "embedding": list(self.embedding),
            "passing_test_ids": list(self.passing_test_ids),
            "validated": self.validated,
        }

    @classmethod
    def from_json(cls, doc: Dict[str, Any]) -> "StoreEntry":
        return cls.create(
            str(doc["entry_id"]), str(doc["task_id"]), str(doc["source_text"]),
            doc["embedding"], doc["passing_test_ids"], bool(doc["validated"]),
        )


@dataclass(frozen=True)
class StoreHit:
    entry: StoreEntry
    similarity: float


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                  store                                   │
# ╰──────────────────────────────────────────────────────────────────────────╯
class RetrievalStore:
    """
    In-memory entries plus JSONL persistence.

    Writers (``put``, ``save``) go through one lock; a put is visible to
    queries as a whole entry or not at all.
    """

    def __init__(self, dimension: int = 256, path: Optional[Path] = None) -> None:
        self.dimension = dimension
        self.path = path
        self._entries: Dict[str, StoreEntry] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._entries

    @property
    def entries(self) -> List[StoreEntry]:
        return list(self._entries.values())

    def get(self, entry_id: str) -> Optional[StoreEntry]:
        return self._entries.get(entry_id)

    def _check(self, e: StoreEntry) -> None:
        if len(e.embedding) != self.dimension:
            raise DimensionMismatch(
                f"entry '{e.entry_id}' has dimension {len(e.embedding)}, store uses {self.dimension}")
        if not is_normalized(e.vector):
            raise NotNormalized(f"entry '{e.entry_id}' embedding is not L2-normalized")

    def put(self, e: StoreEntry) -> None:
        self._check(e)
        with self._lock:
            if e.entry_id in self._entries:
                raise DuplicateId(f"entry '{e.entry_id}' already exists")
            entries = dict(self._entries)
            entries[e.entry_id] = e
            self._entries = entries
        log.info("stored entry %s (task %s, validated=%s)", e.entry_id, e.task_id, e.validated)

    def query(self, task_id: str, failed_test_id: str, q: np.ndarray,
              cfg: RetrievalConfig = RetrievalConfig()) -> Optional[StoreHit]:
        best: Optional[StoreHit] = None
        for e in sorted(self._entries.values(), key=lambda x: x.entry_id):
            if e.task_id != task_id or not e.validated or failed_test_id not in e.passing_test_ids:
                continue
            sim = cosine(q, e.vector)
            if best is None or sim > best.similarity:
                best = StoreHit(e, sim)
        if best is None or best.similarity < cfg.similarity_threshold:
            log.info("retrieval miss for %s/%s%s", task_id, failed_test_id,
                     "" if best is None else f" (best {best.similarity:.3f})")
            return None
        log.info("retrieval hit %s for %s/%s (similarity %.3f)",
                 best.entry.entry_id, task_id, failed_test_id, best.similarity)
        return best

    def stats(self) -> pd.DataFrame:
        """Validated / unvalidated entry counts per task."""
        rows = [{"task_id": e.task_id, "validated": e.validated} for e in self._entries.values()]
        if not rows:
            return pd.DataFrame(columns=["task_id", "validated", "unvalidated", "total"])
        df = pd.DataFrame(rows)
        out = df.groupby("task_id")["validated"].agg(["sum", "count"]).reset_index()
        out.columns = ["task_id", "validated", "total"]
        out["validated"] = out["validated"].astype(int)
        out["unvalidated"] = out["total"] - out["validated"]
        return out[["task_id", "validated", "unvalidated", "total"]].sort_values("task_id",
                                                                                   ignore_index=True)

    # ------------------------------------------------------------ persistence
    def dumps(self) -> str:
        return "".join(json.dumps(e.to_json(), ensure_ascii=False) + "\n"
                       for e in self._entries.values())

    def save(self, path: Optional[Path] = None) -> Path:
        target = Path(path or self.path or "")
        if not str(target):
            raise StoreNotFound("no store path given")
        with self._lock:
            target.parent.mkdir(parents=True, exist_ok=True)
            tmp = target.with_name(target.name + ".tmp")
            tmp.write_text(self.dumps(), encoding="utf-8")
            tmp.replace(target)
        log.info("saved %d entr%s to %s", len(self), "y" if len(self) == 1 else "ies", target)
        return target

    @classmethod
    def loads(cls, text: str, dimension: int = 256, path: Optional[Path] = None) -> "RetrievalStore":
        store = cls(dimension, path)
        for lineno, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            try:
                entry = StoreEntry.from_json(json.loads(raw))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorruptStore(lineno, f"malformed record ({exc})") from None
            if lineno == 1 or not store._entries:
                store.dimension = len(entry.embedding)
            try:
                store.put(entry)
            except (DuplicateId, DimensionMismatch, NotNormalized) as exc:
                raise CorruptStore(lineno, str(exc)) from None
        if store._entries and store.dimension != dimension:
            raise DimensionMismatch(
                f"store holds dimension {store.dimension}, configuration expects {dimension}")
        return store

    @classmethod
    def load(cls, path: Path, dimension: int = 256, create: bool = False) -> "RetrievalStore":
        path = Path(path)
        if not path.exists():
            if not create:
                raise StoreNotFound(f"{path}: store file does not exist (run 'store init')")
            log.info("store %s not found; starting empty", path)
            return cls(dimension, path)
        store = cls.loads(path.read_text(encoding="utf-8"), dimension, path)
        log.info("loaded %d entr%s from %s", len(store), "y" if len(store) == 1 else "ies", path)
        return store
