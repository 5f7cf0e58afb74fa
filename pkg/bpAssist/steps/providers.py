"""
Step: providers

Model-facing interfaces used by repair and explain, with three back ends:

  HttpProvider / HttpEmbedder   JSON over HTTP POST (``requests``), endpoint
                                and bearer token from configuration.
  ScriptedProvider              replays a fixture mapping request digests to
                                responses; counts every call.
  ExecutionClassifier           answers "will this pass?" by running the test.

Request payloads::

  {"mode": "generate", "student_source", "failed_test", "n",
   "task_description", "reference_source"}   -> {"candidates": [str]}
  {"mode": "classify", "student_source", "failed_test"} -> {"pass": bool}
  {"mode": "explain", "line", "kind", "provenance", "variables",
   "function", "failed_test", "template"}     -> {"text": str}
  {"texts": [str]}                            -> {"vectors": [[float]]}

A scripted fixture file is one JSON object whose keys are
``request_digest(payload)`` values and whose values are the responses above.
"""
from __future__ import annotations

import hashlib
import json
import logging
import threading
from collections import Counter
from pathlib import Path
from typing import Any, Dict, List, Optional, Protocol, Sequence, runtime_checkable

import numpy as np
import requests

from ..errors import BpAssistError, ProviderError
from ..minilang import DEFAULT_STEP_LIMIT, TestCase, parse, run_test
from .store import normalize

log = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 60


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                               protocols                                  │
# ╰──────────────────────────────────────────────────────────────────────────╯
@runtime_checkable
class EmbeddingProvider(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


@runtime_checkable
class GeneratorProvider(Protocol):
    def generate(self, task_description: str, student_source: str, failed_test: TestCase,
                 n: int, reference_source: Optional[str] = None) -> List[str]: ...


@runtime_checkable
class ClassifierProvider(Protocol):
    def predict_pass(self, candidate_source: str, failed_test: TestCase) -> bool: ...


@runtime_checkable
class TextProvider(Protocol):
    def explain(self, payload: Dict[str, Any]) -> str: ...


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                payloads                                  │
# ╰──────────────────────────────────────────────────────────────────────────╯
def generate_payload(task_description: str, student_source: str, failed_test: TestCase,
                     n: int, reference_source: Optional[str] = None) -> Dict[str, Any]:
    return {
        "mode": "generate",
        "student_source": student_source,
        "failed_test": failed_test.to_json(),
        "n": n,
        "task_description": task_description,
        "reference_source": reference_source,
    }


def classify_payload(candidate_source: str, failed_test: TestCase) -> Dict[str, Any]:
    return {
        "mode": "classify",
        "student_source": candidate_source,
        "failed_test": failed_test.to_json(),
    }


def request_digest(payload: Dict[str, Any]) -> str:
    canonical = json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _candidates(response: Any, n: int) -> List[str]:
    if not isinstance(response, dict) or not isinstance(response.get("candidates"), list):
        raise ProviderError("generate response must be {\"candidates\": [str]}")
    texts = response["candidates"]
    if len(texts) != n or not all(isinstance(t, str) for t in texts):
        raise ProviderError(f"generator returned {len(texts)} candidate(s), expected {n}")
    return list(texts)


def _verdict(response: Any) -> bool:
    if not isinstance(response, dict) or not isinstance(response.get("pass"), bool):
        raise ProviderError("classify response must be {\"pass\": bool}")
    return response["pass"]


def _text(response: Any) -> str:
    if not isinstance(response, dict) or not isinstance(response.get("text"), str):
        raise ProviderError("explain response must be {\"text\": str}")
    return response["text"]


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                                  HTTP                                    │
# ╰──────────────────────────────────────────────────────────────────────────╯
class _HttpClient:
    def __init__(self, url: str, token: Optional[str] = None, timeout: float = DEFAULT_TIMEOUT) -> None:
        self.url = url
        self.token = token
        self.timeout = timeout

    def post(self, payload: Dict[str, Any]) -> Any:
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            response = requests.post(self.url, headers=headers, json=payload, timeout=self.timeout)
            response.raise_for_status()
            return response.json()
        except requests.exceptions.RequestException as exc:
            raise ProviderError(f"{self.url}: {exc}") from None
        except ValueError as exc:
            raise ProviderError(f"{self.url}: response is not JSON ({exc})") from None


class HttpProvider(_HttpClient):
    """Generator, classifier and text provider behind one endpoint."""

    def generate(self, task_description: str, student_source: str, failed_test: TestCase,
                 n: int, reference_source: Optional[str] = None) -> List[str]:
        payload = generate_payload(task_description, student_source, failed_test, n, reference_source)
        return _candidates(self.post(payload), n)

    def predict_pass(self, candidate_source: str, failed_test: TestCase) -> bool:
        return _verdict(self.post(classify_payload(candidate_source, failed_test)))

    def explain(self, payload: Dict[str, Any]) -> str:
        return _text(self.post(dict(payload, mode="explain")))


class HttpEmbedder(_HttpClient):
    name = "http"

    def __init__(self, url: str, token: Optional[str] = None, dimension: int = 256,
                 timeout: float = DEFAULT_TIMEOUT) -> None:
        super().__init__(url, token, timeout)
        self.dimension = dimension

    def embed_many(self, texts: Sequence[str]) -> List[np.ndarray]:
        response = self.post({"texts": list(texts)})
        vectors = response.get("vectors") if isinstance(response, dict) else None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("embedding response must be {\"vectors\": [[float]]}, one per text")
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.dimension,):
                raise ProviderError(f"embedding has dimension {arr.size}, expected {self.dimension}")
            out.append(normalize(arr))
        return out

    def embed(self, text: str) -> np.ndarray:
        return self.embed_many([text])[0]


# ╭──────────────────────────────────────────────────────────────────────────╮
# │                           scripted / execution                           │
# ╰──────────────────────────────────────────────────────────────────────────╯
class ExecutionClassifier:
    """Ground-truth classifier: parse the candidate and run the failed test."""

    def __init__(self, step_limit: int = DEFAULT_STEP_LIMIT) -> None:
        self.step_limit = step_limit
        self.calls = 0
        self._lock = threading.Lock()

    def predict_pass(self, candidate_source: str, failed_test: TestCase) -> bool:
        with self._lock:
            self.calls += 1
        try:
            program = parse(candidate_source)
        except BpAssistError:
            return False
        return run_test(program, failed_test, self.step_limit).passed


class ScriptedProvider:
    """
    Replays scripted responses keyed by ``request_digest`` of the payload.

    Classification requests without a scripted answer go to
    ``fallback_classifier`` when one is given; anything else unscripted is a
    ProviderError.
    """

    def __init__(self, responses: Dict[str, Any],
                 fallback_classifier: Optional[ClassifierProvider] = None) -> None:
        self.responses = dict(responses)
        self.fallback_classifier = fallback_classifier
        self.calls: Counter = Counter()
        self.requests: List[Dict[str, Any]] = []
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: Path,
                  fallback_classifier: Optional[ClassifierProvider] = None) -> "ScriptedProvider":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ProviderError(f"{path}: cannot read scripted fixture ({exc})") from None
        if not isinstance(doc, dict):
            raise ProviderError(f"{path}: fixture must map digests to responses")
        return cls(doc, fallback_classifier)

    def _lookup(self, payload: Dict[str, Any]) -> Any:
        digest = request_digest(payload)
        with self._lock:
            self.calls[payload.get("mode", "embed")] += 1
            self.requests.append(payload)
        if digest not in self.responses:
            raise ProviderError(f"no scripted {payload.get('mode')} response for digest {digest[:12]}")
        return self.responses[digest]

    @property
    def total_calls(self) -> int:
        return sum(self.calls.values())

    def generate(self, task_description: str, student_source: str, failed_test: TestCase,
                 n: int, reference_source: Optional[str] = None) -> List[str]:
        payload = generate_payload(task_description, student_source, failed_test, n, reference_source)
        return _candidates(self._lookup(payload), n)

    def predict_pass(self, candidate_source: str, failed_test: TestCase) -> bool:
        payload = classify_payload(candidate_source, failed_test)
        if self.fallback_classifier is not None and request_digest(payload) not in self.responses:
            with self._lock:
                self.calls["classify"] += 1
                self.requests.append(payload)
            return self.fallback_classifier.predict_pass(candidate_source, failed_test)
        return _verdict(self._lookup(payload))

    def explain(self, payload: Dict[str, Any]) -> str:
        return _text(self._lookup(dict(payload, mode="explain")))
