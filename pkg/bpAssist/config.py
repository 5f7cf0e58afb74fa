"""
Configuration objects shared by the pipeline stages.

A config file is a single JSON document mirroring ``CliConfig``::

    {
      "store_path": "store.jsonl",
      "corpus_path": "bpAssist/corpus",
      "output_format": "json",
      "step_limit": 100000,
      "recommender": {"max_breakpoints": 10, "h1_include_exit": true},
      "repair": {"n_candidates": 5, "fallback_execute": false,
                 "retrieval": {"similarity_threshold": 0.8, "dimension": 256,
                               "embedder": "hashing"}}
    }

Values given on the command line override the file.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

from .errors import ConfigError

OUTPUT_FORMATS = ("json", "pretty", "annotated-source")


@dataclass(frozen=True)
class RecommenderConfig:
    max_breakpoints: int = 10
    h1_include_exit: bool = True

    def __post_init__(self) -> None:
        if self.max_breakpoints < 0:
            raise ConfigError("max_breakpoints must be >= 0")


@dataclass(frozen=True)
class RetrievalConfig:
    similarity_threshold: float = 0.8
    dimension: int = 256
    embedder: str = "hashing"  # "hashing" | "http"

    def __post_init__(self) -> None:
        if not 0.0 <= self.similarity_threshold <= 1.0:
            raise ConfigError("similarity_threshold must lie in [0, 1]")
        if self.dimension < 1:
            raise ConfigError("dimension must be positive")


@dataclass(frozen=True)
class RepairConfig:
    n_candidates: int = 5
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    fallback_execute: bool = False

    def __post_init__(self) -> None:
        if self.n_candidates < 1:
            raise ConfigError("n_candidates must be >= 1")


@dataclass(frozen=True)
class CliConfig:
    store_path: Optional[Path] = None
    corpus_path: Optional[Path] = None
    provider_url: Optional[str] = None
    provider_token: Optional[str] = None
    embedder_url: Optional[str] = None
    recommender: RecommenderConfig = field(default_factory=RecommenderConfig)
    repair: RepairConfig = field(default_factory=RepairConfig)
    output_format: str = "json"
    step_limit: int = 100_000

    def __post_init__(self) -> None:
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"output_format must be one of {', '.join(OUTPUT_FORMATS)}")

    def override(self, **flags: Any) -> "CliConfig":
        """Apply command-line flags; ``None`` means "not given"."""
        top = {k: v for k, v in flags.items() if v is not None and k in _names(CliConfig)}
        rec = {k: v for k, v in flags.items() if v is not None and k in _names(RecommenderConfig)}
        cfg = replace(self, **top)
        if rec:
            cfg = replace(cfg, recommender=replace(cfg.recommender, **rec))
        return cfg

    def to_json(self) -> Dict[str, Any]:
        doc = asdict(self)
        for key in ("store_path", "corpus_path"):
            if doc[key] is not None:
                doc[key] = str(doc[key])
        return doc


def _names(cls: type) -> set:
    return {f.name for f in fields(cls)}


def _build(cls: type, doc: Any, where: str) -> Any:
    if not isinstance(doc, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(doc) - _names(cls)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    try:
        return cls(**doc)
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_json(doc: Dict[str, Any]) -> CliConfig:
    doc = dict(doc)
    if "recommender" in doc:
        doc["recommender"] = _build(RecommenderConfig, doc["recommender"], "recommender")
    if "repair" in doc:
        repair = dict(doc["repair"]) if isinstance(doc["repair"], dict) else doc["repair"]
        if isinstance(repair, dict) and "retrieval" in repair:
            repair["retrieval"] = _build(RetrievalConfig, repair["retrieval"], "repair.retrieval")
        doc["repair"] = _build(RepairConfig, repair, "repair")
    for key in ("store_path", "corpus_path"):
        if doc.get(key) is not None:
            doc[key] = Path(doc[key])
    return _build(CliConfig, doc, "config")


def load_config(path: Optional[Path]) -> CliConfig:
    if path is None:
        return CliConfig()
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_json(doc)
