from __future__ import annotations

import json
from pathlib import Path

import pytest

from bpAssist.config import CliConfig, RecommenderConfig, RetrievalConfig, load_config
from bpAssist.errors import ConfigError


def write(tmp_path, doc):
    path = tmp_path / "bpassist.json"
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


def test_defaults():
    cfg = load_config(None)
    assert cfg == CliConfig()
    assert cfg.recommender.max_breakpoints == 10
    assert cfg.recommender.h1_include_exit is True
    assert cfg.repair.n_candidates == 5
    assert cfg.repair.retrieval.similarity_threshold == 0.8
    assert cfg.output_format == "json"


def test_nested_file(tmp_path):
    cfg = load_config(write(tmp_path, {
        "store_path": "s.jsonl",
        "output_format": "pretty",
        "recommender": {"max_breakpoints": 3},
        "repair": {"n_candidates": 2, "retrieval": {"similarity_threshold": 0.9}},
    }))
    assert cfg.store_path == Path("s.jsonl")
    assert cfg.output_format == "pretty"
    assert cfg.recommender == RecommenderConfig(max_breakpoints=3)
    assert cfg.repair.n_candidates == 2
    assert cfg.repair.retrieval == RetrievalConfig(similarity_threshold=0.9)
    assert cfg.to_json()["store_path"] == "s.jsonl"


def test_flags_override_file(tmp_path):
    cfg = load_config(write(tmp_path, {"recommender": {"max_breakpoints": 3}, "output_format": "pretty"}))
    cfg = cfg.override(max_breakpoints=None, output_format="annotated-source", h1_include_exit=False)
    assert cfg.recommender.max_breakpoints == 3
    assert cfg.recommender.h1_include_exit is False
    assert cfg.output_format == "annotated-source"


@pytest.mark.parametrize("doc, match", [
    ({"colour": "red"}, "unknown key"),
    ({"recommender": {"max_breakpoints": -1}}, "max_breakpoints"),
    ({"recommender": []}, "expected an object"),
    ({"repair": {"retrieval": {"similarity_threshold": 1.5}}}, "similarity_threshold"),
    ({"output_format": "xml"}, "output_format"),
    ("{not json", "bpassist.json"),
])
def test_bad_files(tmp_path, doc, match):
    with pytest.raises(ConfigError, match=match):
        load_config(write(tmp_path, doc))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.json")
