import json
import os
from pathlib import Path

import pytest

import aria

FIXTURES = Path(os.environ.get("ARIA_FIXTURES", Path(__file__).resolve().parents[2] / "tests" / "fixtures"))


def test_metrics_match_published_column():
    m = aria.metrics(50, 12, 5, 2)
    assert [aria.percent(m[k]) for k in ("accuracy", "precision", "recall", "f1")] == [89.9, 90.9, 96.2, 93.5]


def test_aggregate_and_decide():
    assert aria.aggregate(["PerfectMatch", "Minor Inconsistency"]) == pytest.approx(0.8)
    assert aria.aggregate(["Perfect Match", "Major Inconsistency"]) == 0.0
    assert aria.decide(0.64, 0.0)
    assert not aria.decide(0.64, 0.9)
    with pytest.raises(ValueError):
        aria.aggregate(["sort of"])


def test_graph_orders_dependencies_first():
    g = aria.Graph("statement")
    g.add("nil ideal")
    g.add("ideal", "nil ideal")
    assert g.topological_order() == ["ideal", "nil ideal", "statement"]
    assert g.depth("ideal") == 2
    with pytest.raises(aria.CycleError):
        g.add("statement", "ideal")
    assert len(g) == 3
    assert json.loads(g.to_json())["root"] == "n0"


def test_parsers():
    d = aria.parse_diagnostics("f.lean:3:10: error: unknown constant 'IsNil'")
    assert d == [{"severity": "error", "line": 3, "column": 10, "message": "unknown constant 'IsNil'"}]
    s = aria.parse_subtasks("Conditions:\n1. R is a ring\nConclusions:\n1. R is nil")
    assert s == {"conditions": ["R is a ring"], "conclusions": ["R is nil"]}
    assert aria.parse_subtasks("nothing") is None


def test_config_errors_raise():
    with pytest.raises(aria.ConfigError):
        aria.load_config("/nonexistent/aria.conf")


def test_formalize_and_replay(tmp_path):
    conf = str(FIXTURES / "koethe" / "koethe.conf")
    code = aria.formalize(str(FIXTURES / "koethe" / "koethe.txt"), conf, str(tmp_path), score=True)
    assert code == 0
    lean = (tmp_path / "koethe.lean").read_text()
    assert lean.index("IsNil") < lean.index("theorem")
    assert aria.replay(str(tmp_path / "transcript.jsonl")) == 0
    assert (tmp_path / "replay" / "koethe.lean").read_text() == lean
