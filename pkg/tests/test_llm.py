import json

import pytest

from laycrit.critique import PRESETS
from laycrit.layout import ParseStatus
from laycrit.llm import (
    EndpointConfig,
    EndpointUnavailable,
    best_of_n,
    build_prompt,
    rerank,
    sample_candidates,
    sample_candidates_timed,
    winner_layout_json,
)

from conftest import make_spec
from mock_endpoint import serve

CENTERED = '<design>one centered line</design><layout>{"elements": [{"category": "text", "x": 0.3, "y": 0.45, "w": 0.4, "h": 0.1}]}</layout>'
MISSING = "I would place the text in the middle."
MISMATCH = '<design>two lines</design><layout>{"elements": [{"category": "logo", "x": 0.3, "y": 0.45, "w": 0.4, "h": 0.1}]}</layout>'


def test_prompt_deterministic_and_masked():
    spec = make_spec(["text", "underlay", "logo"])
    assert build_prompt(spec) == build_prompt(spec)
    assert build_prompt(spec).count("[MASK]") == 3
    assert "<design>" in build_prompt(spec) and "<layout>" in build_prompt(spec)


def test_replies_returned_in_order():
    with serve(["a", "b", "c"]) as (url, srv):
        cfg = EndpointConfig(base_url=url, max_parallel=1)
        assert sample_candidates(cfg, "p", 3) == ["a", "b", "c"]
        body = srv.requests[0]["body"]
        assert body["messages"][-1]["content"] == "p" and body["temperature"] == 0.9


def test_single_request_for_n1():
    with serve(["a"]) as (url, srv):
        sample_candidates(EndpointConfig(base_url=url), "p", 1)
        assert srv.hits == 1


def test_timeout_degrades_to_empty_candidate():
    with serve(["a", "b", {"delay": 1.5, "content": "late"}, "d"]) as (url, _):
        cfg = EndpointConfig(base_url=url, timeout=0.5, retries=0, max_parallel=4)
        texts, latencies = sample_candidates_timed(cfg, "p", 4)
    assert len(texts) == 4 and texts.count("") == 1
    assert len(latencies) == 4


def test_all_failures_raise():
    with serve([{"status": 500}]) as (url, _):
        with pytest.raises(EndpointUnavailable):
            sample_candidates(EndpointConfig(base_url=url, retries=1), "p", 2)


def test_retry_recovers():
    with serve([{"status": 503}, "ok"]) as (url, srv):
        assert sample_candidates(EndpointConfig(base_url=url, retries=1), "p", 1) == ["ok"]
        assert srv.hits == 2


def test_api_key_header(monkeypatch):
    monkeypatch.setenv("LAYCRIT_API_KEY", "sekrit")
    with serve(["a"]) as (url, srv):
        sample_candidates(EndpointConfig(base_url=url), "p", 1)
        assert srv.requests[0]["auth"] == "Bearer sekrit"


def test_rerank_prefers_valid():
    spec = make_spec(["text"])
    res = rerank(spec, [MISSING, CENTERED])
    assert res.winner == 1
    assert res.candidates[0].parsed.parse_status is ParseStatus.MISSING_BLOCK
    assert res.candidates[0].reward.r_total == pytest.approx(0.01)


def test_rerank_single_and_ties():
    spec = make_spec(["text"])
    assert rerank(spec, [MISSING]).winner == 0
    assert rerank(spec, [CENTERED, CENTERED]).winner == 0


def test_rerank_empty():
    with pytest.raises(ValueError):
        rerank(make_spec(["text"]), [])


def test_best_of_n_end_to_end():
    spec = make_spec(["text"])
    with serve([MISSING, MISMATCH, CENTERED]) as (url, _):
        res = best_of_n(EndpointConfig(base_url=url, max_parallel=3), spec, 3, rw=PRESETS["quality_focused"])
    assert res.best.parsed.parse_status is ParseStatus.VALID
    assert json.loads(winner_layout_json(res))["elements"][0]["category"] == "text"
    assert json.loads(json.dumps(res.to_dict()))["winner"] == res.winner
